"""TVHT timing profiles and the subcarrier grid.

A :class:`TvhtProfile` holds every size and length the transmit chain needs
for one (method, channel unit) pair. Lengths ending in ``_final`` are counted
in samples at the final output rate, i.e. ``upsample_factor_u`` times the base
IFFT rate.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path


class ConfigurationError(ValueError):
    """Raised when a profile or override violates a profile invariant."""


class Method(str, enum.Enum):
    ASP = "asp"
    SOA = "soa"
    PRO = "pro"
    # unshaped reference chain: rectangular pulse, no FIR
    RECT = "rect"

    @classmethod
    def parse(cls, value: "Method | str") -> "Method":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ConfigurationError(f"unknown method {value!r}; expected one of {names}") from None


class Bcu(str, enum.Enum):
    MHZ6 = "6MHz"
    MHZ7 = "7MHz"
    MHZ8 = "8MHz"

    @classmethod
    def parse(cls, value: "Bcu | str") -> "Bcu":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower().replace(" ", "")
        for bcu in cls:
            if text in (bcu.value.lower(), bcu.value.lower().rstrip("mhz")):
                return bcu
        raise ConfigurationError(f"unknown channel unit {value!r}; expected 6MHz, 7MHz or 8MHz")


@dataclass(frozen=True)
class SubcarrierMap:
    """Data, pilot and null subcarrier indices of a TVHT channel unit."""

    data_indices: frozenset
    pilot_indices: frozenset
    null_indices: frozenset

    @classmethod
    def tvht(cls, total_slots: int = 144) -> "SubcarrierMap":
        pilots = frozenset({-53, -25, -11, 11, 25, 53})
        occupied = set(range(-58, -1)) | set(range(2, 59))
        data = frozenset(occupied - pilots)
        grid = set(range(-(total_slots // 2), total_slots - total_slots // 2))
        return cls(data, pilots, frozenset(grid - data - pilots))

    @property
    def occupied_indices(self) -> frozenset:
        return self.data_indices | self.pilot_indices

    @property
    def total_slots(self) -> int:
        return len(self.data_indices) + len(self.pilot_indices) + len(self.null_indices)

    @property
    def edge_index(self) -> int:
        return max(abs(k) for k in self.occupied_indices)

    def sorted_data(self) -> list[int]:
        return sorted(self.data_indices)

    def sorted_pilots(self) -> list[int]:
        return sorted(self.pilot_indices)


# channel unit -> (bandwidth in Hz, grid slots, guard interval in seconds)
_BCU_TABLE = {
    Bcu.MHZ6: (6e6, 144, 3.0e-6),
    Bcu.MHZ7: (7e6, 168, 3.0e-6),
    Bcu.MHZ8: (8e6, 144, 2.25e-6),
}

# per-method lengths in multiples of U
_METHOD_TABLE = {
    #               M  L  window           FIR/U  beta/U
    Method.ASP: (1, 8, "asymmetric", 9, 16),
    Method.SOA: (4, 2, "raised_cosine", 5, 4),
    Method.PRO: (4, 2, "asymmetric", 5, 16),
    Method.RECT: (4, 2, "rectangular", 0, 0),
}

N_BASE = 128
N_CP_BASE = 16
UPSAMPLE_U = 8
CP_PER_U = 16
CIR_PER_U = 7


@dataclass(frozen=True)
class TvhtProfile:
    method: Method
    bcu: Bcu
    bcu_bandwidth_hz: float
    n_base: int
    n_cp_base: int
    total_subcarrier_slots: int
    subcarrier_spacing_hz: float
    base_sample_rate_hz: float
    upsample_factor_u: int
    guard_extension_m: int
    interpolation_l: int
    fir_len_final: int
    beta_nt_final: int
    cir_len_final: int
    window_family: str
    guard_interval_s: float
    subcarriers: SubcarrierMap = field(default_factory=SubcarrierMap.tvht, compare=False)
    extrapolated: bool = False

    @property
    def final_rate_hz(self) -> float:
        return self.upsample_factor_u * self.base_sample_rate_hz

    @property
    def ifft_rate_hz(self) -> float:
        """Rate after the (possibly enlarged) IFFT, before zero stuffing."""
        return self.guard_extension_m * self.base_sample_rate_hz

    @property
    def n_fft(self) -> int:
        return self.n_base * self.guard_extension_m

    @property
    def n_cp(self) -> int:
        """CP length at the IFFT rate."""
        return self.n_cp_base * self.guard_extension_m

    @property
    def symbol_len(self) -> int:
        """Extended symbol length N_T' = M (N + N_CP) at the IFFT rate."""
        return self.n_fft + self.n_cp

    @property
    def cp_len_final(self) -> int:
        return self.n_cp_base * self.upsample_factor_u

    @property
    def beta_nt(self) -> int:
        """Smoothing edge length at the IFFT rate (the rate windows are applied at)."""
        return self.beta_nt_final // self.interpolation_l

    @property
    def occupied_edge_hz(self) -> float:
        return self.subcarriers.edge_index * self.subcarrier_spacing_hz

    def guard_duration_from_fields(self) -> float:
        return self.n_cp_base * self.total_subcarrier_slots / (self.n_base * self.bcu_bandwidth_hz)

    def replace(self, **changes) -> "TvhtProfile":
        """Return a new profile with ``changes`` applied and re-validated."""
        new = dataclasses.replace(self, **changes)
        problems = validate_profile(new)
        if problems:
            raise ConfigurationError("; ".join(str(v) for v in problems))
        return new

    @property
    def name(self) -> str:
        return f"{self.method.value}-{self.bcu.value.lower()}"


@dataclass(frozen=True)
class Violation:
    field: str
    expected: object
    actual: object
    message: str = ""

    def __str__(self) -> str:
        text = self.message or f"{self.field} expected {self.expected}, got {self.actual}"
        return text


def load_profile(method: Method | str = Method.PRO, bcu: Bcu | str = Bcu.MHZ8, **overrides) -> TvhtProfile:
    """Build the shipped profile for ``method`` on channel unit ``bcu``.

    Keyword overrides are applied on top and the result is validated; an
    inconsistent override raises :class:`ConfigurationError` naming the
    violated invariant.
    """
    method = Method.parse(method)
    bcu = Bcu.parse(bcu)
    bandwidth, slots, guard = _BCU_TABLE[bcu]
    m, l, family, fir_u, beta_u = _METHOD_TABLE[method]
    spacing = bandwidth / slots
    profile = TvhtProfile(
        method=method,
        bcu=bcu,
        bcu_bandwidth_hz=bandwidth,
        n_base=N_BASE,
        n_cp_base=N_CP_BASE,
        total_subcarrier_slots=slots,
        subcarrier_spacing_hz=spacing,
        base_sample_rate_hz=N_BASE * spacing,
        upsample_factor_u=UPSAMPLE_U,
        guard_extension_m=m,
        interpolation_l=l,
        fir_len_final=fir_u * UPSAMPLE_U,
        beta_nt_final=beta_u * UPSAMPLE_U,
        cir_len_final=CIR_PER_U * UPSAMPLE_U,
        window_family=family,
        guard_interval_s=guard,
        subcarriers=SubcarrierMap.tvht(slots),
        # per-method lengths are only published for the 8 MHz unit
        extrapolated=bcu is not Bcu.MHZ8,
    )
    if overrides:
        overrides = {k: _coerce(k, v) for k, v in overrides.items()}
        if "bcu_bandwidth_hz" in overrides or "total_subcarrier_slots" in overrides:
            bw = overrides.get("bcu_bandwidth_hz", profile.bcu_bandwidth_hz)
            ns = overrides.get("total_subcarrier_slots", profile.total_subcarrier_slots)
            overrides.setdefault("subcarrier_spacing_hz", bw / ns)
        if "subcarrier_spacing_hz" in overrides or "n_base" in overrides:
            overrides.setdefault(
                "base_sample_rate_hz",
                overrides.get("n_base", profile.n_base)
                * overrides.get("subcarrier_spacing_hz", profile.subcarrier_spacing_hz),
            )
        try:
            profile = dataclasses.replace(profile, **overrides)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None
    problems = validate_profile(profile)
    if problems:
        raise ConfigurationError("; ".join(str(v) for v in problems))
    return profile


def validate_profile(p: TvhtProfile) -> list[Violation]:
    """List every broken profile invariant; empty when the profile is consistent."""
    out: list[Violation] = []
    m, l, u = p.guard_extension_m, p.interpolation_l, p.upsample_factor_u
    if m * l != u:
        out.append(Violation("interpolation_l", u, m * l, f"M×L != U ({m}×{l} != {u})"))
    for name in ("n_base", "n_cp_base", "guard_extension_m", "interpolation_l", "upsample_factor_u"):
        if getattr(p, name) < 1:
            out.append(Violation(name, ">= 1", getattr(p, name)))
    if not math.isclose(p.subcarrier_spacing_hz * p.total_subcarrier_slots, p.bcu_bandwidth_hz, rel_tol=1e-15):
        out.append(
            Violation(
                "subcarrier_spacing_hz",
                p.bcu_bandwidth_hz / p.total_subcarrier_slots,
                p.subcarrier_spacing_hz,
                "subcarrier spacing × slots != channel bandwidth",
            )
        )
    if not math.isclose(p.base_sample_rate_hz, p.n_base * p.subcarrier_spacing_hz, rel_tol=1e-12):
        out.append(Violation("base_sample_rate_hz", p.n_base * p.subcarrier_spacing_hz, p.base_sample_rate_hz))
    gi = p.guard_duration_from_fields()
    if abs(gi - p.guard_interval_s) > 1e-12:
        out.append(Violation("n_cp_base", p.guard_interval_s, gi, f"guard interval {gi:.4g} s != {p.guard_interval_s:.4g} s"))
    if p.beta_nt_final < 0 or p.beta_nt_final % max(l, 1):
        out.append(Violation("beta_nt_final", f"non-negative multiple of L={l}", p.beta_nt_final))
    elif p.beta_nt >= p.symbol_len:
        out.append(Violation("beta_nt_final", f"< {p.symbol_len * l}", p.beta_nt_final))
    if p.window_family == "asymmetric" and p.beta_nt < 2:
        out.append(Violation("beta_nt_final", f">= {2 * l}", p.beta_nt_final, "asymmetric window needs beta >= 2"))
    if p.fir_len_final and p.fir_len_final < 3:
        out.append(Violation("fir_len_final", ">= 3 or 0 (no FIR)", p.fir_len_final))
    if p.cir_len_final > CIR_PER_U * p.upsample_factor_u or p.cir_len_final < 1:
        out.append(Violation("cir_len_final", f"1..{CIR_PER_U * p.upsample_factor_u}", p.cir_len_final))
    if p.window_family not in ("rectangular", "raised_cosine", "vestigial_symmetry", "asymmetric"):
        out.append(Violation("window_family", "rectangular|raised_cosine|vestigial_symmetry|asymmetric", p.window_family))

    sc = p.subcarriers
    if len(sc.data_indices) != 108:
        out.append(Violation("data_indices", 108, len(sc.data_indices), f"data subcarrier count {len(sc.data_indices)} != 108"))
    if len(sc.pilot_indices) != 6:
        out.append(Violation("pilot_indices", 6, len(sc.pilot_indices), f"pilot subcarrier count {len(sc.pilot_indices)} != 6"))
    if (sc.data_indices & sc.pilot_indices) or (sc.null_indices & sc.occupied_indices):
        out.append(Violation("subcarriers", "disjoint sets", "overlap", "data/pilot/null sets overlap"))
    if {0, 1, -1} & sc.occupied_indices:
        out.append(Violation("subcarriers", "DC and ±1 null", sorted({0, 1, -1} & sc.occupied_indices)))
    if sc.occupied_indices and sc.edge_index != 58:
        out.append(Violation("subcarriers", "highest index 58", sc.edge_index))
    if sc.occupied_indices and sc.edge_index >= p.n_base // 2:
        out.append(Violation("n_base", f"> {2 * sc.edge_index}", p.n_base, "occupied band does not fit the IFFT"))
    return out


# ---------------------------------------------------------------- config files

_INT_FIELDS = {f.name for f in dataclasses.fields(TvhtProfile) if f.type == "int"}
_FLOAT_FIELDS = {f.name for f in dataclasses.fields(TvhtProfile) if f.type == "float"}
_SKIP_FIELDS = {"subcarriers"}


def _coerce(key: str, value):
    if key not in {f.name for f in dataclasses.fields(TvhtProfile)} or key in _SKIP_FIELDS:
        raise ConfigurationError(f"unknown profile field {key!r}")
    if not isinstance(value, str):
        return value
    if key in _INT_FIELDS:
        return int(value)
    if key in _FLOAT_FIELDS:
        return float(value)
    if key == "method":
        return Method.parse(value)
    if key == "bcu":
        return Bcu.parse(value)
    if key == "extrapolated":
        return value.strip().lower() in ("1", "true", "yes")
    return value


def profile_to_text(p: TvhtProfile) -> str:
    lines = []
    for f in dataclasses.fields(p):
        if f.name in _SKIP_FIELDS:
            continue
        value = getattr(p, f.name)
        if isinstance(value, enum.Enum):
            value = value.value
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def parse_key_values(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def profile_from_text(text: str) -> TvhtProfile:
    values = parse_key_values(text)
    method = values.pop("method", Method.PRO.value)
    bcu = values.pop("bcu", Bcu.MHZ8.value)
    # derived fields are recomputed unless given explicitly
    return load_profile(method, bcu, **values)


def save_profile(p: TvhtProfile, path: str | Path) -> None:
    Path(path).write_text(profile_to_text(p))


def read_profile(path: str | Path) -> TvhtProfile:
    return profile_from_text(Path(path).read_text())


def profile_by_name(name: str, **overrides) -> TvhtProfile:
    """Resolve shipped names like ``pro-8mhz``."""
    try:
        method, bcu = name.lower().split("-", 1)
    except ValueError:
        raise ConfigurationError(f"profile name {name!r} is not of the form <method>-<bcu>") from None
    return load_profile(method, bcu, **overrides)


SHIPPED_PROFILES = tuple(f"{m.value}-{b.value.lower()}" for m in Method for b in Bcu)
