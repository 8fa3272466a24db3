"""Figure presets: each returns curve data plus a summary of named checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import (
    SemMask,
    check_sem,
    compare_spectra,
    default_stopband,
    estimate_psd,
    image_bands,
    image_mask,
)
from .link import LinkResult, run_ser_sweep, self_interference, snr_at_ser
from .params import Method, TvhtProfile, load_profile
from .shaping import design_fir, image_band_edges, interpolate, random_payload, shape_symbols
from .windowing import make_window

DEFAULTS = {
    "n_symbols": 100,
    "segment_len": 4096,
    "overlap": 0.5,
    "mask_floor_dbr": -55.0,
    "mask_tolerance_db": 3.0,
    "snr_grid": "0,1,2,3,4,5,6,7,8,9,10,11,12",
    "min_errors": 200,
    "max_symbols": 2_000_000,
    "ofdm_per_trial": 200,
    "constellation": "qpsk",
}

# fig2 curves: name -> (family, smoothing edge in base-rate samples)
FIG2_CURVES = {
    "RC1": ("raised_cosine", 1),
    "RC4": ("raised_cosine", 4),
    "VS4": ("vestigial_symmetry", 4),
    "AS4": ("asymmetric", 4),
    "AS16": ("asymmetric", 16),
}


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.value:.4g} ({self.threshold})"


@dataclass
class ExperimentResult:
    preset: str
    settings: dict
    checks: list[Check] = field(default_factory=list)
    curves: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def settings_with(overrides: dict | None) -> tuple[dict, dict]:
    """Split ``overrides`` into experiment settings and profile overrides."""
    settings = dict(DEFAULTS)
    profile_over = {}
    fields = set(TvhtProfile.__dataclass_fields__)
    for key, value in (overrides or {}).items():
        if key in DEFAULTS:
            kind = type(DEFAULTS[key])
            settings[key] = kind(value) if kind is not str else str(value)
        elif key in fields:
            profile_over[key] = value
        else:
            raise KeyError(f"unknown setting {key!r}")
    return settings, profile_over


def _payload(seed: int, n: int, constellation: str) -> np.ndarray:
    return random_payload(np.random.default_rng(seed), n, constellation)


def fig2(bcu: str = "8MHz", seed: int = 0, overrides: dict | None = None) -> ExperimentResult:
    """Windowed spectra before interpolation, at the extended-IFFT rate."""
    s, pover = settings_with(overrides)
    p = load_profile(Method.PRO, bcu, **pover)
    payload = _payload(seed, s["n_symbols"], s["constellation"])
    scale = p.guard_extension_m  # base-rate samples -> IFFT-rate samples
    bursts = {}
    for name, (family, n) in FIG2_CURVES.items():
        w = make_window(family, n * scale, p.symbol_len)
        bursts[name] = shape_symbols(payload, p, s["constellation"], window=w)
    cmp = compare_spectra(bursts, default_stopband(p), s["segment_len"], s["overlap"], p)
    mx = {k: v["max_dbr"] for k, v in cmp["stats"].items()}
    res = ExperimentResult("fig2", s, curves=cmp["psd"])
    res.extra["stopband"] = cmp["stats"]
    res.checks = [
        Check("AS16 below RC4 by >= 10 dB", mx["RC4"] - mx["AS16"] >= 10, mx["RC4"] - mx["AS16"], ">= 10 dB"),
        Check("RC4 and AS4 within 3 dB", abs(mx["RC4"] - mx["AS4"]) <= 3, abs(mx["RC4"] - mx["AS4"]), "<= 3 dB"),
        Check("RC4 below RC1 by >= 10 dB", mx["RC1"] - mx["RC4"] >= 10, mx["RC1"] - mx["RC4"], ">= 10 dB"),
    ]
    return res


def fig3(bcu: str = "8MHz", seed: int = 0, overrides: dict | None = None) -> ExperimentResult:
    """Spectra after zero stuffing, before the FIR."""
    s, pover = settings_with(overrides)
    payload = _payload(seed, s["n_symbols"], s["constellation"])
    curves, profiles = {}, {}
    for name, method in (("RC4", Method.SOA), ("ASp", Method.ASP), ("Pro", Method.PRO)):
        p = load_profile(method, bcu, **pover)
        profiles[name] = p
        burst = interpolate(shape_symbols(payload, p, s["constellation"]), p)
        curves[name] = estimate_psd(burst, s["segment_len"], s["overlap"])
    res = ExperimentResult("fig3", s, curves=curves)
    asp_edge, asp_image = image_band_edges(profiles["ASp"])
    pro_edge, pro_image = image_band_edges(profiles["Pro"])
    asp_gap, pro_gap = asp_image - asp_edge, pro_image - pro_edge
    spacing_ratio = profiles["Pro"].ifft_rate_hz / profiles["ASp"].ifft_rate_hz
    res.extra["gaps_hz"] = {"ASp": asp_gap, "Pro": pro_gap}
    res.checks = [
        Check("image spacing Pro/ASp", math.isclose(spacing_ratio, 4.0), spacing_ratio, "== 4"),
        Check("edge-to-image gap Pro/ASp", pro_gap >= 4 * asp_gap, pro_gap / asp_gap, ">= 4"),
    ]
    for name in ("ASp", "Pro"):
        psd = curves[name]
        peak = float(psd.power_db[image_mask(psd, profiles[name])].max())
        res.extra.setdefault("image_peak_dbr", {})[name] = peak
        res.checks.append(Check(f"{name} unfiltered image present", peak > -10, peak, "> -10 dBr"))
    return res


def fig4(bcu: str = "8MHz", seed: int = 0, overrides: dict | None = None, mask: SemMask | None = None) -> ExperimentResult:
    """Filtered spectra of the three methods against the emission mask."""
    s, pover = settings_with(overrides)
    payload = _payload(seed, s["n_symbols"], s["constellation"])
    tol = s["mask_tolerance_db"]
    curves, reports, profiles = {}, {}, {}
    for name, method in (("Asp", Method.ASP), ("SoA", Method.SOA), ("Pro", Method.PRO)):
        p = load_profile(method, bcu, **pover)
        profiles[name] = p
        burst = interpolate(shape_symbols(payload, p, s["constellation"]), p, design_fir(p))
        curves[name] = estimate_psd(burst, s["segment_len"], s["overlap"])
    mask = mask or SemMask.default(profiles["Pro"], s["mask_floor_dbr"])
    res = ExperimentResult("fig4", s, curves=curves)
    res.extra["mask"] = mask
    for name, psd in curves.items():
        reports[name] = check_sem(psd, mask)
    res.extra["sem"] = reports
    res.checks = [
        Check(f"Pro meets mask within {tol:g} dB", reports["Pro"].within(tol), reports["Pro"].worst_margin_db, f">= -{tol:g} dB"),
        Check("Asp fails mask", not reports["Asp"].within(tol), reports["Asp"].worst_margin_db, f"< -{tol:g} dB"),
        Check("SoA fails mask", not reports["SoA"].within(tol), reports["SoA"].worst_margin_db, f"< -{tol:g} dB"),
    ]
    floor = mask.floor_dbr
    for name in ("Asp", "Pro"):
        psd, p = curves[name], profiles[name]
        img = image_mask(psd, p) & psd.region(default_stopband(p)[0])
        peak = float(psd.power_db[img].max())
        res.extra.setdefault("image_peak_dbr", {})[name] = peak
        if name == "Pro":
            res.checks.append(Check("Pro images below stopband floor", peak < floor, peak, f"< {floor:g} dBr"))
        else:
            res.checks.append(Check("Asp images above stopband floor", peak > floor, peak, f"> {floor:g} dBr"))
    res.extra["image_bands_hz"] = {n: image_bands(profiles[n]) for n in ("Asp", "Pro")}
    return res


def parse_grid(text) -> list[float]:
    if isinstance(text, str):
        return [float(v) for v in text.split(",") if v.strip()]
    return [float(v) for v in text]


def fig5(bcu: str = "8MHz", seed: int = 0, overrides: dict | None = None, n_jobs: int = 1) -> ExperimentResult:
    """SER in AWGN for Asp, SoA and Pro."""
    s, pover = settings_with(overrides)
    grid = parse_grid(s["snr_grid"])
    tables: dict[str, list[LinkResult]] = {}
    for name, method in (("Asp", Method.ASP), ("SoA", Method.SOA), ("Pro", Method.PRO)):
        p = load_profile(method, bcu, **pover)
        tables[name] = run_ser_sweep(
            method,
            p,
            grid,
            min_errors=s["min_errors"],
            max_symbols=s["max_symbols"],
            master_seed=seed,
            n_jobs=n_jobs,
            ofdm_per_trial=s["ofdm_per_trial"],
            constellation=s["constellation"],
        )
    res = ExperimentResult("fig5", s, tables=tables)
    pro_x = snr_at_ser(tables["Pro"], 1e-2)
    soa_x = snr_at_ser(tables["SoA"], 1e-2)
    gap = abs(pro_x - soa_x)
    res.extra["snr_at_1e-2"] = {n: snr_at_ser(t, 1e-2) for n, t in tables.items()}
    res.checks.append(Check("Pro-SoA SNR gap at SER 1e-2", gap <= 0.5, gap, "<= 0.5 dB"))
    worse = [
        pro.snr_db
        for pro, asp in zip(tables["Pro"], tables["Asp"])
        if pro.snr_db >= pro_x and pro.ser > asp.ser
    ]
    res.checks.append(Check("SNR points beyond crossing where Pro > Asp", not worse and not math.isnan(pro_x), len(worse), "== 0"))
    pro_profile = load_profile(Method.PRO, bcu, **pover)
    isi = self_interference(Method.PRO, pro_profile, seed=seed, constellation=s["constellation"])
    res.extra["pro_self_interference"] = isi
    res.checks.append(
        Check("Pro noiseless SER floor", isi["ser"] == 0 and isi["floor_ser"] < 1e-4, isi["floor_ser"], "< 1e-4, noiseless SER 0")
    )
    return res


PRESETS = {"fig2": fig2, "fig3": fig3, "fig4": fig4, "fig5": fig5}
