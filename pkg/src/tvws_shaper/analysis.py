"""Welch PSD estimates in dBr, spectral-mask checks and stopband comparisons."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal

from .params import TvhtProfile
from .windowing import ShapedBurst


@dataclass
class PsdEstimate:
    freq_hz: np.ndarray
    power_db: np.ndarray
    segment_len: int
    n_segments: int
    rate_hz: float = 0.0

    def __post_init__(self):
        if len(self.freq_hz) != len(self.power_db):
            raise ValueError("frequency and power sequences differ in length")

    def region(self, lo_hz: float, hi_hz: float = math.inf) -> np.ndarray:
        """Mask of bins with lo <= |f| < hi."""
        af = np.abs(self.freq_hz)
        return (af >= lo_hz) & (af < hi_hz)


@dataclass
class SemMask:
    """Symmetric piecewise-linear limit: (offset from centre in Hz, limit in dBr)."""

    breakpoints: list[tuple[float, float]]
    name: str = "custom"

    def __post_init__(self):
        self.breakpoints = [(float(f), float(v)) for f, v in self.breakpoints]
        offsets = [f for f, _ in self.breakpoints]
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise ValueError("mask offsets must be strictly increasing")

    @classmethod
    def default(cls, p: TvhtProfile, floor_dbr: float = -55.0) -> "SemMask":
        """0 dBr up to the occupied edge, linear to ``floor_dbr`` where the
        adjacent channel's occupied band starts (BCU - occupied edge), flat after.

        Stand-in for the normative 802.11af / regulatory mask; substitute the
        real breakpoint table with :meth:`read`.
        """
        edge = p.occupied_edge_hz
        return cls([(0.0, 0.0), (edge, 0.0), (p.bcu_bandwidth_hz - edge, floor_dbr)], name=f"default-{p.bcu.value}")

    @property
    def outermost_hz(self) -> float:
        return self.breakpoints[-1][0]

    @property
    def floor_dbr(self) -> float:
        return self.breakpoints[-1][1]

    def limit(self, freq_hz) -> np.ndarray:
        """Limit at each frequency; held constant beyond the outermost breakpoint."""
        offs = np.array([f for f, _ in self.breakpoints])
        lims = np.array([v for _, v in self.breakpoints])
        af = np.abs(np.asarray(freq_hz, dtype=float))
        j = np.clip(np.searchsorted(offs, af, side="right") - 1, 0, len(offs) - 1)
        j2 = np.minimum(j + 1, len(offs) - 1)
        span = np.where(j2 > j, offs[j2] - offs[j], 1.0)
        t = np.clip((af - offs[j]) / span, 0.0, 1.0)
        v0, v1 = lims[j], lims[j2]
        # equal neighbours (including infinite limits) need no interpolation
        with np.errstate(invalid="ignore"):
            return np.where(v0 == v1, v0, v0 + t * (v1 - v0))

    def validate(self) -> list[str]:
        problems = []
        lims = [v for _, v in self.breakpoints]
        if any(b > a for a, b in zip(lims, lims[1:])):
            problems.append("limits increase with offset")
        if self.floor_dbr > -55:
            problems.append(f"floor {self.floor_dbr} dBr above -55 dBr")
        return problems

    def to_text(self) -> str:
        return "".join(f"{f:.6f} {v:.6f}\n" for f, v in self.breakpoints)

    @classmethod
    def from_text(cls, text: str, name: str = "file") -> "SemMask":
        pts = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                f, v = line.split()
                pts.append((float(f), float(v)))
        return cls(pts, name)

    @classmethod
    def read(cls, path: str | Path) -> "SemMask":
        return cls.from_text(Path(path).read_text(), Path(path).name)


@dataclass
class SemReport:
    passed: bool
    worst_margin_db: float
    worst_freq_hz: float
    segment_margins: list[tuple[float, float, float]] = field(default_factory=list)

    def within(self, tolerance_db: float) -> bool:
        return self.worst_margin_db >= -tolerance_db


def reference_bins(freq_hz: np.ndarray, p: TvhtProfile) -> np.ndarray:
    """Bins inside the data-subcarrier band (2..58 subcarriers off centre)."""
    df = p.subcarrier_spacing_hz
    data = p.subcarriers.data_indices
    lo, hi = min(abs(k) for k in data), max(abs(k) for k in data)
    af = np.abs(freq_hz)
    return (af >= lo * df) & (af <= hi * df)


def estimate_psd(burst: ShapedBurst, segment_len: int = 4096, overlap: float = 0.5, circular: bool = False, p: TvhtProfile | None = None) -> PsdEstimate:
    """Hann-window Welch periodogram, centred, in dB relative to the mean data-band level.

    With ``circular=True`` the burst is treated as one period of a periodic
    signal: segments wrap around its end, so any circular shift by a multiple
    of the hop leaves the estimate unchanged.
    """
    p = p or burst.profile
    x = np.asarray(burst.samples)
    if not 0 <= overlap <= 0.9:
        raise ValueError(f"overlap must lie in [0, 0.9], got {overlap}")
    if len(x) < 2 * segment_len:
        raise ValueError(f"burst of {len(x)} samples is shorter than two segments of {segment_len}")
    noverlap = int(round(segment_len * overlap))
    hop = segment_len - noverlap
    if circular:
        n = (len(x) // hop) * hop
        x = np.concatenate([x[:n], x[: segment_len - hop]])
    f, pxx = signal.welch(
        x,
        fs=burst.rate_hz,
        window="hann",
        nperseg=segment_len,
        noverlap=noverlap,
        detrend=False,
        return_onesided=False,
        scaling="density",
    )
    f = np.fft.fftshift(f)
    pxx = np.fft.fftshift(pxx)
    n_segments = 1 + (len(x) - segment_len) // hop
    ref = pxx[reference_bins(f, p)].mean() if p is not None else pxx.max()
    with np.errstate(divide="ignore"):
        db = 10 * np.log10(pxx / ref)
    return PsdEstimate(f, db, segment_len, n_segments, burst.rate_hz)


def check_sem(psd: PsdEstimate, mask: SemMask) -> SemReport:
    """Compare a PSD against ``mask``; margin = limit - power (negative means violation)."""
    if np.abs(psd.freq_hz).max() < mask.outermost_hz:
        raise ValueError(f"PSD spans ±{np.abs(psd.freq_hz).max():.6g} Hz, mask reaches {mask.outermost_hz:.6g} Hz")
    margin = mask.limit(psd.freq_hz) - psd.power_db
    with np.errstate(invalid="ignore"):
        margin = np.where(np.isnan(margin), np.inf, margin)
    i = int(np.argmin(margin))
    af = np.abs(psd.freq_hz)
    edges = [f for f, _ in mask.breakpoints] + [math.inf]
    segments = []
    for lo, hi in zip(edges, edges[1:]):
        sel = (af >= lo) & (af < hi)
        if sel.any():
            segments.append((lo, hi, float(margin[sel].min())))
    worst = float(margin[i])
    return SemReport(worst >= 0, worst, float(psd.freq_hz[i]), segments)


def stopband_stats(psd: PsdEstimate, lo_hz: float, hi_hz: float = math.inf) -> dict:
    sel = psd.region(lo_hz, hi_hz)
    if not sel.any():
        raise ValueError(f"no bins in stopband [{lo_hz}, {hi_hz})")
    lin = 10 ** (psd.power_db[sel] / 10)
    return {"max_dbr": float(psd.power_db[sel].max()), "mean_dbr": float(10 * np.log10(lin.mean()))}


def default_stopband(p: TvhtProfile) -> tuple[float, float]:
    """Adjacent-channel region: from the neighbour's occupied edge outward."""
    return p.bcu_bandwidth_hz - p.occupied_edge_hz, math.inf


def compare_spectra(
    bursts: dict[str, ShapedBurst],
    stopband: tuple[float, float] | None = None,
    segment_len: int = 4096,
    overlap: float = 0.5,
    p: TvhtProfile | None = None,
) -> dict:
    """Stopband max/mean per curve and every pairwise ordering.

    ``orderings[(a, b)]`` is ``max_dbr[a] - max_dbr[b]``; negative means ``a``
    leaks less than ``b``.
    """
    rates = {b.rate_hz for b in bursts.values()}
    if len(rates) != 1:
        raise ValueError(f"bursts at different rates: {sorted(rates)}")
    p = p or next(iter(bursts.values())).profile
    lo, hi = stopband or default_stopband(p)
    stats, psds = {}, {}
    for name, burst in bursts.items():
        psds[name] = estimate_psd(burst, segment_len, overlap, p=p)
        stats[name] = stopband_stats(psds[name], lo, hi)
    orderings = {(a, b): stats[a]["max_dbr"] - stats[b]["max_dbr"] for a, b in itertools.permutations(bursts, 2)}
    return {"stopband_hz": (lo, hi), "stats": stats, "orderings": orderings, "psd": psds}


def image_bands(p: TvhtProfile, rate_hz: float | None = None) -> list[tuple[float, float]]:
    """|f| ranges occupied by zero-stuffing images up to Nyquist of ``rate_hz``."""
    rate = rate_hz or p.final_rate_hz
    edge = p.occupied_edge_hz
    step = p.ifft_rate_hz
    bands = []
    k = 1
    while k * step - edge < rate / 2:
        bands.append((k * step - edge, min(k * step + edge, rate / 2)))
        k += 1
    return bands


def image_mask(psd: PsdEstimate, p: TvhtProfile) -> np.ndarray:
    af = np.abs(psd.freq_hz)
    sel = np.zeros(len(af), dtype=bool)
    for lo, hi in image_bands(p, psd.rate_hz):
        sel |= (af >= lo) & (af <= hi)
    return sel


def psd_to_csv(psd: PsdEstimate, header: str = "") -> str:
    lines = [f"# {line}" for line in header.splitlines()] if header else []
    lines.append("freq_hz,power_dbr")
    lines += [f"{f:.3f},{v:.4f}" for f, v in zip(psd.freq_hz, psd.power_db)]
    return "\n".join(lines) + "\n"
