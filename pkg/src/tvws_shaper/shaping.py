"""Interpolation, image-rejection FIR and the full transmit pipelines.

The three methods differ only in their profile: Asp runs a 128-point IFFT and
interpolates by 8 through a 72-tap FIR; SoA and Pro run a 512-point IFFT
(guard band extended four-fold) and interpolate by 2 through a 40-tap FIR.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import Method, TvhtProfile, load_profile
from .tx_chain import bits_per_ofdm_symbol, ifft_modulate, map_payload, pilot_polarity
from .windowing import ShapedBurst, WindowFamily, make_window, shape_and_overlap


@dataclass(frozen=True)
class FirFilter:
    taps: np.ndarray
    design_cutoff_hz: float
    design_rate_hz: float

    @property
    def group_delay(self) -> float:
        return (len(self.taps) - 1) / 2

    def __len__(self) -> int:
        return len(self.taps)

    def response(self, freq_hz) -> np.ndarray:
        """Complex frequency response at ``freq_hz`` (design rate)."""
        n = np.arange(len(self.taps))
        f = np.atleast_1d(np.asarray(freq_hz, dtype=float))
        return np.exp(-2j * np.pi * np.outer(f / self.design_rate_hz, n)) @ self.taps


def zero_stuff(x, L: int) -> np.ndarray:
    """Insert L-1 zeros after every sample."""
    if L < 1:
        raise ValueError(f"interpolation factor must be >= 1, got {L}")
    x = np.asarray(x)
    out = np.zeros(len(x) * L, dtype=np.result_type(x, complex))
    out[::L] = x
    return out


def windowed_sinc(n_taps: int, cutoff: float, gain: float = 1.0) -> np.ndarray:
    """Hamming-windowed sinc lowpass, ``cutoff`` as a fraction of the sample rate.

    Taps are scaled so that they sum to ``gain``.
    """
    n = np.arange(n_taps) - (n_taps - 1) / 2
    h = 2 * cutoff * np.sinc(2 * cutoff * n) * np.hamming(n_taps)
    return h * (gain / h.sum())


def design_fir(p: TvhtProfile) -> FirFilter:
    """Image-rejection lowpass for the profile's zero-stuffing stage.

    The cutoff sits in the middle of the gap between the occupied edge and
    the first image edge, which is half the pre-stuffing rate.
    """
    if p.fir_len_final < 3:
        raise ValueError(f"profile {p.name} has no FIR (fir_len_final={p.fir_len_final})")
    rate = p.final_rate_hz
    edge = p.occupied_edge_hz
    image_edge = rate / p.interpolation_l - edge
    cutoff = (edge + image_edge) / 2
    if cutoff >= rate / 2:
        raise ValueError(f"cutoff {cutoff:.6g} Hz is not below Nyquist {rate / 2:.6g} Hz")
    taps = windowed_sinc(p.fir_len_final, cutoff / rate, gain=p.interpolation_l)
    return FirFilter(taps, cutoff, rate)


def apply_fir(x, f: FirFilter) -> np.ndarray:
    """Full linear convolution (length ``len(x) + taps - 1``)."""
    x = np.asarray(x)
    if x.size == 0:
        raise ValueError("empty input")
    return np.convolve(x, f.taps)


def image_band_edges(p: TvhtProfile) -> tuple[float, float]:
    """(occupied edge, nearest image edge) in Hz after zero stuffing."""
    edge = p.occupied_edge_hz
    return edge, p.ifft_rate_hz - edge


def random_payload(rng: np.random.Generator, n_symbols: int, constellation: str = "qpsk") -> np.ndarray:
    return rng.integers(0, 2, size=(n_symbols, bits_per_ofdm_symbol(constellation)), dtype=np.int8)


def window_for(p: TvhtProfile):
    return make_window(p.window_family, p.beta_nt, p.symbol_len)


def shape_symbols(payload, p: TvhtProfile, constellation: str = "qpsk", window=None, first_symbol: int = 0) -> ShapedBurst:
    """Map, modulate, window and overlap-add at the IFFT rate (no interpolation yet).

    Pilots follow the 802.11 polarity sequence from ``first_symbol`` on.
    """
    payload = np.atleast_2d(payload)
    signs = pilot_polarity(len(payload), first_symbol)
    X = map_payload(payload, constellation, p.subcarriers, n_bins=p.n_fft, pilot_sign=signs)
    w = window if window is not None else window_for(p)
    burst = shape_and_overlap(ifft_modulate(X, p), w, p)
    burst.provenance.insert(0, f"ifft{p.n_fft}")
    return burst


def interpolate(burst: ShapedBurst, p: TvhtProfile, fir: FirFilter | None = None) -> ShapedBurst:
    """Zero-stuff by L and (optionally) filter with ``fir``."""
    L = p.interpolation_l
    samples = zero_stuff(burst.samples, L)
    stages = burst.provenance + [f"stuff{L}"]
    delay = 0.0
    if fir is not None:
        samples = apply_fir(samples, fir)
        stages.append(f"fir{len(fir)}")
        delay = fir.group_delay
    return ShapedBurst(samples, burst.rate_hz * L, burst.n_symbols, stages, p, delay)


def run_pipeline(payload, method: Method | str, p: TvhtProfile | None = None, n_symbols: int | None = None, constellation: str = "qpsk") -> ShapedBurst:
    """Full transmit chain for ``method``: IFFT, CP/CS + window, zero stuffing, FIR.

    ``payload`` is a bit array with one row per OFDM symbol (a flat array is
    split into ``n_symbols`` rows). The output rate is U times the base rate
    for every method.
    """
    method = Method.parse(method)
    p = p or load_profile(method)
    if p.method is not method:
        raise ValueError(f"profile {p.name} does not match method {method.value}")
    payload = np.asarray(payload)
    if n_symbols is not None:
        payload = payload.reshape(n_symbols, -1)
    pre = shape_symbols(payload, p, constellation)
    fir = design_fir(p) if p.fir_len_final else None
    return interpolate(pre, p, fir)


def composite_response(p: TvhtProfile, taps: np.ndarray | None, delay: int, freq_bins) -> np.ndarray:
    """Response seen by the receiver at IFFT-rate bins after picking every L-th sample.

    ``taps`` is the final-rate impulse response between zero stuffing and the
    receiver (FIR, optionally convolved with a channel), ``delay`` the
    final-rate alignment offset.
    """
    L = p.interpolation_l
    k = np.asarray(freq_bins, dtype=float)
    if taps is None:
        taps = np.ones(1)
    n = np.arange(len(taps))
    keep = (n - delay) % L == 0
    i = (n[keep] - delay) // L
    return np.exp(-2j * np.pi * np.outer(k, i) / p.n_fft) @ taps[keep]

