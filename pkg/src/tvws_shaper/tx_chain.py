"""Constellation mapping and OFDM modulation with a cyclic prefix.

Symbols are batched: a :class:`FreqSymbol` or :class:`TimeSymbol` may hold a
single symbol (1-D array) or a stack of them (2-D, one row per symbol).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import SubcarrierMap, TvhtProfile

_S2 = 1 / np.sqrt(2)
_S10 = 1 / np.sqrt(10)

# Gray maps, bit value 0 maps to the positive side
CONSTELLATIONS = {
    "bpsk": np.array([1, -1], dtype=complex),
    # index = b0 * 2 + b1
    "qpsk": np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) * _S2,
}
_PAM4 = np.array([3, 1, -3, -1])  # (sign bit, magnitude bit): 00, 01, 10, 11
CONSTELLATIONS["qam16"] = np.array(
    [_PAM4[(i >> 2) & 3] + 1j * _PAM4[i & 3] for i in range(16)], dtype=complex
) * _S10
BITS_PER_SYMBOL = {"bpsk": 1, "qpsk": 2, "qam16": 4}


@dataclass
class FreqSymbol:
    """Centered subcarrier bins; bin ``n_bins // 2 + k`` carries subcarrier ``k``."""

    bins: np.ndarray

    @property
    def n_bins(self) -> int:
        return self.bins.shape[-1]

    def at(self, indices) -> np.ndarray:
        return self.bins[..., self.n_bins // 2 + np.asarray(indices)]

    def resized(self, n_bins: int) -> "FreqSymbol":
        """Embed (or crop) the grid into ``n_bins`` centered bins."""
        old = self.n_bins
        out = np.zeros(self.bins.shape[:-1] + (n_bins,), dtype=complex)
        half = min(old, n_bins) // 2
        out[..., n_bins // 2 - half : n_bins // 2 + half] = self.bins[..., old // 2 - half : old // 2 + half]
        return FreqSymbol(out)


@dataclass
class TimeSymbol:
    """CP-prefixed time samples at the IFFT rate; ``symbol_index`` is l of the first row."""

    samples: np.ndarray
    symbol_index: int = 0
    n_cp: int = 0


def _check_constellation(constellation: str) -> str:
    key = constellation.lower()
    if key not in CONSTELLATIONS:
        raise ValueError(f"unknown constellation {constellation!r}")
    return key


def bits_per_ofdm_symbol(constellation: str = "qpsk", smap: SubcarrierMap | None = None) -> int:
    smap = smap or SubcarrierMap.tvht()
    return len(smap.data_indices) * BITS_PER_SYMBOL[_check_constellation(constellation)]


def bits_to_indices(bits, constellation: str = "qpsk") -> np.ndarray:
    bps = BITS_PER_SYMBOL[_check_constellation(constellation)]
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape[-1] % bps:
        raise ValueError(f"bit count {bits.shape[-1]} is not a multiple of {bps}")
    groups = bits.reshape(bits.shape[:-1] + (-1, bps))
    weights = 1 << np.arange(bps - 1, -1, -1)
    return groups @ weights


def indices_to_bits(indices, constellation: str = "qpsk") -> np.ndarray:
    bps = BITS_PER_SYMBOL[_check_constellation(constellation)]
    indices = np.asarray(indices, dtype=np.int64)
    shifts = np.arange(bps - 1, -1, -1)
    bits = (indices[..., None] >> shifts) & 1
    return bits.reshape(indices.shape[:-1] + (-1,))


def pilot_polarity(n_symbols: int, start: int = 0) -> np.ndarray:
    """802.11 pilot polarity p_n: the x^7 + x^4 + 1 scrambler seeded with ones, 0 -> +1."""
    state = [1] * 7
    seq = np.empty(127)
    for i in range(127):
        bit = state[3] ^ state[6]
        state = [bit] + state[:6]
        seq[i] = 1 - 2 * bit
    return seq[(start + np.arange(n_symbols)) % 127]


def map_payload(
    bits,
    constellation: str = "qpsk",
    smap: SubcarrierMap | None = None,
    n_bins: int = 128,
    pilot_sign=1.0,
) -> FreqSymbol:
    """Gray-map ``bits`` onto the data subcarriers, pilots at +1, nulls at 0.

    ``bits`` may be 1-D (one OFDM symbol) or 2-D (one row per symbol); each row
    must hold exactly 108 × bits-per-point bits. Data points are taken in
    ascending subcarrier order. ``pilot_sign`` flips the pilots per symbol
    (scalar or one value per row).
    """
    key = _check_constellation(constellation)
    smap = smap or SubcarrierMap.tvht()
    bits = np.asarray(bits)
    need = bits_per_ofdm_symbol(key, smap)
    if bits.ndim == 0 or bits.shape[-1] != need:
        got = bits.shape[-1] if bits.ndim else 0
        raise ValueError(f"expected {need} bits per OFDM symbol for {key}, got {got}")
    points = CONSTELLATIONS[key][bits_to_indices(bits, key)]
    out = np.zeros(bits.shape[:-1] + (n_bins,), dtype=complex)
    centre = n_bins // 2
    out[..., centre + np.array(smap.sorted_data())] = points
    out[..., centre + np.array(smap.sorted_pilots())] = np.asarray(pilot_sign, dtype=float)[..., None]
    return FreqSymbol(out)


def hard_decision(points, constellation: str = "qpsk") -> np.ndarray:
    """Nearest-point constellation indices."""
    ref = CONSTELLATIONS[_check_constellation(constellation)]
    points = np.asarray(points)
    return np.argmin(np.abs(points[..., None] - ref), axis=-1)


def ifft_modulate(X: FreqSymbol, p: TvhtProfile) -> TimeSymbol:
    """Inverse DFT of size M·N followed by an M·N_CP cyclic prefix.

    The 1/N prefactor keeps the per-sample power independent of the guard
    extension M: a bin-0 value of N yields a constant 1 at any M.
    """
    n_fft = p.n_fft
    if X.n_bins != n_fft:
        raise ValueError(f"symbol has {X.n_bins} bins, profile needs {n_fft}")
    body = np.fft.ifft(np.fft.ifftshift(X.bins, axes=-1), axis=-1) * (n_fft / p.n_base)
    samples = np.concatenate([body[..., n_fft - p.n_cp :], body], axis=-1)
    return TimeSymbol(samples, n_cp=p.n_cp)


def demodulate(y: TimeSymbol, p: TvhtProfile) -> FreqSymbol:
    """Strip the CP and take the forward DFT, undoing :func:`ifft_modulate`."""
    if y.samples.shape[-1] != p.symbol_len:
        raise ValueError(f"symbol has {y.samples.shape[-1]} samples, profile needs {p.symbol_len}")
    return fft_bins(y.samples[..., p.n_cp :], p)


def fft_bins(body: np.ndarray, p: TvhtProfile) -> FreqSymbol:
    spectrum = np.fft.fft(body, axis=-1) * (p.n_base / p.n_fft)
    return FreqSymbol(np.fft.fftshift(spectrum, axes=-1))
