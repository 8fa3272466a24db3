"""Transmit pulse-shaping windows and overlap-add framing.

Every window lives on the grid ``[0, symbol_len + tail)``: a rising edge over
the first ``beta_nt`` samples (the head of the cyclic prefix), a flat top, and
a falling edge over a cyclic suffix of ``tail`` samples. Consecutive symbols
are spaced ``symbol_len`` apart, so a symbol's suffix overlaps the next
symbol's rising edge.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .params import TvhtProfile
from .tx_chain import TimeSymbol


class WindowFamily(str, enum.Enum):
    RECTANGULAR = "rectangular"
    RAISED_COSINE = "raised_cosine"
    VESTIGIAL_SYMMETRY = "vestigial_symmetry"
    ASYMMETRIC = "asymmetric"

    @classmethod
    def parse(cls, value) -> "WindowFamily":
        if isinstance(value, cls):
            return value
        aliases = {"rect": "rectangular", "rc": "raised_cosine", "vs": "vestigial_symmetry", "asym": "asymmetric"}
        text = str(value).lower()
        return cls(aliases.get(text, text))


@dataclass
class WindowSpec:
    family: WindowFamily
    beta_nt: int
    symbol_len: int
    coeffs: np.ndarray
    tail: int = 0

    @property
    def total_len(self) -> int:
        return len(self.coeffs)

    @property
    def rising(self) -> np.ndarray:
        return self.coeffs[: self.beta_nt]

    @property
    def falling(self) -> np.ndarray:
        return self.coeffs[self.symbol_len :]


@dataclass
class ShapedBurst:
    """Complex baseband samples with their rate and the stages that produced them."""

    samples: np.ndarray
    rate_hz: float
    n_symbols: int
    provenance: list = field(default_factory=list)
    profile: TvhtProfile | None = None
    # final-rate samples between a pre-FIR sample and its filtered counterpart
    group_delay: float = 0.0

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def alignment_delay(self) -> int:
        return int(np.floor(self.group_delay))


def rising_edge(family: WindowFamily | str, beta_nt: int) -> np.ndarray:
    """Rising-edge samples k = 0 .. beta_nt - 1; sample beta_nt would be 1."""
    family = WindowFamily.parse(family)
    k = np.arange(beta_nt, dtype=float)
    if family is WindowFamily.RAISED_COSINE:
        # sin^2(pi/2 (0.5 + m / beta)) shifted from m in [-beta/2, beta/2] to k = m + beta/2
        return np.sin(np.pi / 2 * (k / beta_nt)) ** 2
    if family is WindowFamily.VESTIGIAL_SYMMETRY:
        t = 1 - k / beta_nt
        return 0.5 + 9 / 16 * np.cos(np.pi * t) - 1 / 16 * np.cos(3 * np.pi * t)
    if family is WindowFamily.ASYMMETRIC:
        edge = np.cos(np.pi * (k - beta_nt) / (2 * (beta_nt - 1)))
        # k = 0 lands a hair past the quarter period and dips below zero
        return np.clip(edge, 0.0, 1.0)
    raise ValueError(f"{family.value} window has no edge")


def make_window(family: WindowFamily | str, beta_nt: int, symbol_len: int, tail_beta: int | None = None) -> WindowSpec:
    """Window coefficients for one CP/CS-extended symbol.

    ``tail_beta`` sets a falling edge of a different length than the rising
    one (asymmetric family only); by default both edges are ``beta_nt`` long
    and sum pointwise to one across an overlap.
    """
    family = WindowFamily.parse(family)
    if family is WindowFamily.RECTANGULAR:
        return WindowSpec(family, 0, symbol_len, np.ones(symbol_len))
    if not 0 < beta_nt < symbol_len:
        raise ValueError(f"beta_nt must satisfy 0 < beta_nt < symbol_len, got {beta_nt} (symbol_len {symbol_len})")
    if family is WindowFamily.ASYMMETRIC and beta_nt < 2:
        raise ValueError("asymmetric window needs beta_nt >= 2")
    tail = beta_nt if tail_beta is None else int(tail_beta)
    if tail != beta_nt:
        if family is not WindowFamily.ASYMMETRIC:
            raise ValueError("unequal edge lengths are only defined for the asymmetric window")
        if not 2 <= tail < symbol_len:
            raise ValueError(f"tail_beta out of range: {tail}")
    rise = rising_edge(family, beta_nt)
    fall = 1.0 - rising_edge(family, tail)
    coeffs = np.concatenate([rise, np.ones(symbol_len - beta_nt), fall])
    return WindowSpec(family, beta_nt, symbol_len, coeffs, tail)


def add_cyclic_suffix(symbols: TimeSymbol, n: int) -> np.ndarray:
    """Append the first ``n`` body samples (after the CP) to each symbol."""
    s = np.atleast_2d(symbols.samples)
    return np.concatenate([s, s[:, symbols.n_cp : symbols.n_cp + n]], axis=1)


def shape_and_overlap(symbols: TimeSymbol, w: WindowSpec, p: TvhtProfile | None = None, rate_hz: float | None = None) -> ShapedBurst:
    """Extend each symbol with a cyclic suffix, window it and overlap-add.

    Output length is ``n_symbols * symbol_len + tail``.
    """
    s = np.atleast_2d(symbols.samples)
    n_sym, sym_len = s.shape
    if n_sym == 0:
        raise ValueError("no symbols to shape")
    if sym_len != w.symbol_len:
        raise ValueError(f"symbol length {sym_len} does not match window symbol_len {w.symbol_len}")
    if w.tail > sym_len:
        raise ValueError("window tail longer than a symbol")
    shaped = add_cyclic_suffix(symbols, w.tail) * w.coeffs
    out = np.zeros(n_sym * sym_len + w.tail, dtype=complex)
    out[: n_sym * sym_len] = shaped[:, :sym_len].ravel()
    if w.tail:
        idx = np.arange(1, n_sym + 1)[:, None] * sym_len + np.arange(w.tail)
        out[idx] += shaped[:, sym_len:]
    if rate_hz is None and p is not None:
        rate_hz = p.ifft_rate_hz
    stages = ["cp"] + (["cs", f"{_short(w.family)}-window"] if w.tail else [f"{_short(w.family)}-window"])
    return ShapedBurst(out, rate_hz or 1.0, n_sym, stages, p)


def _short(family: WindowFamily) -> str:
    return {"rectangular": "rect", "raised_cosine": "rc", "vestigial_symmetry": "vs", "asymmetric": "asym"}[family.value]


def extract_symbols(samples: np.ndarray, n_symbols: int, symbol_len: int, offset: int = 0) -> np.ndarray:
    """Cut ``n_symbols`` consecutive CP-prefixed symbols starting at ``offset``."""
    seg = samples[offset : offset + n_symbols * symbol_len]
    if len(seg) < n_symbols * symbol_len:
        raise ValueError("burst shorter than the requested symbols")
    return seg.reshape(n_symbols, symbol_len)
