"""Channel models, the genie-equalized receiver and Monte Carlo SER sweeps."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from scipy.special import erfc

from .params import Method, TvhtProfile, load_profile
from .shaping import composite_response, design_fir, interpolate, random_payload, shape_symbols
from .tx_chain import CONSTELLATIONS, FreqSymbol, bits_to_indices, fft_bins, hard_decision
from .windowing import ShapedBurst


class ChannelKind(str, enum.Enum):
    AWGN = "awgn"
    MULTIPATH = "multipath"


@dataclass
class ChannelModel:
    """Es/N0 is measured per occupied subcarrier after the receiver FFT."""

    kind: ChannelKind = ChannelKind.AWGN
    snr_db: float = math.inf
    cir_taps: np.ndarray | None = None
    seed: int | np.random.SeedSequence | None = 0

    def __post_init__(self):
        self.kind = ChannelKind(self.kind)
        if self.kind is ChannelKind.MULTIPATH:
            if self.cir_taps is None:
                raise ValueError("multipath channel needs cir_taps")
            taps = np.asarray(self.cir_taps, dtype=complex)
            self.cir_taps = taps / np.sqrt(np.sum(np.abs(taps) ** 2))

    @classmethod
    def multipath(cls, p: TvhtProfile, snr_db: float = math.inf, seed=0, decay_samples: float | None = None) -> "ChannelModel":
        """Exponentially decaying CIR spanning ``p.cir_len_final`` samples, random phases."""
        rng = np.random.default_rng(seed)
        n = p.cir_len_final
        decay = decay_samples or n / 4
        amp = np.exp(-np.arange(n) / decay)
        taps = amp * np.exp(2j * np.pi * rng.random(n))
        return cls(ChannelKind.MULTIPATH, snr_db, taps, seed)


@dataclass
class LinkResult:
    snr_db: float
    n_symbols_sent: int
    n_symbol_errors: int
    ser: float
    confidence_halfwidth: float
    censored: bool = False

    @classmethod
    def from_counts(cls, snr_db: float, sent: int, errors: int, censored: bool = False) -> "LinkResult":
        ser = errors / sent if sent else 0.0
        half = 1.96 * math.sqrt(ser * (1 - ser) / sent) if sent else math.inf
        return cls(snr_db, sent, errors, ser, half, censored)


def receive_filter(p: TvhtProfile) -> np.ndarray | None:
    """Decimation lowpass: the transmit FIR design scaled to unit DC gain."""
    if not p.fir_len_final:
        return None
    return design_fir(p).taps / p.interpolation_l


def total_delay(burst: ShapedBurst) -> int:
    """Transmit FIR plus receive filter group delay, in final-rate samples."""
    rx = receive_filter(burst.profile)
    rx_delay = (len(rx) - 1) / 2 if rx is not None else 0.0
    return int(round(burst.group_delay + rx_delay))


def noise_gain(p: TvhtProfile) -> np.ndarray:
    """Per-bin noise power gain of receive filter + decimation, centered IFFT-rate bins.

    White noise of variance s2 per final-rate sample lands in bin k with
    variance (N / M) * s2 * gain[k].
    """
    h = receive_filter(p)
    if h is None:
        return np.ones(p.n_fft)
    f = (np.arange(p.n_fft) - p.n_fft // 2) * p.subcarrier_spacing_hz
    fm = p.ifft_rate_hz
    n = np.arange(len(h))
    total = np.zeros(p.n_fft)
    for r in range(p.interpolation_l):
        resp = np.exp(-2j * np.pi * np.outer((f + r * fm) / p.final_rate_hz, n)) @ h
        total += np.abs(resp) ** 2
    return total / p.interpolation_l


def noise_variance(p: TvhtProfile, snr_db: float, es: float = 1.0) -> float:
    """Per-sample noise power at the final rate giving ``snr_db`` after the receiver FFT.

    The Es/N0 holds on average over the data subcarriers, taking the receive
    filter's noise gain into account.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    gamma = 10 ** (snr_db / 10)
    gain = noise_gain(p)[p.n_fft // 2 + np.array(p.subcarriers.sorted_data())].mean()
    return p.guard_extension_m * es / (p.n_base * gamma * gain)


def apply_channel(burst: ShapedBurst, ch: ChannelModel, p: TvhtProfile | None = None) -> np.ndarray:
    """Pass ``burst`` through ``ch``; the output has the burst's length."""
    p = p or burst.profile
    x = np.asarray(burst.samples)
    if ch.kind is ChannelKind.MULTIPATH:
        x = np.convolve(x, ch.cir_taps)[: len(x)]
    var = noise_variance(p, ch.snr_db)
    if var == 0.0:
        return x.copy()
    rng = np.random.default_rng(ch.seed)
    noise = rng.standard_normal((2, len(x)))
    return x + math.sqrt(var / 2) * (noise[0] + 1j * noise[1])


def composite_taps(p: TvhtProfile, cir=None) -> np.ndarray | None:
    """Final-rate impulse response from zero stuffing to the decimator: FIR, channel, receive filter."""
    if not p.fir_len_final:
        return None if cir is None else np.asarray(cir)
    taps = np.convolve(design_fir(p).taps, receive_filter(p))
    if cir is not None:
        taps = np.convolve(taps, cir)
    return taps


def receive(rx, method: Method | str, p: TvhtProfile | None = None, known_delay: int = 0, n_symbols: int | None = None, cir=None) -> FreqSymbol:
    """Filter, align, decimate to the IFFT rate, strip CPs, FFT and one-tap equalize.

    ``known_delay`` is the total pipeline delay (see :func:`total_delay`).
    Equalization divides by the known composite response of transmit
    filter, channel ``cir`` and receive filter. Returns one row of bins per
    symbol.
    """
    method = Method.parse(method)
    p = p or load_profile(method)
    rx = np.asarray(rx)
    h = receive_filter(p)
    if h is not None:
        rx = np.convolve(rx, h)
    r = rx[known_delay :: p.interpolation_l]
    available = len(r) // p.symbol_len
    if n_symbols is None:
        n_symbols = available
    if n_symbols < 1 or n_symbols > available:
        raise ValueError(f"received samples hold {available} aligned symbols, {n_symbols} requested")
    frames = r[: n_symbols * p.symbol_len].reshape(n_symbols, p.symbol_len)
    Y = fft_bins(frames[:, p.n_cp :], p)
    k = np.arange(p.n_fft) - p.n_fft // 2
    G = composite_response(p, composite_taps(p, cir), known_delay, k)
    with np.errstate(divide="ignore", invalid="ignore"):
        eq = np.where(np.abs(G) > 1e-12, Y.bins / G, 0)
    return FreqSymbol(eq)


def data_points(X: FreqSymbol, p: TvhtProfile) -> np.ndarray:
    return X.at(p.subcarriers.sorted_data())


def count_symbol_errors(X: FreqSymbol, payload, p: TvhtProfile, constellation: str = "qpsk") -> tuple[int, int]:
    sent = bits_to_indices(np.atleast_2d(payload), constellation)
    got = hard_decision(data_points(X, p), constellation)
    return int(np.count_nonzero(got != sent)), sent.size


def qpsk_ser(snr_db) -> np.ndarray:
    """Exact Gray QPSK SER 2Q(sqrt(g)) - Q(sqrt(g))^2 with g = Es/N0."""
    g = 10 ** (np.asarray(snr_db, dtype=float) / 10)
    q = 0.5 * erfc(np.sqrt(g) / np.sqrt(2))
    return 2 * q - q**2


def transmit(payload, method: Method | str, p: TvhtProfile, constellation: str = "qpsk", first_symbol: int = 0) -> ShapedBurst:
    pre = shape_symbols(payload, p, constellation, first_symbol=first_symbol)
    fir = design_fir(p) if p.fir_len_final else None
    return interpolate(pre, p, fir)


def _trial(method: Method, p: TvhtProfile, snr_db: float, seed: np.random.SeedSequence, n_ofdm: int, constellation: str, cir) -> tuple[int, int]:
    payload_seed, noise_seed = seed.spawn(2)
    payload = random_payload(np.random.default_rng(payload_seed), n_ofdm, constellation)
    burst = transmit(payload, method, p, constellation)
    if cir is None:
        ch = ChannelModel(ChannelKind.AWGN, snr_db, seed=noise_seed)
    else:
        ch = ChannelModel(ChannelKind.MULTIPATH, snr_db, cir, seed=noise_seed)
    rx = apply_channel(burst, ch, p)
    X = receive(rx, method, p, total_delay(burst), n_ofdm, cir=ch.cir_taps if cir is not None else None)
    return count_symbol_errors(X, payload, p, constellation)


def run_ser_sweep(
    method: Method | str,
    p: TvhtProfile | None,
    snr_grid_db,
    min_errors: int = 200,
    max_symbols: int = 2_000_000,
    master_seed: int = 0,
    n_jobs: int = 1,
    ofdm_per_trial: int = 200,
    constellation: str = "qpsk",
    cir=None,
) -> list[LinkResult]:
    """SER per SNR point, stopping at ``min_errors`` or ``max_symbols``.

    Trial t at SNR index s draws everything from SeedSequence(master_seed,
    spawn_key=(s, t)), and the stopping rule is applied in trial order, so the
    result does not depend on ``n_jobs``.
    """
    method = Method.parse(method)
    p = p or load_profile(method)
    per_trial = ofdm_per_trial * len(p.subcarriers.data_indices)
    out = []
    with Parallel(n_jobs=n_jobs) as pool:
        for s, snr in enumerate(snr_grid_db):
            errors = sent = 0
            t = 0
            done = False
            while not done:
                wave = max(1, n_jobs if n_jobs > 0 else 4) * 2
                seeds = [np.random.SeedSequence(master_seed, spawn_key=(s, t + i)) for i in range(wave)]
                counts = pool(delayed(_trial)(method, p, float(snr), sd, ofdm_per_trial, constellation, cir) for sd in seeds)
                for e, n in counts:
                    errors += e
                    sent += n
                    t += 1
                    if errors >= min_errors or sent + per_trial > max_symbols:
                        done = True
                        break
            out.append(LinkResult.from_counts(float(snr), sent, errors, censored=errors < min_errors))
    return out


def self_interference(method: Method | str, p: TvhtProfile | None = None, n_ofdm: int = 200, seed: int = 0, constellation: str = "qpsk") -> dict:
    """Noiseless loopback: EVM of the data bins and the resulting SER.

    ``floor_ser`` treats the residual as Gaussian noise and evaluates the
    QPSK SER it alone would cause.
    """
    method = Method.parse(method)
    p = p or load_profile(method)
    payload = random_payload(np.random.default_rng(seed), n_ofdm, constellation)
    burst = transmit(payload, method, p, constellation)
    X = receive(burst.samples, method, p, total_delay(burst), n_ofdm)
    ref = CONSTELLATIONS[constellation][bits_to_indices(payload, constellation)]
    got = data_points(X, p)
    evm2 = float(np.mean(np.abs(got - ref) ** 2) / np.mean(np.abs(ref) ** 2))
    errors, sent = count_symbol_errors(X, payload, p, constellation)
    sinr_db = -10 * math.log10(evm2) if evm2 > 0 else math.inf
    floor = float(qpsk_ser(sinr_db)) if constellation == "qpsk" and math.isfinite(sinr_db) else 0.0
    return {"evm_db": 10 * math.log10(evm2) if evm2 > 0 else -math.inf, "ser": errors / sent, "floor_ser": floor, "max_error": float(np.max(np.abs(got - ref)))}


def snr_at_ser(results: list[LinkResult], target: float) -> float:
    """SNR where the SER curve crosses ``target`` (log-linear interpolation)."""
    pts = [(r.snr_db, r.ser) for r in results if r.ser > 0]
    for (s0, e0), (s1, e1) in zip(pts, pts[1:]):
        if e0 >= target >= e1:
            if e0 == e1:
                return s0
            frac = (math.log10(e0) - math.log10(target)) / (math.log10(e0) - math.log10(e1))
            return s0 + frac * (s1 - s0)
    return math.nan
