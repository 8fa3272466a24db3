"""scikit-learn style wrappers around the transmit chain, channel and receiver.

Rows of ``X`` are OFDM symbols' payload bits, so the pieces compose with
:class:`sklearn.pipeline.Pipeline`::

    tx = make_pipeline(TvhtTransmitter(method="pro"), AwgnChannel(snr_db=10))
    rx = tx.fit_transform(bits)
    TvhtReceiver(method="pro").fit(bits).predict(rx)
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .analysis import estimate_psd
from .link import ChannelKind, ChannelModel, apply_channel, receive, total_delay
from .params import load_profile
from .shaping import design_fir, interpolate, shape_symbols
from .tx_chain import bits_per_ofdm_symbol, bits_to_indices, hard_decision, indices_to_bits
from .windowing import ShapedBurst, make_window


def _check_bits(X, constellation: str) -> np.ndarray:
    X = check_array(X, dtype=np.int8, ensure_min_samples=1)
    need = bits_per_ofdm_symbol(constellation)
    if X.shape[1] != need:
        raise ValueError(f"expected {need} bits per row for {constellation}, got {X.shape[1]}")
    if np.any((X != 0) & (X != 1)):
        raise ValueError("payload must contain only 0 and 1")
    return X


class TvhtTransmitter(TransformerMixin, BaseEstimator):
    """Bits (one row per OFDM symbol) to a shaped final-rate burst.

    ``fit`` resolves the profile, window and FIR; ``transform`` returns the
    complex samples as a 1-D array (``burst_`` keeps the full record of the
    last call).
    """

    def __init__(self, method="pro", bcu="8MHz", constellation="qpsk", window=None, beta_samples=None, profile_overrides=None):
        self.method = method
        self.bcu = bcu
        self.constellation = constellation
        self.window = window
        self.beta_samples = beta_samples
        self.profile_overrides = profile_overrides

    def fit(self, X=None, y=None):
        self.profile_ = load_profile(self.method, self.bcu, **(self.profile_overrides or {}))
        p = self.profile_
        family = self.window or p.window_family
        beta = p.beta_nt if self.beta_samples is None else int(self.beta_samples)
        self.window_ = make_window(family, beta, p.symbol_len)
        self.fir_ = design_fir(p) if p.fir_len_final else None
        if X is not None:
            _check_bits(X, self.constellation)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "profile_")
        X = _check_bits(X, self.constellation)
        pre = shape_symbols(X, self.profile_, self.constellation, window=self.window_)
        self.burst_ = interpolate(pre, self.profile_, self.fir_)
        return self.burst_.samples


class AwgnChannel(TransformerMixin, BaseEstimator):
    """Adds complex white noise calibrated to a post-FFT Es/N0."""

    def __init__(self, snr_db=math.inf, method="pro", bcu="8MHz", seed=0):
        self.snr_db = snr_db
        self.method = method
        self.bcu = bcu
        self.seed = seed

    def fit(self, X=None, y=None):
        self.profile_ = load_profile(self.method, self.bcu)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "profile_")
        x = np.asarray(X).ravel()
        burst = ShapedBurst(x, self.profile_.final_rate_hz, 0, [], self.profile_)
        return apply_channel(burst, ChannelModel(ChannelKind.AWGN, self.snr_db, seed=self.seed))


class TvhtReceiver(ClassifierMixin, BaseEstimator):
    """Received final-rate samples back to payload bits.

    ``predict`` takes a 1-D sample array and returns one row of bits per
    recovered OFDM symbol; ``score(rx, bits)`` is 1 - SER.
    """

    def __init__(self, method="pro", bcu="8MHz", constellation="qpsk"):
        self.method = method
        self.bcu = bcu
        self.constellation = constellation

    def fit(self, X=None, y=None):
        self.profile_ = load_profile(self.method, self.bcu)
        pre = ShapedBurst(np.zeros(1), self.profile_.ifft_rate_hz, 0, [], self.profile_)
        fir = design_fir(self.profile_) if self.profile_.fir_len_final else None
        self.delay_ = total_delay(interpolate(pre, self.profile_, fir))
        return self

    def decision_function(self, rx) -> np.ndarray:
        check_is_fitted(self, "profile_")
        X = receive(np.asarray(rx).ravel(), self.method, self.profile_, self.delay_)
        return X.at(self.profile_.subcarriers.sorted_data())

    def predict(self, rx) -> np.ndarray:
        idx = hard_decision(self.decision_function(rx), self.constellation)
        return indices_to_bits(idx, self.constellation)

    def score(self, rx, y, sample_weight=None) -> float:
        sent = bits_to_indices(np.atleast_2d(y), self.constellation)
        got = hard_decision(self.decision_function(rx), self.constellation)[: len(sent)]
        return float(np.mean(got == sent))


class WelchPsd(BaseEstimator):
    """PSD of a burst in dBr; ``fit`` stores ``freq_hz_`` and ``power_db_``."""

    def __init__(self, segment_len=4096, overlap=0.5, method="pro", bcu="8MHz"):
        self.segment_len = segment_len
        self.overlap = overlap
        self.method = method
        self.bcu = bcu

    def fit(self, X, y=None):
        p = load_profile(self.method, self.bcu)
        x = np.asarray(X).ravel()
        psd = estimate_psd(ShapedBurst(x, p.final_rate_hz, 0, [], p), self.segment_len, self.overlap)
        self.freq_hz_ = psd.freq_hz
        self.power_db_ = psd.power_db
        self.n_segments_ = psd.n_segments
        return self
