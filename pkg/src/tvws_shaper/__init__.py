"""Pulse-shaping and spectral-leakage toolkit for the 802.11af TVHT transmit chain."""

from .analysis import PsdEstimate, SemMask, check_sem, compare_spectra, estimate_psd
from .link import ChannelModel, LinkResult, apply_channel, receive, run_ser_sweep
from .params import ConfigurationError, Method, SubcarrierMap, TvhtProfile, load_profile, validate_profile
from .shaping import FirFilter, apply_fir, design_fir, run_pipeline, zero_stuff
from .tx_chain import FreqSymbol, TimeSymbol, demodulate, ifft_modulate, map_payload
from .windowing import ShapedBurst, WindowFamily, WindowSpec, make_window, shape_and_overlap

__version__ = "0.1.0"
