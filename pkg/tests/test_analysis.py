import math

import numpy as np
import pytest

from tvws_shaper.analysis import (
    PsdEstimate,
    SemMask,
    check_sem,
    compare_spectra,
    default_stopband,
    estimate_psd,
    image_bands,
    psd_to_csv,
    stopband_stats,
)
from tvws_shaper.params import load_profile
from tvws_shaper.shaping import random_payload, run_pipeline
from tvws_shaper.windowing import ShapedBurst


@pytest.fixture(scope="module")
def pro():
    return load_profile("pro")


@pytest.fixture(scope="module")
def pro_burst(pro):
    return run_pipeline(random_payload(np.random.default_rng(0), 100), "pro", pro)


def _raw(x, rate=1.0, p=None):
    return ShapedBurst(np.asarray(x, dtype=complex), rate, 0, [], p)


class TestEstimate:
    def test_tone_localised(self):
        rate = 1e6
        f0 = 123 * rate / 1024  # on a bin centre
        x = np.exp(2j * np.pi * f0 / rate * np.arange(1 << 15))
        psd = estimate_psd(_raw(x, rate), segment_len=1024)
        peak = psd.freq_hz[np.argmax(psd.power_db)]
        assert peak == pytest.approx(f0)
        assert psd.power_db.max() == pytest.approx(0.0)
        far = np.abs(psd.freq_hz - f0) > 5 * rate / 1024
        assert psd.power_db[far].max() < -60

    def test_white_noise_flat(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(1 << 18) + 1j * rng.standard_normal(1 << 18)
        psd = estimate_psd(_raw(x), segment_len=256)
        assert psd.n_segments > 1000
        spread = psd.power_db - np.mean(psd.power_db)
        assert np.max(np.abs(spread)) < 0.5

    def test_centred_and_sorted(self, pro_burst):
        psd = estimate_psd(pro_burst)
        assert np.all(np.diff(psd.freq_hz) > 0)
        assert len(psd.freq_hz) == 4096
        assert psd.freq_hz.min() == pytest.approx(-pro_burst.rate_hz / 2)

    def test_reference_is_data_band_mean(self, pro_burst):
        psd = estimate_psd(pro_burst)
        df = pro_burst.profile.subcarrier_spacing_hz
        band = (np.abs(psd.freq_hz) >= 2 * df) & (np.abs(psd.freq_hz) <= 58 * df)
        assert 10 * np.log10(np.mean(10 ** (psd.power_db[band] / 10))) == pytest.approx(0.0, abs=1e-9)

    def test_circular_shift_invariance(self, pro_burst):
        x = pro_burst.samples
        hop = 2048
        # a whole number of hops, so the wrapped burst is exactly one period
        n = (len(x) // hop) * hop
        base = ShapedBurst(x[:n], pro_burst.rate_hz, 100, [], pro_burst.profile)
        rolled = ShapedBurst(np.roll(x[:n], 7 * hop), pro_burst.rate_hz, 100, [], pro_burst.profile)
        a = estimate_psd(base, circular=True)
        b = estimate_psd(rolled, circular=True)
        assert np.max(np.abs(a.power_db - b.power_db)) < 0.1

    def test_segment_doubling_consistent(self, pro):
        long = run_pipeline(random_payload(np.random.default_rng(2), 200), "pro", pro)
        half = ShapedBurst(long.samples[: len(long) // 2], long.rate_hz, 100, [], pro)
        lo, hi = default_stopband(pro)
        a = estimate_psd(half)
        b = estimate_psd(long)
        assert b.n_segments >= 2 * a.n_segments - 1
        assert abs(stopband_stats(a, lo, hi)["mean_dbr"] - stopband_stats(b, lo, hi)["mean_dbr"]) <= 0.5

    @pytest.mark.parametrize("kwargs, match", [({"segment_len": 1 << 20}, "shorter"), ({"overlap": 0.95}, "overlap")])
    def test_errors(self, pro_burst, kwargs, match):
        with pytest.raises(ValueError, match=match):
            estimate_psd(pro_burst, **kwargs)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            PsdEstimate(np.zeros(3), np.zeros(4), 4, 1)


class TestMask:
    def test_default_shape(self, pro):
        m = SemMask.default(pro)
        edge = 58 * pro.subcarrier_spacing_hz
        assert m.limit(0.0) == 0.0
        assert m.limit(edge) == pytest.approx(0.0)
        assert m.limit(8e6 - edge) == pytest.approx(-55.0)
        assert m.limit(20e6) == pytest.approx(-55.0)
        assert m.limit(-4e6) == m.limit(4e6)
        mid = (edge + 8e6 - edge) / 2
        assert m.limit(mid) == pytest.approx(-27.5)
        assert m.validate() == []

    def test_plus_inf_mask_always_passes(self, pro_burst):
        psd = estimate_psd(pro_burst)
        rep = check_sem(psd, SemMask([(0, math.inf), (1e6, math.inf)]))
        assert rep.passed and rep.worst_margin_db == math.inf

    def test_minus_inf_mask_always_fails(self, pro_burst):
        psd = estimate_psd(pro_burst)
        rep = check_sem(psd, SemMask([(0, -math.inf), (1e6, -math.inf)]))
        assert not rep.passed and rep.worst_margin_db == -math.inf

    def test_margin_and_segments(self):
        f = np.linspace(-10, 10, 21)
        psd = PsdEstimate(f, np.where(np.abs(f) > 5, -20.0, 0.0), 21, 1)
        rep = check_sem(psd, SemMask([(0, 0), (5, 0), (6, -30)]))
        assert rep.worst_margin_db == pytest.approx(-10.0)
        assert abs(rep.worst_freq_hz) >= 6
        assert [s[:2] for s in rep.segment_margins] == [(0, 5), (5, 6), (6, math.inf)]
        assert rep.within(10) and not rep.within(9.9)

    def test_mask_narrower_than_psd_required(self):
        psd = PsdEstimate(np.linspace(-1, 1, 5), np.zeros(5), 5, 1)
        with pytest.raises(ValueError, match="mask reaches"):
            check_sem(psd, SemMask([(0, 0), (5, -55)]))

    def test_text_round_trip(self, tmp_path, pro):
        m = SemMask.default(pro)
        path = tmp_path / "mask.txt"
        path.write_text("# comment\n" + m.to_text())
        again = SemMask.read(path)
        assert np.allclose(again.breakpoints, m.breakpoints)

    def test_offsets_must_increase(self):
        with pytest.raises(ValueError):
            SemMask([(0, 0), (0, -10)])

    def test_validate_flags_weak_floor(self):
        assert SemMask([(0, 0), (1, -40)]).validate()


class TestCompare:
    def test_rate_mismatch(self, pro_burst):
        other = ShapedBurst(pro_burst.samples, pro_burst.rate_hz / 2, 0, [], pro_burst.profile)
        with pytest.raises(ValueError, match="different rates"):
            compare_spectra({"a": pro_burst, "b": other})

    def test_orderings_antisymmetric(self, pro, pro_burst):
        asp_burst = run_pipeline(random_payload(np.random.default_rng(0), 100), "asp")
        cmp = compare_spectra({"pro": pro_burst, "asp": asp_burst}, p=pro)
        assert cmp["orderings"][("pro", "asp")] == pytest.approx(-cmp["orderings"][("asp", "pro")])
        assert cmp["orderings"][("pro", "asp")] < -10

    def test_empty_stopband(self, pro_burst):
        with pytest.raises(ValueError, match="no bins"):
            stopband_stats(estimate_psd(pro_burst), 1e9)


def test_image_bands_step_by_ifft_rate(pro):
    bands = image_bands(pro)
    assert bands[0][0] == pytest.approx(pro.ifft_rate_hz - pro.occupied_edge_hz)
    assert all(hi <= pro.final_rate_hz / 2 for _, hi in bands)


def test_csv_layout(pro_burst):
    text = psd_to_csv(estimate_psd(pro_burst), "hello")
    lines = text.splitlines()
    assert lines[0] == "# hello" and lines[1] == "freq_hz,power_dbr"
    assert len(lines) == 4096 + 2
