import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tvws_shaper.params import SubcarrierMap, load_profile
from tvws_shaper.tx_chain import (
    BITS_PER_SYMBOL,
    CONSTELLATIONS,
    FreqSymbol,
    TimeSymbol,
    bits_per_ofdm_symbol,
    bits_to_indices,
    demodulate,
    hard_decision,
    ifft_modulate,
    indices_to_bits,
    map_payload,
    pilot_polarity,
)


def _direct_idft(X: FreqSymbol, p):
    """Literal sum x[n] = (1/N) sum_k X_k exp(j 2 pi k n / (M N)) over centered k."""
    n_fft = p.n_fft
    k = np.arange(n_fft) - n_fft // 2
    n = np.arange(n_fft)
    return (np.exp(2j * np.pi * np.outer(n, k) / n_fft) @ X.bins) / p.n_base


@pytest.fixture(scope="module")
def pro():
    return load_profile("pro")


@pytest.fixture(scope="module")
def asp():
    return load_profile("asp")


class TestConstellations:
    @pytest.mark.parametrize("name", sorted(CONSTELLATIONS))
    def test_unit_average_energy(self, name):
        assert np.mean(np.abs(CONSTELLATIONS[name]) ** 2) == pytest.approx(1.0)

    @pytest.mark.parametrize("name", sorted(CONSTELLATIONS))
    def test_gray_neighbours_differ_in_one_bit(self, name):
        pts = CONSTELLATIONS[name]
        d = np.abs(pts[:, None] - pts[None, :])
        dmin = d[d > 0].min()
        for i in range(len(pts)):
            for j in range(len(pts)):
                if i != j and abs(d[i, j] - dmin) < 1e-9:
                    assert bin(i ^ j).count("1") == 1

    def test_qpsk_zero_bits_map_to_first_quadrant(self):
        assert CONSTELLATIONS["qpsk"][0] == pytest.approx((1 + 1j) / np.sqrt(2))

    @given(st.lists(st.integers(0, 15), min_size=1, max_size=64))
    def test_index_bit_round_trip(self, idx):
        idx = np.array(idx)
        assert np.array_equal(bits_to_indices(indices_to_bits(idx, "qam16"), "qam16"), idx)

    def test_hard_decision_recovers_exact_points(self):
        for name, pts in CONSTELLATIONS.items():
            assert np.array_equal(hard_decision(pts, name), np.arange(len(pts)))

    def test_unknown_constellation(self):
        with pytest.raises(ValueError, match="unknown constellation"):
            bits_to_indices([0, 1], "8psk")


class TestMapPayload:
    def test_layout(self):
        bits = np.zeros(bits_per_ofdm_symbol("qpsk"), dtype=int)
        X = map_payload(bits, "qpsk")
        smap = SubcarrierMap.tvht()
        assert X.n_bins == 128
        assert np.allclose(X.at(smap.sorted_data()), CONSTELLATIONS["qpsk"][0])
        assert np.allclose(X.at(smap.sorted_pilots()), 1.0)
        nulls = [k for k in range(-64, 64) if k not in smap.occupied_indices]
        assert np.all(X.at(nulls) == 0)

    def test_pilot_sign_per_row(self):
        bits = np.zeros((3, 216), dtype=int)
        X = map_payload(bits, pilot_sign=np.array([1.0, -1.0, 1.0]))
        pil = X.at(SubcarrierMap.tvht().sorted_pilots())
        assert np.allclose(pil[1], -1) and np.allclose(pil[0], 1)

    @pytest.mark.parametrize("n_bits", [0, 215, 217])
    def test_wrong_bit_count(self, n_bits):
        with pytest.raises(ValueError, match="expected 216 bits"):
            map_payload(np.zeros(n_bits, dtype=int), "qpsk")

    @pytest.mark.parametrize("name, n", [("bpsk", 108), ("qpsk", 216), ("qam16", 432)])
    def test_bits_per_symbol(self, name, n):
        assert bits_per_ofdm_symbol(name) == n == 108 * BITS_PER_SYMBOL[name]


class TestModulation:
    def test_matches_direct_idft(self, pro):
        rng = np.random.default_rng(1)
        bits = rng.integers(0, 2, 216)
        X = map_payload(bits, n_bins=pro.n_fft)
        y = ifft_modulate(X, pro)
        body = _direct_idft(X, pro)
        assert np.allclose(y.samples[pro.n_cp :], body, atol=1e-12)

    def test_cyclic_prefix_copies_tail(self, asp):
        X = map_payload(np.ones(216, dtype=int), n_bins=asp.n_fft)
        y = ifft_modulate(X, asp).samples
        assert len(y) == asp.symbol_len
        assert np.array_equal(y[: asp.n_cp], y[-asp.n_cp :])

    @pytest.mark.parametrize("method", ["asp", "pro"])
    def test_parseval_by_direct_summation(self, method):
        p = load_profile(method)
        rng = np.random.default_rng(2)
        X = map_payload(rng.integers(0, 2, 216), n_bins=p.n_fft)
        body = ifft_modulate(X, p).samples[p.n_cp :]
        time_energy = sum(abs(v) ** 2 for v in body)
        freq_energy = sum(abs(v) ** 2 for v in X.bins)
        # body = (MN / N) * idft  ->  sum |x|^2 = (M / N) * sum |X|^2
        assert time_energy == pytest.approx(p.guard_extension_m / p.n_base * freq_energy, rel=1e-12)

    def test_per_sample_power_independent_of_m(self, asp, pro):
        bits = np.random.default_rng(3).integers(0, 2, (20, 216))
        powers = []
        for p in (asp, pro):
            y = ifft_modulate(map_payload(bits, n_bins=p.n_fft), p).samples[:, p.n_cp :]
            powers.append(np.mean(np.abs(y) ** 2))
        assert powers[0] == pytest.approx(powers[1], rel=1e-12)

    def test_dc_bin_gives_constant(self, pro):
        X = np.zeros(pro.n_fft, dtype=complex)
        X[pro.n_fft // 2] = pro.n_base
        y = ifft_modulate(FreqSymbol(X), pro).samples
        assert np.allclose(y, 1.0)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), method=st.sampled_from(["asp", "pro"]))
    def test_demodulate_inverts(self, seed, method):
        p = load_profile(method)
        rng = np.random.default_rng(seed)
        X = map_payload(rng.integers(0, 2, (3, 216)), n_bins=p.n_fft)
        Y = demodulate(ifft_modulate(X, p), p)
        assert np.max(np.abs(Y.bins - X.bins)) < 1e-12

    def test_wrong_grid_size(self, pro):
        with pytest.raises(ValueError, match="bins"):
            ifft_modulate(FreqSymbol(np.zeros(128)), pro)
        with pytest.raises(ValueError, match="samples"):
            demodulate(TimeSymbol(np.zeros(10)), pro)

    def test_resized_keeps_centre(self):
        X = map_payload(np.zeros(216, dtype=int))
        big = X.resized(512)
        assert np.array_equal(big.at(range(-58, 59)), X.at(range(-58, 59)))


def test_pilot_polarity_prefix():
    expected = [1, 1, 1, 1, -1, -1, -1, 1, -1, -1, -1, -1, 1, 1, -1, 1]
    assert pilot_polarity(16).tolist() == expected


def test_pilot_polarity_period_127():
    seq = pilot_polarity(254)
    assert np.array_equal(seq[:127], seq[127:])
    assert np.array_equal(pilot_polarity(5, start=127), seq[:5])
