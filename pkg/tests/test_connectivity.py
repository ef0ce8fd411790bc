import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import pli_bruteforce, plv_bruteforce
from neuroconn.connectivity import (
    ConnectivityMatrix,
    Metric,
    band_from_name,
    connectivity_matrix,
    load_matrix,
    load_trial_stack,
    phase_series,
    pli_pair,
    plv_pair,
    save_matrix,
    save_matrix_csv,
    save_trial_stack,
    trial_connectivity,
    wrap_phase,
)
from neuroconn.signal_core import BAND_BY_NAME, CANONICAL_BANDS, EpochSet


class TestPlvPair:
    def test_identical_series_is_one(self):
        rng = np.random.default_rng(0)
        a = rng.uniform(-np.pi, np.pi, 500)
        assert plv_pair(a, a) == pytest.approx(1.0, abs=1e-12)

    def test_constant_offset_is_one(self):
        rng = np.random.default_rng(1)
        a = rng.uniform(-np.pi, np.pi, 500)
        assert plv_pair(a, a + np.pi / 2) == pytest.approx(1.0, abs=1e-12)

    def test_roots_of_unity_cancel(self):
        for m in (8, 360, 1500):
            d = 2.0 * np.pi * np.arange(m) / m
            assert plv_pair(d, np.zeros(m)) == pytest.approx(0.0, abs=1e-12)

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            a = rng.uniform(-np.pi, np.pi, 1000)
            b = rng.uniform(-np.pi, np.pi, 1000)
            assert plv_pair(a, b) == pytest.approx(plv_bruteforce(a, b), abs=1e-12)
            assert plv_pair(a, b) < 0.1

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            plv_pair(np.zeros(5), np.zeros(6))

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            plv_pair(np.zeros(0), np.zeros(0))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            plv_pair(np.array([0.0, np.nan]), np.zeros(2))


class TestPliPair:
    def test_constant_positive_lag_is_one(self):
        a = np.linspace(-3, 3, 200)
        assert pli_pair(a + 0.3, a) == 1.0

    def test_zero_difference_is_zero(self):
        a = np.linspace(-3, 3, 200)
        assert pli_pair(a, a) == 0.0

    def test_balanced_signs_cancel(self):
        a = np.zeros(200)
        b = np.concatenate([np.full(100, 0.3), np.full(100, -0.3)])
        assert pli_pair(a + b, a) == pytest.approx(0.0, abs=1e-12)

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = rng.uniform(-4 * np.pi, 4 * np.pi, 1000)
            b = rng.uniform(-4 * np.pi, 4 * np.pi, 1000)
            assert pli_pair(a, b) == pytest.approx(pli_bruteforce(a, b), abs=1e-12)
            assert pli_pair(a, b, signed=True) == pytest.approx(
                pli_bruteforce(a, b, signed=True), abs=1e-12)

    def test_sign_antisymmetry_before_modulus(self):
        rng = np.random.default_rng(4)
        a = rng.uniform(-np.pi, np.pi, 600)
        b = rng.uniform(-np.pi, np.pi, 600)
        assert pli_pair(a, b, signed=True) == -pli_pair(b, a, signed=True)
        assert pli_pair(a, b) == pli_pair(b, a)

    def test_wrap_half_open_interval(self):
        # pi maps to +1, -pi wraps to pi (+1), just under pi stays positive
        assert np.sign(wrap_phase(np.array([np.pi])))[0] == 1.0
        assert np.sign(wrap_phase(np.array([-np.pi])))[0] == 1.0
        assert wrap_phase(np.array([3.0 * np.pi / 2]))[0] == pytest.approx(-np.pi / 2)

    def test_lag_invisible_without_wrap_is_detected(self):
        # constant lag 0.3 with phases that cross the +-pi seam
        rng = np.random.default_rng(5)
        base = np.cumsum(rng.uniform(0, 0.5, 2000))  # unwrapped, growing
        assert pli_pair(base + 0.3, base) == 1.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), m=st.integers(1, 400))
def test_pair_metrics_in_unit_interval(seed, m):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-10, 10, m)
    b = rng.uniform(-10, 10, m)
    assert 0.0 <= plv_pair(a, b) <= 1.0
    assert 0.0 <= pli_pair(a, b) <= 1.0


class TestConnectivityMatrix:
    def make_epoch(self, seed=0, n_channels=4, n=1000, rate=250.0):
        rng = np.random.default_rng(seed)
        return rng.standard_normal((n_channels, n)), rate

    def test_two_channels_match_pair_functions(self):
        epoch, rate = self.make_epoch(n_channels=2)
        band = BAND_BY_NAME["alpha"]
        phases = phase_series(epoch, rate, band)
        plv = connectivity_matrix(epoch, rate, band, "plv")
        assert plv.values[0, 1] == pytest.approx(plv_pair(phases[0], phases[1]), abs=1e-12)
        assert plv.values[0, 0] == 1.0 and plv.values[1, 1] == 1.0
        pli = connectivity_matrix(epoch, rate, band, "pli")
        assert pli.values[0, 1] == pytest.approx(pli_pair(phases[0], phases[1]), abs=1e-12)
        assert pli.values[0, 0] == 0.0

    def test_shared_tone_with_weak_noise_locks(self):
        # identical 10 Hz sinusoid + independent noise 40 dB down
        rng = np.random.default_rng(6)
        t = np.arange(1000) / 250.0
        base = np.sin(2.0 * np.pi * 10.0 * t)
        noise_amp = 10.0 ** (-40.0 / 20.0)  # 40 dB below unit amplitude
        epoch = np.stack([
            base + noise_amp * rng.standard_normal(t.size),
            base + noise_amp * rng.standard_normal(t.size),
        ])
        plv = connectivity_matrix(epoch, 250.0, BAND_BY_NAME["alpha"], "plv")
        assert plv.values[0, 1] > 0.99

    def test_independent_noise_null_levels(self):
        # Frozen from the null-distribution oracle (8 channels of white noise,
        # M = 1500 after trimming, rate 250 Hz, seed sweep): mean off-diagonal
        # PLV ~0.19/0.15/0.15/0.08/0.09 for delta..gamma. The narrow bands sit
        # above 0.15 because phase decorrelates only at the band rate.
        bounds = {"delta": 0.25, "theta": 0.21, "alpha": 0.21, "beta": 0.15, "gamma": 0.15}
        rng = np.random.default_rng(11)
        x = rng.standard_normal((8, 1874))  # 1874 - 2*187 = 1500 samples used
        off = ~np.eye(8, dtype=bool)
        for band in CANONICAL_BANDS:
            m = connectivity_matrix(x, 250.0, band, "plv")
            assert m.n_samples_used == 1500
            assert m.values[off].mean() < bounds[band.name.value], band.name.value

    def test_symmetry_range_diagonal(self):
        epoch, rate = self.make_epoch(seed=7)
        for metric, diag in (("plv", 1.0), ("pli", 0.0)):
            m = connectivity_matrix(epoch, rate, BAND_BY_NAME["beta"], metric)
            assert np.array_equal(m.values, m.values.T)
            assert m.values.min() >= 0.0 and m.values.max() <= 1.0
            assert np.allclose(np.diag(m.values), diag)

    def test_plv_amplitude_invariance(self):
        epoch, rate = self.make_epoch(seed=8)
        scaled = epoch.copy()
        scaled[1] *= 37.5
        a = connectivity_matrix(epoch, rate, BAND_BY_NAME["alpha"], "plv").values
        b = connectivity_matrix(scaled, rate, BAND_BY_NAME["alpha"], "plv").values
        assert np.abs(a - b).max() < 1e-9

    def test_signed_pli_debug_mode(self):
        epoch, rate = self.make_epoch(seed=9)
        signed = connectivity_matrix(epoch, rate, BAND_BY_NAME["beta"], "pli", signed_pli=True)
        unsigned = connectivity_matrix(epoch, rate, BAND_BY_NAME["beta"], "pli")
        assert signed.signed
        assert np.allclose(np.abs(signed.values), unsigned.values)
        assert signed.values.min() >= -1.0

    def test_single_channel_rejected(self):
        with pytest.raises(ValueError, match="2 channels"):
            connectivity_matrix(np.zeros((1, 100)), 250.0, BAND_BY_NAME["alpha"], "plv")

    def test_asymmetric_values_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            ConnectivityMatrix(Metric.PLV, BAND_BY_NAME["alpha"],
                               np.array([[1.0, 0.2], [0.3, 1.0]]), 100)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="outside"):
            ConnectivityMatrix(Metric.PLV, BAND_BY_NAME["alpha"],
                               np.array([[1.0, 1.2], [1.2, 1.0]]), 100)


class TestTrialConnectivity:
    def test_jobs_do_not_change_result(self):
        rng = np.random.default_rng(10)
        epochs = EpochSet(rng.standard_normal((6, 4, 500)), np.arange(6) % 2,
                          ["overt"] * 6, 250.0)
        seq = trial_connectivity(epochs, BAND_BY_NAME["gamma"], "plv", jobs=1)
        par = trial_connectivity(epochs, BAND_BY_NAME["gamma"], "plv", jobs=4)
        assert np.array_equal(seq, par)


class TestExports:
    def make_matrix(self):
        rng = np.random.default_rng(12)
        epoch = rng.standard_normal((3, 800))
        return connectivity_matrix(epoch, 250.0, BAND_BY_NAME["gamma"], "plv")

    def test_binary_round_trip(self, tmp_path):
        m = self.make_matrix()
        path = save_matrix(m, tmp_path / "m.f32")
        loaded = load_matrix(path)
        assert np.array_equal(loaded.values,
                              m.values.astype("<f4").astype(np.float64))
        assert loaded.metric == m.metric
        assert loaded.band == m.band
        assert loaded.n_samples_used == m.n_samples_used

    def test_csv_header_row(self, tmp_path):
        m = self.make_matrix()
        path = save_matrix_csv(m, tmp_path / "m.csv", ("Fz", "Cz", "Pz"))
        lines = path.read_text().splitlines()
        assert lines[0] == "Fz,Cz,Pz"
        assert len(lines) == 4
        first = [float(v) for v in lines[1].split(",")]
        assert first == list(m.values[0])

    def test_csv_name_count_mismatch(self, tmp_path):
        with pytest.raises(ValueError, match="names"):
            save_matrix_csv(self.make_matrix(), tmp_path / "m.csv", ("a",))

    def test_trial_stack_round_trip(self, tmp_path):
        rng = np.random.default_rng(13)
        epochs = EpochSet(rng.standard_normal((4, 3, 500)), [0, 1, 0, 1],
                          ["imagined"] * 4, 250.0)
        band = BAND_BY_NAME["beta"]
        stack = trial_connectivity(epochs, band, "pli")
        path = save_trial_stack(stack, epochs, "pli", band, 400, tmp_path)
        loaded, meta = load_trial_stack(path)
        assert np.array_equal(loaded, stack.astype("<f4").astype(np.float64))
        assert meta["metric"] == "pli"
        assert meta["band"] == "beta"
        assert meta["class_labels"] == [0, 1, 0, 1]
        assert meta["M"] == 400

    def test_band_from_name_unknown(self):
        with pytest.raises(ValueError, match="unknown band"):
            band_from_name("epsilon")
