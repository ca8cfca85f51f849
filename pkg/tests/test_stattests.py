import json
import math

import numpy as np
import pytest

from qrng.errors import (
    DegenerateInputError,
    InsufficientDataError,
    InvalidParameterError,
)
from qrng.stattests import (
    autocorrelation,
    block_frequency,
    bytes_to_bits,
    monobit_frequency,
    runs_test,
    suite,
)


class TestAutocorrelation:
    def test_lag_zero_is_one(self):
        rng = np.random.default_rng(0)
        r = autocorrelation(rng.normal(size=50_000), 10)
        assert r.coefficients[0] == 1.0

    def test_alternating_sequence_fully_anticorrelated(self):
        x = np.tile([1.0, -1.0], 50_000)
        r = autocorrelation(x, 1)
        # biased estimator: -(N-1)/N, converging to -1
        assert r.coefficients[1] == pytest.approx(-1.0, abs=2.0 / x.size)

    def test_magnitude_bounded_by_one(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            x = rng.normal(size=20_000).cumsum()  # strongly correlated
            r = autocorrelation(x, 50)
            assert np.all(np.abs(r.coefficients) <= 1.0 + 1e-12)

    def test_iid_bytes_null_behavior(self):
        # i.i.d. null oracle: all |R(k)| below 4/sqrt(N), >= 97% of p > 0.01
        rng = np.random.default_rng(2)
        x = rng.integers(0, 256, 1_000_000).astype(float)
        r = autocorrelation(x, 100)
        body = r.coefficients[1:]
        assert np.all(np.abs(body) < 4.0 / math.sqrt(x.size))
        assert np.mean(r.p_values[1:] > 0.01) >= 0.97

    def test_constant_sequence_degenerate(self):
        with pytest.raises(DegenerateInputError):
            autocorrelation(np.ones(20_000), 5)

    def test_short_sequence_insufficient(self):
        with pytest.raises(InsufficientDataError):
            autocorrelation(np.arange(5.0), 10)

    def test_small_n_warns(self):
        with pytest.warns(UserWarning, match="asymptotic"):
            autocorrelation(np.random.default_rng(3).normal(size=500), 3)

    def test_p_formula(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=40_000)
        r = autocorrelation(x, 5)
        for k in (1, 3, 5):
            expect = math.erfc(abs(r.coefficients[k]) * math.sqrt(x.size / 2.0))
            assert r.p_values[k] == pytest.approx(expect, rel=1e-12)


class TestMonobit:
    def test_balanced_is_p_one(self):
        bits = np.tile([0, 1], 5_000)
        s, p = monobit_frequency(bits)
        assert s == 0.0
        assert p == 1.0

    def test_all_ones_underflows_to_zero(self):
        s, p = monobit_frequency(np.ones(10_000, dtype=np.uint8))
        assert p == 0.0  # < 1e-300 regime, flagged as underflow by the suite

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            monobit_frequency(np.ones(99, dtype=np.uint8))

    def test_random_bits_pass(self):
        rng = np.random.default_rng(5)
        _, p = monobit_frequency(rng.integers(0, 2, 1_000_000))
        assert p > 0.01


class TestBlockFrequency:
    def test_perfectly_balanced_blocks(self):
        block = np.tile([0, 1], 64)  # each 128-bit block exactly half ones
        bits = np.tile(block, 200)
        chi2, p = block_frequency(bits, 128)
        assert chi2 == 0.0
        assert p == 1.0

    def test_alternating_saturated_blocks(self):
        bits = np.concatenate([np.ones(128), np.zeros(128)] * 100).astype(np.uint8)
        _, p = block_frequency(bits, 128)
        assert p < 1e-100

    def test_insufficient_length(self):
        with pytest.raises(InsufficientDataError):
            block_frequency(np.zeros(1000, dtype=np.uint8), 128)

    def test_random_bits_pass(self):
        rng = np.random.default_rng(6)
        _, p = block_frequency(rng.integers(0, 2, 1_000_000), 128)
        assert p > 0.01


class TestRuns:
    def test_strictly_alternating_fails(self):
        bits = np.tile([0, 1], 5_000)
        res = runs_test(bits)
        assert res.applicable
        assert res.statistic == bits.size  # every bit starts a run
        assert res.p_value < 1e-100

    def test_all_ones_not_applicable(self):
        res = runs_test(np.ones(10_000, dtype=np.uint8))
        assert not res.applicable

    def test_random_bits_pass(self):
        rng = np.random.default_rng(7)
        res = runs_test(rng.integers(0, 2, 1_000_000))
        assert res.applicable
        assert res.p_value > 0.01

    def test_run_count_statistic(self):
        bits = np.array([1, 1, 0, 0, 0, 1, 0, 1, 1, 1] * 20, dtype=np.uint8)
        res = runs_test(bits)
        runs = 1 + int(np.count_nonzero(np.diff(bits)))
        assert res.statistic == runs


class TestSuite:
    def test_good_stream_all_pass(self):
        rng = np.random.default_rng(8)
        result = suite(rng.integers(0, 2, 1_000_000), alpha=0.01)
        assert result.all_passed
        names = [e.name for e in result.entries]
        assert names == ["monobit_frequency", "block_frequency", "runs", "autocorrelation"]
        for e in result.entries:
            assert e.passed == (e.p_value > 0.01)

    def test_all_zero_stream_fails_monobit(self):
        result = suite(np.zeros(100_000, dtype=np.uint8), alpha=0.01)
        assert not result.all_passed
        by_name = {e.name: e for e in result.entries}
        assert not by_name["monobit_frequency"].passed
        assert by_name["monobit_frequency"].underflow
        assert not by_name["runs"].applicable  # prerequisite gate

    def test_empty_input_is_an_error(self):
        with pytest.raises(InvalidParameterError):
            suite(np.array([], dtype=np.uint8))

    def test_insufficiency_reported_not_failed(self):
        rng = np.random.default_rng(9)
        result = suite(rng.integers(0, 2, 5_000), alpha=0.01)  # too short for blockfreq
        by_name = {e.name: e for e in result.entries}
        assert not by_name["block_frequency"].applicable
        assert result.all_passed  # N/A entries are not failures

    def test_deterministic(self):
        rng = np.random.default_rng(10)
        bits = rng.integers(0, 2, 200_000)
        a = json.dumps(suite(bits).to_json_dict(), sort_keys=True)
        b = json.dumps(suite(bits).to_json_dict(), sort_keys=True)
        assert a == b

    def test_high_alpha_thresholds_by_design(self):
        # at alpha = 0.5 roughly half of all null tests fail; threshold
        # semantics, not a defect
        rng = np.random.default_rng(11)
        fails = 0
        for trial in range(20):
            result = suite(rng.integers(0, 2, 20_000), alpha=0.5)
            fails += not result.all_passed
        assert fails > 0

    def test_csv_emission(self, tmp_path):
        rng = np.random.default_rng(12)
        result = suite(rng.integers(0, 2, 150_000))
        ac = tmp_path / "autocorr.csv"
        pv = tmp_path / "pvalues.csv"
        result.write_autocorr_csv(ac)
        result.write_pvalue_csv(pv)
        lines = ac.read_text().splitlines()
        assert lines[0] == "lag,R,p"
        assert len(lines) == 102  # header + lags 0..100
        assert pv.read_text().splitlines()[0] == "test,p"

    def test_sidak_aggregation_matches_min_p(self):
        rng = np.random.default_rng(13)
        result = suite(rng.integers(0, 2, 400_000))
        q_min = float(np.min(result.autocorr.p_values[1:]))
        expect = 1.0 - (1.0 - q_min) ** 100
        by_name = {e.name: e for e in result.entries}
        assert by_name["autocorrelation"].p_value == pytest.approx(expect, rel=1e-6)


class TestBitHelpers:
    def test_bytes_to_bits_msb_first(self):
        bits = bytes_to_bits(np.array([0b10110000], dtype=np.uint8), 4)
        assert list(bits) == [1, 0, 1, 1]
