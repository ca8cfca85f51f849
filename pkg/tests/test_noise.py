import math

import numpy as np
import pytest

from conftest import inverse_normal_tail
from qrng.errors import InsufficientDataError, InvalidParameterError
from qrng.noise import (
    ChannelLabel,
    NoiseBounds,
    NoiseChannel,
    combine_bounds,
    drift_negligibility_check,
    estimate_bounds,
    interferometer_drift,
)


def empirical_channel(samples, label=ChannelLabel.ELECTRICAL):
    return NoiseChannel(label, samples_mv=np.asarray(samples, dtype=float))


class TestEstimateBounds:
    def test_all_zero_samples(self):
        b = estimate_bounds(empirical_channel(np.zeros(20_000)), 0.99)
        assert (b.n_min_mv, b.n_max_mv) == (0.0, 0.0)

    def test_parametric_gaussian_paper_confidence(self):
        # oracle: bisection on erfc, independent of scipy's ndtri
        z = inverse_normal_tail(5e-7)
        b = estimate_bounds(
            NoiseChannel(ChannelLabel.ELECTRICAL, normal_mean_sd_mv=(0.0, 1.0)),
            0.999999,
        )
        assert b.n_max_mv == pytest.approx(z, abs=1e-9)
        assert b.n_max_mv == pytest.approx(4.892, abs=1e-3)
        assert b.n_min_mv == pytest.approx(-b.n_max_mv, abs=1e-12)

    def test_electrical_noise_sigma_reproduces_paper_bound(self):
        # sigma derived as 2.29 / 4.892; at 99.9999% the parametric bound
        # must come back to +-2.29 mV
        sigma = 2.29 / 4.892
        b = estimate_bounds(
            NoiseChannel(ChannelLabel.ELECTRICAL, normal_mean_sd_mv=(0.0, sigma)),
            0.999999,
        )
        assert b.n_max_mv == pytest.approx(2.29, abs=1e-3)
        assert b.n_min_mv == pytest.approx(-2.29, abs=1e-3)

    def test_empirical_gaussian_matches_parametric(self):
        rng = np.random.default_rng(42)
        samples = rng.normal(0.0, 0.468, 2_000_000)
        b = estimate_bounds(empirical_channel(samples), 0.999)
        z = inverse_normal_tail(0.0005)
        assert b.n_max_mv == pytest.approx(0.468 * z, rel=0.05)
        assert b.n_min_mv == pytest.approx(-0.468 * z, rel=0.05)

    def test_sample_floor_enforced(self):
        with pytest.raises(InsufficientDataError):
            estimate_bounds(empirical_channel(np.zeros(5_000)), 0.99)
        # 10^5 samples cannot support 99.9999% tails
        with pytest.raises(InsufficientDataError):
            estimate_bounds(empirical_channel(np.zeros(100_000)), 0.999999)

    def test_confidence_domain(self):
        ch = empirical_channel(np.zeros(20_000))
        for bad in (0.5, 0.0, 1.0, -0.1):
            with pytest.raises(InvalidParameterError):
                estimate_bounds(ch, bad)

    def test_monotone_in_confidence(self):
        rng = np.random.default_rng(1)
        ch = empirical_channel(rng.normal(0, 1, 200_000))
        widths = [
            estimate_bounds(ch, c).width_mv for c in (0.9, 0.99, 0.999, 0.9999)
        ]
        assert all(a <= b for a, b in zip(widths, widths[1:]))

    def test_asymmetry_preserved(self):
        rng = np.random.default_rng(2)
        skewed = np.concatenate([rng.normal(0, 1, 100_000), rng.exponential(2, 30_000)])
        skewed -= skewed.mean()
        b = estimate_bounds(empirical_channel(skewed), 0.999)
        assert b.n_max_mv > -b.n_min_mv  # per-tail quantiles, not symmetrized

    def test_symmetric_data_symmetric_bounds(self):
        rng = np.random.default_rng(9)
        ch = empirical_channel(rng.normal(0, 1, 1_000_000))
        b = estimate_bounds(ch, 0.999)
        assert abs(abs(b.n_min_mv) - abs(b.n_max_mv)) < 0.05 * b.n_max_mv


class TestCombineBounds:
    def test_paper_totals_exact(self):
        parts = [
            NoiseBounds(-2.29, 2.29, 0.999999),
            NoiseBounds(-1.88, 1.88, 0.999999),
            NoiseBounds(-2.07, 2.04, 0.999999),
        ]
        total = combine_bounds(parts)
        assert total.n_min_mv == -6.24
        assert total.n_max_mv == 6.21

    def test_single_element_identity(self):
        b = NoiseBounds(-1.0, 2.0, 0.99)
        t = combine_bounds([b])
        assert (t.n_min_mv, t.n_max_mv, t.confidence) == (-1.0, 2.0, 0.99)

    def test_zero_channel_absorbs(self):
        t = combine_bounds([NoiseBounds(-3.0, 3.0, 0.99), NoiseBounds(0.0, 0.0, 0.99)])
        assert (t.n_min_mv, t.n_max_mv) == (-3.0, 3.0)

    def test_empty_rejected(self):
        with pytest.raises(InvalidParameterError):
            combine_bounds([])

    def test_mixed_confidence_rejected(self):
        with pytest.raises(InvalidParameterError):
            combine_bounds([NoiseBounds(-1, 1, 0.99), NoiseBounds(-1, 1, 0.999)])

    def test_associative_commutative(self):
        rng = np.random.default_rng(5)
        parts = [
            NoiseBounds(-float(a), float(b), 0.99)
            for a, b in rng.uniform(0.1, 3.0, (5, 2))
        ]
        perm = [parts[i] for i in rng.permutation(5)]
        t1, t2 = combine_bounds(parts), combine_bounds(perm)
        assert t1.n_min_mv == pytest.approx(t2.n_min_mv, rel=1e-12)
        assert t1.n_max_mv == pytest.approx(t2.n_max_mv, rel=1e-12)
        nested = combine_bounds([combine_bounds(parts[:2]), combine_bounds(parts[2:])])
        assert nested.n_min_mv == pytest.approx(t1.n_min_mv, rel=1e-12)


class TestDrift:
    def test_case1_drift(self):
        assert interferometer_drift(50e-9, 180.0) == pytest.approx(8.727e-10, rel=1e-3)

    def test_case23_drift(self):
        assert interferometer_drift(2e-9, 180.0) == pytest.approx(3.49e-11, rel=1e-2)

    def test_vanishing_sample_period(self):
        assert interferometer_drift(1e-15, 180.0) < 1e-16

    def test_rejects_nonpositive(self):
        with pytest.raises(InvalidParameterError):
            interferometer_drift(0.0, 180.0)
        with pytest.raises(InvalidParameterError):
            interferometer_drift(1e-9, 0.0)

    def test_negligibility_check(self):
        rep = drift_negligibility_check(8.727e-10)
        assert rep.negligible
        assert rep.ratio_to_two_pi == pytest.approx(8.727e-10 / (2 * math.pi), rel=1e-9)
        # boundary is strict
        assert not drift_negligibility_check(1e-6, threshold_rad=1e-6).negligible
        assert not drift_negligibility_check(1.0).negligible


class TestNoiseBoundsType:
    def test_must_straddle_zero(self):
        with pytest.raises(InvalidParameterError):
            NoiseBounds(0.5, 1.0, 0.99)
        with pytest.raises(InvalidParameterError):
            NoiseBounds(-1.0, -0.5, 0.99)

    def test_channel_needs_exactly_one_source(self):
        with pytest.raises(InvalidParameterError):
            NoiseChannel(ChannelLabel.ELECTRICAL)
        with pytest.raises(InvalidParameterError):
            NoiseChannel(
                ChannelLabel.ELECTRICAL,
                samples_mv=np.zeros(10),
                normal_mean_sd_mv=(0, 1),
            )
