import math

import numpy as np
import pytest

from qrng.source import LaserSpec, BeatSpec, QuantumSignalModel


@pytest.fixture
def case1_lasers():
    ld1 = LaserSpec(center_wavelength_nm=1562.4, linewidth_3db_nm=0.0177)
    ld2 = LaserSpec(center_wavelength_nm=1562.4, linewidth_3db_nm=0.0172)
    return ld1, ld2


@pytest.fixture
def case1_beat():
    return BeatSpec(mean_beat_frequency_hz=278.7e6, beat_frequency_sd_hz=30.2e6)


@pytest.fixture
def case1_model():
    return QuantumSignalModel(amplitude_mv=82.9, center_mv=0.0)


def inverse_normal_tail(p_tail: float) -> float:
    """Independent Phi^-1(1 - p_tail) oracle: bisection on math.erfc."""
    lo, hi = 0.0, 12.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if math.erfc(mid / math.sqrt(2.0)) / 2.0 > p_tail:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ks_distance(samples: np.ndarray, cdf) -> float:
    """Two-sided Kolmogorov-Smirnov sup distance against a callable CDF."""
    v = np.sort(np.asarray(samples, dtype=np.float64))
    n = v.size
    f = cdf(v)
    hi = np.max(np.arange(1, n + 1) / n - f)
    lo = np.max(f - np.arange(0, n) / n)
    return float(max(hi, lo))
