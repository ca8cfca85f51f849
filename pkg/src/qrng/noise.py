"""Classical-noise channels and their worst-case bounds.

The entropy certifier treats classical noise as adversarial side
information, so all that matters downstream is the confidence interval
[n_min, n_max] of the summed channels. Channels are AC-coupled and
zero-mean by construction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import InsufficientDataError, InvalidParameterError


class ChannelLabel(enum.Enum):
    ELECTRICAL = "electrical"
    INTENSITY_LD1 = "intensity_ld1"
    INTENSITY_LD2 = "intensity_ld2"


EMPIRICAL_SAMPLE_FLOOR = 10_000


@dataclass(frozen=True)
class NoiseChannel:
    """One classical noise source: empirical samples or a Normal(mean, sd) fit.

    Exactly one of ``samples_mv`` / ``normal_mean_sd_mv`` must be given.
    """

    label: ChannelLabel
    samples_mv: np.ndarray | None = None
    normal_mean_sd_mv: tuple[float, float] | None = None

    def __post_init__(self):
        if (self.samples_mv is None) == (self.normal_mean_sd_mv is None):
            raise InvalidParameterError(
                "channel must be either empirical (samples_mv) or parametric"
                " (normal_mean_sd_mv), not both or neither"
            )
        if self.samples_mv is not None:
            object.__setattr__(
                self, "samples_mv", np.asarray(self.samples_mv, dtype=np.float64)
            )
        if self.normal_mean_sd_mv is not None and self.normal_mean_sd_mv[1] < 0:
            raise InvalidParameterError("parametric sd must be >= 0")


@dataclass(frozen=True)
class NoiseBounds:
    """Two-sided interval of the total classical noise at a stated confidence."""

    n_min_mv: float
    n_max_mv: float
    confidence: float

    def __post_init__(self):
        if not 0.0 < self.confidence < 1.0:
            raise InvalidParameterError("confidence must lie in (0, 1)")
        if not self.n_min_mv <= 0.0 <= self.n_max_mv:
            raise InvalidParameterError(
                f"noise is zero-mean by construction; bounds ({self.n_min_mv},"
                f" {self.n_max_mv}) must straddle 0"
            )

    @property
    def width_mv(self) -> float:
        return self.n_max_mv - self.n_min_mv

    def to_json_dict(self) -> dict:
        return {
            "n_min_mv": self.n_min_mv,
            "n_max_mv": self.n_max_mv,
            "confidence": self.confidence,
        }


def estimate_bounds(channel: NoiseChannel, confidence: float) -> NoiseBounds:
    """Symmetric-tail bounds: each tail carries (1-confidence)/2.

    Empirical channels use the per-tail sample quantiles (asymmetry of the
    data is preserved, it is not symmetrized); parametric channels use the
    Gaussian quantiles. Estimating a 1-confidence tail needs at least
    2/(1-confidence) samples.
    """
    if not 0.5 < confidence < 1.0:
        raise InvalidParameterError("confidence must lie in (0.5, 1)")
    tail = (1.0 - confidence) / 2.0
    if channel.normal_mean_sd_mv is not None:
        mean, sd = channel.normal_mean_sd_mv
        z = ndtri(1.0 - tail)
        return NoiseBounds(mean - z * sd, mean + z * sd, confidence)

    samples = channel.samples_mv
    needed = max(EMPIRICAL_SAMPLE_FLOOR, math.ceil(2.0 / (1.0 - confidence)))
    if samples.size < needed:
        raise InsufficientDataError(
            f"{channel.label.value}: {samples.size} samples < {needed} required"
            f" for confidence {confidence}"
        )
    lo, hi = np.quantile(samples, [tail, 1.0 - tail])
    return NoiseBounds(float(lo), float(hi), confidence)


def combine_bounds(parts) -> NoiseBounds:
    """Worst-case interval sum over independent channels."""
    parts = list(parts)
    if not parts:
        raise InvalidParameterError("combine_bounds needs at least one channel bound")
    confidence = parts[0].confidence
    for p in parts[1:]:
        if p.confidence != confidence:
            raise InvalidParameterError(
                f"mixed confidences: {p.confidence} != {confidence}"
            )
    return NoiseBounds(
        n_min_mv=float(sum(p.n_min_mv for p in parts)),
        n_max_mv=float(sum(p.n_max_mv for p in parts)),
        confidence=confidence,
    )


def interferometer_drift(sample_period_s: float, pi_drift_period_s: float = 180.0) -> float:
    """Adjacent-sample phase drift (rad) of an interferometer whose phase
    crawls through pi over ``pi_drift_period_s``: ``pi * T_s / period``."""
    if sample_period_s <= 0 or pi_drift_period_s <= 0:
        raise InvalidParameterError("durations must be > 0")
    return math.pi * sample_period_s / pi_drift_period_s


@dataclass(frozen=True)
class DriftReport:
    negligible: bool
    drift_rad: float
    threshold_rad: float
    ratio_to_two_pi: float


def drift_negligibility_check(drift_rad: float, threshold_rad: float = 1e-6) -> DriftReport:
    """True iff the drift is strictly below the threshold; the ratio to a
    full turn is included for audit logs."""
    if threshold_rad <= 0:
        raise InvalidParameterError("threshold_rad must be > 0")
    return DriftReport(
        negligible=drift_rad < threshold_rad,
        drift_rad=drift_rad,
        threshold_rad=threshold_rad,
        ratio_to_two_pi=drift_rad / (2.0 * math.pi),
    )
