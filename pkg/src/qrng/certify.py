"""Worst-case conditional min-entropy of the quantized signal.

The measured signal is M = Q + N with Q the quantum (arcsine) voltage and
N classical noise that an adversary is assumed to know exactly, so the
conditional law of M given N = n is just the quantum law shifted by n.
Certification maximizes the per-code probability over every admissible
noise value and over all ADC codes:

    h_min = -log2( max_{n in [n_min, n_max]} max_i P(code = i | n) )

Per-code probabilities are piecewise smooth in n; their interior extrema
occur where a support endpoint of the shifted law crosses a bin edge, so
the maximization scans interval endpoints, all such alignment points, and
a fine safety grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .digitizer import AdcConfig, QuantizedTrace, all_bin_edges
from .errors import DegenerateInputError, InvalidParameterError
from .noise import NoiseBounds
from .source import QuantumSignalModel

NOISE_GRID_DIVISOR = 100  # safety-grid step, as a fraction of one ADC bin


@dataclass(frozen=True)
class UniformSignalModel:
    """Uniform voltage on [center-A, center+A]; a sanity-check stand-in for
    the arcsine law (a k-bit ADC spanning it exactly yields h_min = k)."""

    amplitude_mv: float
    center_mv: float = 0.0

    def __post_init__(self):
        if self.amplitude_mv <= 0:
            raise InvalidParameterError("amplitude_mv must be > 0")

    def cdf(self, q_mv):
        q = np.asarray(q_mv, dtype=np.float64)
        lo = self.center_mv - self.amplitude_mv
        return np.clip((q - lo) / (2.0 * self.amplitude_mv), 0.0, 1.0)

    @property
    def support_mv(self):
        return (self.center_mv - self.amplitude_mv, self.center_mv + self.amplitude_mv)


@dataclass(frozen=True)
class CertificationInput:
    model: QuantumSignalModel | UniformSignalModel
    adc: AdcConfig
    bounds: NoiseBounds


@dataclass
class CertificationReport:
    h_min_bits: float
    worst_noise_mv: float
    worst_code: int
    worst_probability: float
    code_probability_table: np.ndarray
    assumptions: list = field(default_factory=list)
    adc: AdcConfig | None = None
    bounds: NoiseBounds | None = None
    clipping_bound: bool = False

    def to_json_dict(self) -> dict:
        return {
            "h_min_bits": self.h_min_bits,
            "worst_noise_mv": self.worst_noise_mv,
            "worst_code": self.worst_code,
            "worst_probability": self.worst_probability,
            "clipping_bound": self.clipping_bound,
            "assumptions": list(self.assumptions),
            "adc": self.adc.to_json_dict() if self.adc else None,
            "noise_bounds": self.bounds.to_json_dict() if self.bounds else None,
            "code_probability_table": self.code_probability_table.tolist(),
        }


def _code_probability_matrix(model, adc: AdcConfig, noise_mv: np.ndarray) -> np.ndarray:
    """P(code i | n) for every code and every noise value, via the closed-form
    CDF: F(upper - n) - F(lower - n), end bins extended to +-inf."""
    edges = all_bin_edges(adc)
    cdf = model.cdf(edges[None, :] - noise_mv[:, None])
    return np.diff(cdf, axis=1)


def conditional_code_probability(inp: CertificationInput, code: int, noise_mv: float) -> float:
    """Probability of one ADC code given the adversary fixed the classical
    noise at ``noise_mv`` (must lie inside the certified bounds)."""
    if not 0 <= code <= inp.adc.levels - 1:
        raise InvalidParameterError(f"code {code} out of range")
    if not inp.bounds.n_min_mv <= noise_mv <= inp.bounds.n_max_mv:
        raise InvalidParameterError(
            f"noise {noise_mv} mV outside certified bounds"
            f" [{inp.bounds.n_min_mv}, {inp.bounds.n_max_mv}]"
        )
    row = _code_probability_matrix(inp.model, inp.adc, np.array([noise_mv]))
    return float(row[0, code])


def _noise_candidates(inp: CertificationInput, grid_divisor: int) -> np.ndarray:
    n_min, n_max = inp.bounds.n_min_mv, inp.bounds.n_max_mv
    lo, hi = inp.model.support_mv
    finite_edges = inp.adc.v_lower_mv + inp.adc.delta_mv * np.arange(
        inp.adc.levels + 1, dtype=np.float64
    )
    # noise values putting a support endpoint exactly on a bin edge
    aligned = np.concatenate([finite_edges - lo, finite_edges - hi])
    aligned = aligned[(aligned >= n_min) & (aligned <= n_max)]
    step = inp.adc.delta_mv / grid_divisor
    count = max(2, int(math.floor((n_max - n_min) / step)) + 1)
    grid = np.linspace(n_min, n_max, count)
    cand = np.concatenate([[n_min, n_max, min(max(0.0, n_min), n_max)], aligned, grid])
    return np.unique(cand)


def worst_case_min_entropy(
    inp: CertificationInput,
    grid_divisor: int = NOISE_GRID_DIVISOR,
    assumptions: list | None = None,
) -> CertificationReport:
    """Scan the admissible noise interval and return the worst-case report.

    Raises :class:`DegenerateInputError` when the signal support lies
    entirely outside the ADC's finite range (every sample would clip).
    """
    lo, hi = inp.model.support_mv
    if lo >= inp.adc.v_upper_mv or hi <= inp.adc.v_lower_mv:
        raise DegenerateInputError(
            f"signal support [{lo}, {hi}] mV lies outside ADC range"
            f" [{inp.adc.v_lower_mv}, {inp.adc.v_upper_mv}] mV"
        )
    cand = _noise_candidates(inp, grid_divisor)
    probs = _code_probability_matrix(inp.model, inp.adc, cand)
    flat = int(np.argmax(probs))
    ci, code = divmod(flat, inp.adc.levels)
    worst_p = float(probs[ci, code])
    worst_n = float(cand[ci])
    h_min = -math.log2(worst_p)
    # did adversarial noise push signal mass past the grid into an end code?
    clipping = (code == 0 and lo + worst_n < inp.adc.v_lower_mv) or (
        code == inp.adc.levels - 1 and hi + worst_n > inp.adc.v_upper_mv
    )
    notes = list(assumptions or [])
    notes.append(
        "worst case bound by clipped end-code mass"
        if clipping
        else "worst case bound by interior (singularity-bin) mass"
    )
    return CertificationReport(
        h_min_bits=h_min,
        worst_noise_mv=worst_n,
        worst_code=int(code),
        worst_probability=worst_p,
        code_probability_table=probs[ci].copy(),
        assumptions=notes,
        adc=inp.adc,
        bounds=inp.bounds,
        clipping_bound=bool(clipping),
    )


@dataclass(frozen=True)
class RatioReport:
    ok: bool
    h_min_bits: float
    extractable_bits: float
    m_bits: int
    slack_bits: float

    def __bool__(self):
        return self.ok


def verify_extraction_ratio(
    report,
    n_bits: int,
    m_bits: int,
    adc_bits: int,
    security_exponent: int = 100,
) -> RatioReport:
    """Leftover-hash sizing check for one Toeplitz block:

        m <= (n / adc_bits) * h_min - 2 * security_exponent

    where 2^-security_exponent is the extractor error budget. ``report``
    may be a CertificationReport or a bare h_min value in bits/sample.
    """
    if n_bits % adc_bits != 0:
        raise InvalidParameterError(f"n={n_bits} not divisible by adc_bits={adc_bits}")
    if m_bits > n_bits:
        raise InvalidParameterError(f"m={m_bits} exceeds n={n_bits}")
    h = getattr(report, "h_min_bits", report)
    extractable = (n_bits / adc_bits) * h - 2.0 * security_exponent
    slack = extractable - m_bits
    return RatioReport(
        ok=slack >= 0.0,
        h_min_bits=float(h),
        extractable_bits=extractable,
        m_bits=m_bits,
        slack_bits=slack,
    )


def empirical_min_entropy(trace: QuantizedTrace) -> float:
    """-log2 of the largest empirical code frequency.

    Diagnostic only: it ignores noise conditioning entirely and says
    nothing about security; use :func:`worst_case_min_entropy` for that.
    """
    if len(trace) == 0:
        raise InvalidParameterError("trace is empty")
    counts = np.bincount(trace.codes, minlength=trace.adc.levels)
    return float(-np.log2(counts.max() / len(trace)))


def singularity_bin_probability(model: QuantumSignalModel, delta_mv: float) -> float:
    """Closed-form arcsine mass of a width-delta bin ending exactly at a
    support endpoint: (1/pi) * (pi/2 - arcsin((A - delta)/A)). This is the
    largest mass any interval of that width can capture without clipping,
    so it lower-bounds nothing and upper-bounds every interior code."""
    a = model.amplitude_mv
    return (math.pi / 2.0 - math.asin((a - delta_mv) / a)) / math.pi
