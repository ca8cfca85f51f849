"""Statistical validation of raw and extracted bit streams.

Implements the autocorrelation diagnostic with per-lag significance and a
representative subset of the NIST SP 800-22 battery (monobit frequency,
block frequency, runs). The remaining battery tests are intentionally not
reimplemented; extracted bit files are emitted in a format the external
suite consumes directly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import erfc, gammaincc

from .errors import DegenerateInputError, InsufficientDataError, InvalidParameterError

ASYMPTOTIC_N_FLOOR = 10_000  # below this the normal null for R(k) is shaky


@dataclass
class AutocorrResult:
    lags: np.ndarray
    coefficients: np.ndarray
    p_values: np.ndarray
    n_used: int
    alpha: float

    @property
    def max_abs(self) -> float:
        nz = self.lags > 0
        return float(np.max(np.abs(self.coefficients[nz]))) if nz.any() else 0.0

    def aggregate_p(self) -> float:
        """Sidak-combined p-value over the positive lags: the probability
        that the most extreme of L independent null coefficients is at
        least as extreme as the one observed."""
        nz = self.lags > 0
        if not nz.any():
            return 1.0
        q_min = float(np.min(self.p_values[nz]))
        return float(-np.expm1(np.count_nonzero(nz) * np.log1p(-min(q_min, 1.0 - 1e-16))))


def autocorrelation(x, max_lag: int, alpha: float = 0.01) -> AutocorrResult:
    """Biased (divide-by-N) autocorrelation with global moments.

    R(k) = sum_{i<N-k} (x_i - mu)(x_{i+k} - mu) / (N * sigma^2), which
    guarantees |R(k)| <= 1 and R(0) = 1. Per-lag p-values use the
    asymptotic null R(k)*sqrt(N) ~ N(0,1): p = erfc(|R(k)|*sqrt(N/2)).
    """
    data = np.asarray(x, dtype=np.float64).ravel()
    n = data.size
    if max_lag < 0:
        raise InvalidParameterError("max_lag must be >= 0")
    if n < max_lag + 2:
        raise InsufficientDataError(f"need at least max_lag+2={max_lag + 2} samples, got {n}")
    if n < ASYMPTOTIC_N_FLOOR:
        warnings.warn(
            f"autocorrelation p-values are asymptotic; N={n} < {ASYMPTOTIC_N_FLOOR}"
            " makes them unreliable",
            stacklevel=2,
        )
    mu = data.mean()
    centered = data - mu
    denom = float(centered @ centered)  # N * sigma^2
    if denom == 0.0:
        raise DegenerateInputError("constant sequence has undefined autocorrelation")
    lags = np.arange(max_lag + 1)
    coeffs = np.empty(max_lag + 1)
    coeffs[0] = 1.0
    for k in range(1, max_lag + 1):
        coeffs[k] = float(centered[:-k] @ centered[k:]) / denom
    p = erfc(np.abs(coeffs) * math.sqrt(n / 2.0))
    p[0] = 0.0
    return AutocorrResult(lags=lags, coefficients=coeffs, p_values=p, n_used=n, alpha=alpha)


class TestOutcome(NamedTuple):
    statistic: float
    p_value: float


def _as_bits(bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.uint8).ravel()
    if b.size and b.max() > 1:
        raise InvalidParameterError("bit sequence must contain only 0/1")
    return b


def monobit_frequency(bits) -> TestOutcome:
    """NIST monobit: s = |sum(2b - 1)| / sqrt(N), p = erfc(s / sqrt(2))."""
    b = _as_bits(bits)
    if b.size < 100:
        raise InsufficientDataError(f"monobit needs >= 100 bits, got {b.size}")
    s = abs(2.0 * int(np.count_nonzero(b)) - b.size) / math.sqrt(b.size)
    return TestOutcome(statistic=s, p_value=float(erfc(s / math.sqrt(2.0))))


def block_frequency(bits, block_len: int = 128) -> TestOutcome:
    """NIST block frequency: chi^2 = 4 * M * sum (pi_i - 1/2)^2 over
    N/M blocks, p from the upper incomplete gamma at N_blocks/2 dof."""
    b = _as_bits(bits)
    if block_len < 1:
        raise InvalidParameterError("block_len must be >= 1")
    if b.size < 100 * block_len:
        raise InsufficientDataError(
            f"block frequency needs >= {100 * block_len} bits at block_len={block_len}"
        )
    n_blocks = b.size // block_len
    pi = b[: n_blocks * block_len].reshape(n_blocks, block_len).mean(axis=1)
    chi2 = 4.0 * block_len * float(np.sum((pi - 0.5) ** 2))
    return TestOutcome(statistic=chi2, p_value=float(gammaincc(n_blocks / 2.0, chi2 / 2.0)))


class RunsOutcome(NamedTuple):
    statistic: float
    p_value: float
    applicable: bool


def runs_test(bits) -> RunsOutcome:
    """NIST runs test. Requires the monobit prerequisite
    |pi - 1/2| < 2/sqrt(N); when that fails the result is marked
    not-applicable rather than counted as a pass or a failure."""
    b = _as_bits(bits)
    if b.size < 100:
        raise InsufficientDataError(f"runs test needs >= 100 bits, got {b.size}")
    n = b.size
    pi = np.count_nonzero(b) / n
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return RunsOutcome(statistic=float("nan"), p_value=float("nan"), applicable=False)
    v_n = 1 + int(np.count_nonzero(np.diff(b)))
    expected = 2.0 * n * pi * (1.0 - pi)
    p = erfc(abs(v_n - expected) / (2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)))
    return RunsOutcome(statistic=float(v_n), p_value=float(p), applicable=True)


@dataclass
class SuiteEntry:
    name: str
    statistic: float
    p_value: float
    passed: bool
    applicable: bool = True
    underflow: bool = False
    note: str = ""

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": None if math.isnan(self.statistic) else self.statistic,
            "p_value": None if math.isnan(self.p_value) else self.p_value,
            "passed": self.passed,
            "applicable": self.applicable,
            "underflow": self.underflow,
            "note": self.note,
        }


@dataclass
class TestSuiteResult:
    entries: list
    stream_length: int
    alpha: float
    autocorr: AutocorrResult = field(repr=False, default=None)

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries if e.applicable)

    def to_json_dict(self) -> dict:
        return {
            "stream_length": self.stream_length,
            "alpha": self.alpha,
            "all_passed": self.all_passed,
            "tests": [e.to_json_dict() for e in self.entries],
        }

    def write_autocorr_csv(self, path):
        with open(path, "w") as fh:
            fh.write("lag,R,p\n")
            for k, r, p in zip(
                self.autocorr.lags, self.autocorr.coefficients, self.autocorr.p_values
            ):
                fh.write(f"{k},{r:.10g},{p:.10g}\n")

    def write_pvalue_csv(self, path):
        with open(path, "w") as fh:
            fh.write("test,p\n")
            for e in self.entries:
                fh.write(f"{e.name},{'' if math.isnan(e.p_value) else format(e.p_value, '.10g')}\n")


AUTOCORR_SUITE_LAGS = 100


def suite(bits, alpha: float = 0.01) -> TestSuiteResult:
    """Run every implemented test plus autocorrelation at lags 1..100.

    The autocorrelation entry aggregates its 100 per-lag p-values into a
    single Sidak-corrected p (probability of the most extreme observed
    coefficient under the i.i.d. null), so its pass flag keeps the
    pass <=> p > alpha convention without multiplying the family-wise
    error by the number of lags.
    """
    b = _as_bits(bits)
    if b.size == 0:
        raise InvalidParameterError("empty bit stream")
    entries = []

    def add(name, fn, *args):
        try:
            res = fn(b, *args)
        except InsufficientDataError as exc:
            entries.append(
                SuiteEntry(name, float("nan"), float("nan"), passed=False,
                           applicable=False, note=str(exc))
            )
            return None
        applicable = getattr(res, "applicable", True)
        if not applicable:
            entries.append(
                SuiteEntry(name, res.statistic, res.p_value, passed=False,
                           applicable=False, note="prerequisite failed")
            )
            return res
        entries.append(
            SuiteEntry(
                name,
                res.statistic,
                res.p_value,
                passed=res.p_value > alpha,
                underflow=res.p_value == 0.0,
            )
        )
        return res

    add("monobit_frequency", monobit_frequency)
    add("block_frequency", block_frequency)
    add("runs", runs_test)

    ac = None
    if b.size >= AUTOCORR_SUITE_LAGS + 2:
        ac = autocorrelation(b, AUTOCORR_SUITE_LAGS, alpha)
        agg = ac.aggregate_p()
        entries.append(
            SuiteEntry(
                "autocorrelation",
                statistic=ac.max_abs * math.sqrt(ac.n_used),
                p_value=agg,
                passed=agg > alpha,
                note=f"max |R(k)| over lags 1..{AUTOCORR_SUITE_LAGS}: {ac.max_abs:.3e}",
            )
        )
    else:
        entries.append(
            SuiteEntry("autocorrelation", float("nan"), float("nan"), passed=False,
                       applicable=False, note="stream too short for 100 lags")
        )
    return TestSuiteResult(entries=entries, stream_length=b.size, alpha=alpha, autocorr=ac)


def bytes_to_bits(packed: np.ndarray, bit_count: int | None = None) -> np.ndarray:
    """Unpack an MSB-first byte array into a 0/1 bit array."""
    bits = np.unpackbits(np.asarray(packed, dtype=np.uint8))
    return bits if bit_count is None else bits[:bit_count]
