"""k-bit ADC model: floor quantization on half-open bins with clipping to
the end codes. The end codes own the clipped half-lines, which makes the
per-code probability accounting in the certifier exhaustive."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .source import AnalogTrace


@dataclass(frozen=True)
class AdcConfig:
    bits: int
    offset_mv: float
    span_mv: float

    def __post_init__(self):
        if not 1 <= self.bits <= 16:
            raise InvalidParameterError("bits must be in [1, 16]")
        if self.span_mv <= 0:
            raise InvalidParameterError("span_mv must be > 0")

    @property
    def levels(self) -> int:
        return 1 << self.bits

    @property
    def v_lower_mv(self) -> float:
        return self.offset_mv - self.span_mv / 2.0

    @property
    def v_upper_mv(self) -> float:
        return self.offset_mv + self.span_mv / 2.0

    @property
    def delta_mv(self) -> float:
        return self.span_mv / self.levels

    def to_json_dict(self) -> dict:
        return {"bits": self.bits, "offset_mv": self.offset_mv, "span_mv": self.span_mv}


@dataclass
class QuantizedTrace:
    """ADC codes plus the metadata needed to reinterpret them as voltages."""

    adc: AdcConfig
    codes: np.ndarray
    sample_period_s: float
    clipped_low: int = 0
    clipped_high: int = 0

    def __post_init__(self):
        dtype = np.uint8 if self.adc.bits <= 8 else np.uint16
        self.codes = np.asarray(self.codes, dtype=dtype)
        if self.codes.size and int(self.codes.max()) > self.adc.levels - 1:
            raise InvalidParameterError(
                f"code {int(self.codes.max())} out of range for {self.adc.bits}-bit ADC"
            )
        if self.sample_period_s <= 0:
            raise InvalidParameterError("sample_period_s must be > 0")

    def __len__(self):
        return self.codes.size


def quantize(trace: AnalogTrace, adc: AdcConfig) -> QuantizedTrace:
    """code = floor((V - V_l) / delta), clipped to {0, 2^k - 1}.

    V < V_l maps to 0 and V >= V_u maps to 2^k - 1; clipping is defined
    behavior and the clipped counts are carried on the result.
    """
    v = trace.samples_mv
    raw = np.floor((v - adc.v_lower_mv) / adc.delta_mv).astype(np.int64)
    clipped_low = int(np.count_nonzero(raw < 0))
    clipped_high = int(np.count_nonzero(raw > adc.levels - 1))
    codes = np.clip(raw, 0, adc.levels - 1)
    return QuantizedTrace(
        adc=adc,
        codes=codes,
        sample_period_s=trace.sample_period_s,
        clipped_low=clipped_low,
        clipped_high=clipped_high,
    )


def code_bin_edges(adc: AdcConfig, code: int) -> tuple[float, float]:
    """Voltage interval [lower, upper) owned by ``code``.

    The end codes additionally own the clipped half-lines, so code 0
    returns (-inf, V_l + delta) and code 2^k - 1 returns (V_u - delta, inf);
    the union over all codes is the whole real line, pairwise disjoint.
    """
    if not 0 <= code <= adc.levels - 1:
        raise InvalidParameterError(f"code {code} out of range [0, {adc.levels - 1}]")
    lower = adc.v_lower_mv + code * adc.delta_mv
    upper = adc.v_lower_mv + (code + 1) * adc.delta_mv
    if code == 0:
        lower = -np.inf
    if code == adc.levels - 1:
        upper = np.inf
    return lower, upper


def all_bin_edges(adc: AdcConfig) -> np.ndarray:
    """The 2^k + 1 bin boundaries with the clipped half-lines folded in:
    [-inf, V_l + delta, ..., V_u - delta, inf]."""
    edges = adc.v_lower_mv + adc.delta_mv * np.arange(adc.levels + 1, dtype=np.float64)
    edges[0] = -np.inf
    edges[-1] = np.inf
    return edges


def code_midpoints(adc: AdcConfig) -> np.ndarray:
    """Center voltage of every finite bin (end bins use their finite part)."""
    return adc.v_lower_mv + adc.delta_mv * (np.arange(adc.levels) + 0.5)
