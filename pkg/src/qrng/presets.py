"""Named parameter presets for the three operating configurations, plus
the assumption-sensitivity machinery for the min-entropy reference values.

The published per-sample min-entropy figures (4.47 / 4.45 / 4.43 bits)
came from measured voltage histograms, so they cannot be reproduced
exactly from the analytic arcsine model; the ADC-grid and clipping
assumptions also move the answer. Each case therefore carries several
documented ADC-grid presets and the certifier reports h_min under all of
them. The *reference* grid per case is the one with headroom for the
worst-case classical noise (grid = signal extremes +- noise bound, which
is exactly how the Case I span of 178.4 mV relates to its 82.9 mV
amplitude); under it the worst adversarial move is aligning the arcsine
singularity with a bin edge and the result lands within 0.2 bits of the
published figure. The tight paper grids (ADC spanning the bare signal)
remain available: under worst-case noise they are clipping-bound and give
much lower h_min, which is reported, not hidden.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from .certify import CertificationInput, worst_case_min_entropy
from .digitizer import AdcConfig
from .noise import NoiseBounds
from .source import QuantumSignalModel

PRESET_NAMES = ("case1", "case2", "case3")

PAPER_NOISE_BOUNDS = NoiseBounds(-6.24, 6.21, 0.999999)


@dataclass(frozen=True)
class CaseAssumptions:
    name: str
    model: QuantumSignalModel
    grids: dict  # grid preset name -> AdcConfig
    reference_grid: str
    reference_h_bits: float  # published value, +-0.2 bit reference target


PAPER_CASES = {
    "case1": CaseAssumptions(
        name="case1",
        model=QuantumSignalModel(amplitude_mv=82.9, center_mv=0.0),
        grids={
            # measured signal extremes (+-89.2 mV) = amplitude + noise headroom
            "measured_extremes": AdcConfig(8, 0.0, 178.4),
            # ADC spanning the bare arcsine support
            "tight_span": AdcConfig(8, 0.0, 165.8),
        },
        reference_grid="measured_extremes",
        reference_h_bits=4.47,
    ),
    "case2": CaseAssumptions(
        name="case2",
        model=QuantumSignalModel(amplitude_mv=70.8, center_mv=8.4),
        grids={
            # the paper's stated grid: code 0 at -62.4 mV, 255 at +79.2 mV
            "paper_grid": AdcConfig(8, 8.4, 141.6),
            # same center, widened by the +-6.3 mV noise headroom as in case1
            "guarded_span": AdcConfig(8, 8.4, 154.2),
        },
        reference_grid="guarded_span",
        reference_h_bits=4.45,
    ),
    "case3": CaseAssumptions(
        name="case3",
        model=QuantumSignalModel(amplitude_mv=65.7, center_mv=45.9),
        grids={
            # paper grid: code 0 at -19.8 mV, 255 at +111.6 mV
            "paper_grid": AdcConfig(8, 45.9, 131.4),
            "guarded_span": AdcConfig(8, 45.9, 144.0),
        },
        reference_grid="guarded_span",
        reference_h_bits=4.43,
    ),
}


def preset_path(name: str):
    """Filesystem path of a shipped preset config."""
    if name not in PRESET_NAMES:
        raise KeyError(f"unknown preset {name!r}; have {PRESET_NAMES}")
    return resources.files("qrng").joinpath("presets", f"{name}.toml")


def sensitivity_rows(case_name: str, bounds: NoiseBounds | None = None) -> list:
    """h_min under every documented grid preset, with and without noise.

    Returns a list of dicts ready for the certification report; the row
    matching (reference grid, configured bounds) is flagged, together with
    the distance to the published reference value.
    """
    case = PAPER_CASES[case_name]
    bounds = bounds or PAPER_NOISE_BOUNDS
    zero = NoiseBounds(0.0, 0.0, bounds.confidence)
    rows = []
    for grid_name, adc in case.grids.items():
        for bounds_name, b in (("configured", bounds), ("zero_noise", zero)):
            rep = worst_case_min_entropy(CertificationInput(case.model, adc, b))
            is_ref = grid_name == case.reference_grid and bounds_name == "configured"
            rows.append(
                {
                    "case": case.name,
                    "grid": grid_name,
                    "adc": adc.to_json_dict(),
                    "bounds": bounds_name,
                    "h_min_bits": rep.h_min_bits,
                    "clipping_bound": rep.clipping_bound,
                    "reference_assumption": is_ref,
                    "paper_reference_bits": case.reference_h_bits if is_ref else None,
                    "deviation_from_reference_bits": (
                        rep.h_min_bits - case.reference_h_bits if is_ref else None
                    ),
                }
            )
    return rows


def reference_report(case_name: str):
    """The certification report under the case's reference assumptions."""
    case = PAPER_CASES[case_name]
    inp = CertificationInput(
        case.model, case.grids[case.reference_grid], PAPER_NOISE_BOUNDS
    )
    return worst_case_min_entropy(
        inp,
        assumptions=[
            f"{case.name} reference grid '{case.reference_grid}'",
            f"paper reference value {case.reference_h_bits} bits (tolerance 0.2)",
        ],
    )
