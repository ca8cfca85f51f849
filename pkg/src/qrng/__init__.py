"""Two-laser phase-noise QRNG workbench.

Simulates the interference of two independent lasers (CW+CW, CW+pulsed,
pulsed+pulsed), certifies the worst-case quantum min-entropy of the
digitized signal conditioned on classical noise, extracts certified bits
with a Toeplitz-hashing strong extractor, and statistically validates the
output. The ``qrng`` CLI chains the stages; every stage is deterministic
given its config and seed.
"""

__version__ = "0.1.0"

from .certify import (
    CertificationInput,
    CertificationReport,
    UniformSignalModel,
    conditional_code_probability,
    empirical_min_entropy,
    verify_extraction_ratio,
    worst_case_min_entropy,
)
from .digitizer import AdcConfig, QuantizedTrace, code_bin_edges, quantize
from .extractor import (
    ToeplitzSeed,
    derive_seed,
    extract_stream,
    throughput_benchmark,
    toeplitz_extract,
)
from .noise import (
    ChannelLabel,
    NoiseBounds,
    NoiseChannel,
    combine_bounds,
    drift_negligibility_check,
    estimate_bounds,
    interferometer_drift,
)
from .source import (
    AnalogTrace,
    BeatSpec,
    ConfigLabel,
    LaserMode,
    LaserSpec,
    QuantumSignalModel,
    arcsine_cdf,
    arcsine_pdf,
    coherence_time,
    min_sampling_period,
    phase_variance,
    simulate_cw_cw,
    simulate_pulsed,
)
from .stattests import (
    autocorrelation,
    block_frequency,
    monobit_frequency,
    runs_test,
    suite,
)

__all__ = [name for name in dir() if not name.startswith("_")]
