"""Analytic and Monte-Carlo models of the two-laser interference signal.

Voltages are millivolts, durations seconds, wavelengths nanometres,
frequencies hertz throughout. The quantum signal of every operating
configuration follows the arcsine law of ``A*cos(phi) + center`` with
``phi`` uniform, which is what the entropy certifier consumes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InvalidParameterError

SPEED_OF_LIGHT_M_S = 299_792_458.0

# Samples generated per RNG chunk; chunk i of a trace always uses
# SeedSequence([rng_seed, 0, i]) so recombination is independent of how
# generation is scheduled.
CHUNK_SAMPLES = 1 << 20


class LaserMode(enum.Enum):
    CONTINUOUS_WAVE = "cw"
    PULSED = "pulsed"


class ConfigLabel(enum.Enum):
    CW_CW = "cw_cw"
    CW_PULSED = "cw_pulsed"
    PULSED_PULSED = "pulsed_pulsed"


@dataclass(frozen=True)
class LaserSpec:
    """One diode laser: spectral width drives its phase-diffusion rate.

    Only the product of the two field amplitudes is observable at the
    photodetector, so ``relative_amplitude`` is a dimensionless knob and
    the physical voltage scale lives in :class:`QuantumSignalModel`.
    """

    center_wavelength_nm: float
    linewidth_3db_nm: float
    mode: LaserMode = LaserMode.CONTINUOUS_WAVE
    repetition_rate_hz: float | None = None
    pulse_width_3db_s: float | None = None
    pulse_width_jitter_sd_s: float | None = None
    relative_amplitude: float = 1.0

    def __post_init__(self):
        if self.center_wavelength_nm <= 0:
            raise InvalidParameterError("center_wavelength_nm must be > 0")
        if self.linewidth_3db_nm <= 0:
            raise InvalidParameterError("linewidth_3db_nm must be > 0")
        if self.relative_amplitude <= 0:
            raise InvalidParameterError("relative_amplitude must be > 0")
        if self.mode is LaserMode.PULSED:
            if not self.repetition_rate_hz or self.repetition_rate_hz <= 0:
                raise InvalidParameterError("pulsed laser requires repetition_rate_hz > 0")
            if not self.pulse_width_3db_s or self.pulse_width_3db_s <= 0:
                raise InvalidParameterError("pulsed laser requires pulse_width_3db_s > 0")


@dataclass(frozen=True)
class BeatSpec:
    """Per-capture detuning statistics of the two center frequencies."""

    mean_beat_frequency_hz: float
    beat_frequency_sd_hz: float = 0.0

    def __post_init__(self):
        if self.beat_frequency_sd_hz < 0:
            raise InvalidParameterError("beat_frequency_sd_hz must be >= 0")


@dataclass(frozen=True)
class QuantumSignalModel:
    """Arcsine-distributed quantum voltage: support [center-A, center+A]."""

    amplitude_mv: float
    center_mv: float = 0.0

    def __post_init__(self):
        if self.amplitude_mv <= 0:
            raise InvalidParameterError("amplitude_mv must be > 0")

    def pdf(self, q_mv):
        return arcsine_pdf(q_mv, self)

    def cdf(self, q_mv):
        return arcsine_cdf(q_mv, self)

    @property
    def support_mv(self):
        return (self.center_mv - self.amplitude_mv, self.center_mv + self.amplitude_mv)


@dataclass
class AnalogTrace:
    """A uniformly sampled voltage record, simulated or ingested."""

    sample_period_s: float
    samples_mv: np.ndarray
    config_label: ConfigLabel = ConfigLabel.CW_CW

    def __post_init__(self):
        self.samples_mv = np.asarray(self.samples_mv, dtype=np.float64)
        if self.sample_period_s <= 0:
            raise InvalidParameterError("sample_period_s must be > 0")
        if self.samples_mv.size == 0:
            raise InvalidParameterError("trace must contain at least one sample")

    def __len__(self):
        return self.samples_mv.size


def coherence_time(laser: LaserSpec) -> float:
    """Coherence time in seconds, ``lambda**2 / (c * dlambda)``.

    With the default 1562.4 nm center wavelength this reproduces the
    459.78 ps / 473.14 ps pair for 3-dB widths of 0.0177 nm / 0.0172 nm
    to within 0.3 ps.
    """
    lam_m = laser.center_wavelength_nm * 1e-9
    dlam_m = laser.linewidth_3db_nm * 1e-9
    return lam_m * lam_m / (SPEED_OF_LIGHT_M_S * dlam_m)


def phase_variance(sample_period_s: float, tau1_s: float, tau2_s: float) -> float:
    """Variance (rad^2) of the differential phase accrued over one sample period:
    ``2 * T_s * (1/tau1 + 1/tau2)``."""
    if sample_period_s < 0:
        raise InvalidParameterError("sample_period_s must be >= 0")
    if tau1_s <= 0 or tau2_s <= 0:
        raise InvalidParameterError("coherence times must be > 0")
    return 2.0 * sample_period_s * (1.0 / tau1_s + 1.0 / tau2_s)


def min_sampling_period(tau1_s: float, tau2_s: float) -> float:
    """Sampling period at which the differential-phase variance reaches 1 rad^2:
    ``tau1*tau2 / (2*(tau1+tau2))``. Sampling slower than this decorrelates
    adjacent samples."""
    if tau1_s <= 0 or tau2_s <= 0:
        raise InvalidParameterError("coherence times must be > 0")
    return tau1_s * tau2_s / (2.0 * (tau1_s + tau2_s))


def arcsine_pdf(q_mv, model: QuantumSignalModel):
    """Density of the quantum signal, 1/(pi*sqrt(A^2 - (q-c)^2)) on the open
    support and 0 outside.

    Exactly at the support endpoints the true density diverges; this
    returns ``inf`` there (deterministically), so integrate via
    :func:`arcsine_cdf` rather than quadrature of the endpoints.
    """
    q = np.asarray(q_mv, dtype=np.float64)
    a = model.amplitude_mv
    x = q - model.center_mv
    inside = np.abs(x) < a
    out = np.zeros_like(q)
    with np.errstate(divide="ignore"):
        out[inside] = 1.0 / (np.pi * np.sqrt((a - x[inside]) * (a + x[inside])))
    out[np.abs(x) == a] = np.inf
    if np.isscalar(q_mv):
        return float(out)
    return out


def arcsine_cdf(q_mv, model: QuantumSignalModel):
    """Closed-form CDF: 0 below the support, 1 above, else
    ``arcsin((q-c)/A)/pi + 1/2``. Monotone, exact at the endpoints."""
    q = np.asarray(q_mv, dtype=np.float64)
    a = model.amplitude_mv
    x = np.clip((q - model.center_mv) / a, -1.0, 1.0)
    out = np.arcsin(x) / np.pi + 0.5
    if np.isscalar(q_mv):
        return float(out)
    return out


def _trace_level_rng(rng_seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([rng_seed, 1])))


def _chunk_rng(rng_seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([rng_seed, 0, chunk])))


def simulate_cw_cw(
    ld1: LaserSpec,
    ld2: LaserSpec,
    beat: BeatSpec,
    model: QuantumSignalModel,
    sample_period_s: float,
    count: int,
    rng_seed: int,
) -> AnalogTrace:
    """Simulate the CW+CW beat note.

    ``V_i = A*cos(omega_0*t_i + theta_i) + center`` with the detuning
    ``omega_0`` drawn once per trace from the per-capture Gaussian of
    :class:`BeatSpec` and ``theta_i`` a Wiener process whose per-sample
    increment variance is ``phase_variance(T_s, tau_c1, tau_c2)``. The
    initial phase is uniform (the absolute optical phase is unknowable).

    Fully deterministic given ``rng_seed``; generation is chunked with
    per-chunk derived seeds so the result does not depend on scheduling.
    """
    if ld1.mode is not LaserMode.CONTINUOUS_WAVE or ld2.mode is not LaserMode.CONTINUOUS_WAVE:
        raise ConfigurationError("simulate_cw_cw requires both lasers in CW mode")
    if count <= 0:
        raise InvalidParameterError("count must be > 0")
    if sample_period_s <= 0:
        raise InvalidParameterError("sample_period_s must be > 0")

    tau1 = coherence_time(ld1)
    tau2 = coherence_time(ld2)
    step_var = phase_variance(sample_period_s, tau1, tau2)
    step_sd = np.sqrt(step_var)

    top = _trace_level_rng(rng_seed)
    f0 = top.normal(beat.mean_beat_frequency_hz, beat.beat_frequency_sd_hz)
    omega0 = 2.0 * np.pi * f0
    theta0 = top.uniform(-np.pi, np.pi)

    out = np.empty(count, dtype=np.float64)
    phase_carry = theta0
    pos = 0
    chunk = 0
    while pos < count:
        n = min(CHUNK_SAMPLES, count - pos)
        rng = _chunk_rng(rng_seed, chunk)
        increments = rng.normal(0.0, step_sd, n)
        theta = phase_carry + np.cumsum(increments)
        t = (np.arange(pos, pos + n, dtype=np.float64) + 1.0) * sample_period_s
        out[pos:pos + n] = model.amplitude_mv * np.cos(omega0 * t + theta) + model.center_mv
        phase_carry = theta[-1]
        pos += n
        chunk += 1
    return AnalogTrace(sample_period_s, out, ConfigLabel.CW_CW)


def pulse_overlap(arrival_offset_s: float, fwhm1_s: float, fwhm2_s: float) -> float:
    """Normalized interference amplitude of two Gaussian pulse envelopes
    offset by ``arrival_offset_s``: ``exp(-dt^2 / (4*sbar^2))`` with
    ``sbar^2`` the mean of the two envelope variances (sigma = FWHM/2.355).
    Equals 1 at zero offset and decays smoothly to 0."""
    s1 = fwhm1_s / 2.355
    s2 = fwhm2_s / 2.355
    sbar2 = 0.5 * (s1 * s1 + s2 * s2)
    return float(np.exp(-(arrival_offset_s ** 2) / (4.0 * sbar2)))


def simulate_pulsed(
    ld1: LaserSpec,
    ld2: LaserSpec,
    model: QuantumSignalModel,
    arrival_offset_s: float,
    count: int,
    rng_seed: int,
    width_jitter: bool = False,
) -> AnalogTrace:
    """Simulate CW+pulsed or pulsed+pulsed operation, one sample per pulse slot.

    Each pulse carries a fresh spontaneous-emission phase, so samples are
    i.i.d. ``A_eff*cos(phi) + center`` with ``phi ~ U(-pi, pi]``. For
    pulsed+pulsed, ``A_eff`` is reduced by the Gaussian envelope overlap at
    the configured arrival-time offset; a CW partner has a flat envelope,
    so its overlap is 1 regardless of offset. With ``width_jitter`` the
    per-pulse 3-dB widths fluctuate by their measured standard deviations
    and the overlap (hence amplitude) jitters per pulse.
    """
    pulsed = [ld for ld in (ld1, ld2) if ld.mode is LaserMode.PULSED]
    if not pulsed:
        raise ConfigurationError("simulate_pulsed requires at least one pulsed laser")
    if count <= 0:
        raise InvalidParameterError("count must be > 0")
    both_pulsed = len(pulsed) == 2
    if both_pulsed and ld1.repetition_rate_hz != ld2.repetition_rate_hz:
        raise ConfigurationError(
            f"pulsed+pulsed repetition rates differ: {ld1.repetition_rate_hz} Hz"
            f" != {ld2.repetition_rate_hz} Hz"
        )
    rep_rate = pulsed[0].repetition_rate_hz
    sample_period_s = 1.0 / rep_rate

    if both_pulsed:
        label = ConfigLabel.PULSED_PULSED
        a_eff = model.amplitude_mv * pulse_overlap(
            arrival_offset_s, ld1.pulse_width_3db_s, ld2.pulse_width_3db_s
        )
    else:
        label = ConfigLabel.CW_PULSED
        a_eff = model.amplitude_mv

    out = np.empty(count, dtype=np.float64)
    pos = 0
    chunk = 0
    while pos < count:
        n = min(CHUNK_SAMPLES, count - pos)
        rng = _chunk_rng(rng_seed, chunk)
        phi = rng.uniform(-np.pi, np.pi, n)
        amp = a_eff
        if width_jitter and both_pulsed:
            w1 = rng.normal(ld1.pulse_width_3db_s, ld1.pulse_width_jitter_sd_s or 0.0, n)
            w2 = rng.normal(ld2.pulse_width_3db_s, ld2.pulse_width_jitter_sd_s or 0.0, n)
            s1 = np.abs(w1) / 2.355
            s2 = np.abs(w2) / 2.355
            sbar2 = 0.5 * (s1 * s1 + s2 * s2)
            amp = model.amplitude_mv * np.exp(-(arrival_offset_s ** 2) / (4.0 * sbar2))
        out[pos:pos + n] = amp * np.cos(phi) + model.center_mv
        pos += n
        chunk += 1
    return AnalogTrace(sample_period_s, out, label)


def effective_amplitude_mv(
    model: QuantumSignalModel,
    ld1: LaserSpec,
    ld2: LaserSpec,
    arrival_offset_s: float = 0.0,
) -> float:
    """Amplitude the source actually emits for this laser pair, i.e. the
    configured amplitude scaled by pulse overlap when both lasers are pulsed."""
    if ld1.mode is LaserMode.PULSED and ld2.mode is LaserMode.PULSED:
        return model.amplitude_mv * pulse_overlap(
            arrival_offset_s, ld1.pulse_width_3db_s, ld2.pulse_width_3db_s
        )
    return model.amplitude_mv


def fit_amplitude(samples_mv: np.ndarray) -> QuantumSignalModel:
    """Estimate (A, center) of the arcsine law from an ingested trace by
    matching its 0.1%/99.9% sample quantiles to the analytic quantile
    function ``center + A*sin(pi*(p - 1/2))``."""
    samples = np.asarray(samples_mv, dtype=np.float64)
    if samples.size < 1000:
        raise InvalidParameterError("amplitude fit needs at least 1000 samples")
    q_lo, q_hi = np.quantile(samples, [0.001, 0.999])
    scale = np.sin(np.pi * (0.999 - 0.5))
    amplitude = (q_hi - q_lo) / (2.0 * scale)
    center = 0.5 * (q_hi + q_lo)
    return QuantumSignalModel(amplitude_mv=float(amplitude), center_mv=float(center))
