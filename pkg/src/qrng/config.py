"""Pipeline configuration: a flat, diff-able key = value format.

Keys carry their units (``linewidth_3db_nm``, ``sample_period_ns``) so a
config file is unambiguous without this docstring. The syntax is the flat
subset of TOML: comments (#), strings in double quotes, numbers, booleans.
Cross-field consistency is validated before any stage runs and every
violation names the offending field(s).
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .digitizer import AdcConfig
from .errors import ConfigurationError
from .noise import NoiseBounds
from .source import BeatSpec, LaserMode, LaserSpec, QuantumSignalModel

_CONFIGURATIONS = ("cw_cw", "cw_pulsed", "pulsed_pulsed")
_MODES = {"cw": LaserMode.CONTINUOUS_WAVE, "pulsed": LaserMode.PULSED}


def parse_flat_toml(text: str) -> dict:
    """Parse the flat key = value subset of TOML used for configs."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            raise ConfigurationError(f"line {lineno}: sections are not supported (flat keys only)")
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if "#" in value and not value.startswith('"'):
            value = value.split("#", 1)[0].strip()
        if not key or not value:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {line!r}")
        if key in out:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        if value.startswith('"'):
            if not value.endswith('"') or len(value) < 2:
                raise ConfigurationError(f"line {lineno}: unterminated string for {key!r}")
            out[key] = value[1:-1]
        elif value in ("true", "false"):
            out[key] = value == "true"
        else:
            try:
                out[key] = int(value)
            except ValueError:
                try:
                    out[key] = float(value)
                except ValueError:
                    raise ConfigurationError(
                        f"line {lineno}: cannot parse value {value!r} for {key!r}"
                    ) from None
    return out


@dataclass
class PipelineConfig:
    configuration: str

    ld1_center_wavelength_nm: float = 1562.4
    ld1_linewidth_3db_nm: float = 0.0177
    ld1_mode: str = "cw"
    ld1_repetition_rate_hz: float | None = None
    ld1_pulse_width_3db_ps: float | None = None
    ld1_pulse_width_jitter_sd_ps: float | None = None

    ld2_center_wavelength_nm: float = 1562.4
    ld2_linewidth_3db_nm: float = 0.0172
    ld2_mode: str = "cw"
    ld2_repetition_rate_hz: float | None = None
    ld2_pulse_width_3db_ps: float | None = None
    ld2_pulse_width_jitter_sd_ps: float | None = None

    beat_mean_hz: float = 278.7e6
    beat_sd_hz: float = 30.2e6

    quantum_amplitude_mv: float = 82.9
    quantum_center_mv: float = 0.0

    arrival_offset_ps: float = 0.0
    pulse_width_jitter_enabled: bool = False

    sample_period_ns: float | None = None
    sample_count: int = 1_000_000

    adc_bits: int = 8
    adc_offset_mv: float = 0.0
    adc_span_mv: float = 178.4

    noise_n_min_mv: float | None = None
    noise_n_max_mv: float | None = None
    noise_confidence: float = 0.999999
    noise_electrical_file: str | None = None
    noise_intensity_ld1_file: str | None = None
    noise_intensity_ld2_file: str | None = None

    extractor_n_bits: int = 4096
    extractor_m_bits: int = 2048
    security_exponent: int = 100

    rng_seed: int = 0
    preset_name: str | None = None

    @classmethod
    def field_names(cls):
        return {f.name for f in fields(cls)}

    @classmethod
    def from_mapping(cls, mapping: dict) -> "PipelineConfig":
        known = cls.field_names()
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise ConfigurationError(f"unknown config key(s): {', '.join(unknown)}")
        if "configuration" not in mapping:
            raise ConfigurationError("missing required key: configuration")
        cfg = cls(**mapping)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        return cls.from_mapping(parse_flat_toml(Path(path).read_text()))

    # -- validation -----------------------------------------------------

    def validate(self):
        problems = []
        if self.configuration not in _CONFIGURATIONS:
            problems.append(
                f"configuration: {self.configuration!r} not one of {_CONFIGURATIONS}"
            )
        for side in ("ld1", "ld2"):
            mode = getattr(self, f"{side}_mode")
            if mode not in _MODES:
                problems.append(f"{side}_mode: {mode!r} not one of ('cw', 'pulsed')")
            elif mode == "pulsed":
                if not getattr(self, f"{side}_repetition_rate_hz"):
                    problems.append(f"{side}_repetition_rate_hz: required for pulsed mode")
                if not getattr(self, f"{side}_pulse_width_3db_ps"):
                    problems.append(f"{side}_pulse_width_3db_ps: required for pulsed mode")
        expected_modes = {
            "cw_cw": ("cw", "cw"),
            "cw_pulsed": ("cw", "pulsed"),
            "pulsed_pulsed": ("pulsed", "pulsed"),
        }.get(self.configuration)
        if expected_modes and (self.ld1_mode, self.ld2_mode) != expected_modes:
            problems.append(
                f"configuration {self.configuration!r} requires (ld1_mode, ld2_mode)"
                f" = {expected_modes}, got ({self.ld1_mode!r}, {self.ld2_mode!r})"
            )
        if (
            self.configuration == "pulsed_pulsed"
            and self.ld1_repetition_rate_hz
            and self.ld2_repetition_rate_hz
            and self.ld1_repetition_rate_hz != self.ld2_repetition_rate_hz
        ):
            problems.append(
                "ld1_repetition_rate_hz/ld2_repetition_rate_hz: pulsed+pulsed"
                " requires equal repetition rates"
            )
        if self.configuration == "cw_cw" and not self.sample_period_ns:
            problems.append("sample_period_ns: required for cw_cw configuration")
        if self.sample_period_ns is not None and self.sample_period_ns <= 0:
            problems.append("sample_period_ns: must be > 0")
        if self.sample_count <= 0:
            problems.append("sample_count: must be > 0")
        if self.quantum_amplitude_mv <= 0:
            problems.append("quantum_amplitude_mv: must be > 0")
        if not 1 <= self.adc_bits <= 16:
            problems.append("adc_bits: must be in [1, 16]")
        if self.adc_span_mv <= 0:
            problems.append("adc_span_mv: must be > 0")
        have_bounds = self.noise_n_min_mv is not None and self.noise_n_max_mv is not None
        have_files = all(
            getattr(self, f) is not None
            for f in (
                "noise_electrical_file",
                "noise_intensity_ld1_file",
                "noise_intensity_ld2_file",
            )
        )
        if have_bounds:
            if not self.noise_n_min_mv <= 0 <= self.noise_n_max_mv:
                problems.append("noise_n_min_mv/noise_n_max_mv: must straddle 0")
        elif not have_files:
            problems.append(
                "noise_n_min_mv/noise_n_max_mv or the three noise_*_file keys:"
                " one of the two must be provided"
            )
        if not 0 < self.noise_confidence < 1:
            problems.append("noise_confidence: must lie in (0, 1)")
        if self.extractor_m_bits > self.extractor_n_bits:
            problems.append("extractor_m_bits: must not exceed extractor_n_bits")
        if self.extractor_n_bits % self.adc_bits != 0:
            problems.append(
                f"extractor_n_bits: {self.extractor_n_bits} not divisible by"
                f" adc_bits={self.adc_bits}"
            )
        if self.extractor_n_bits % 8 != 0:
            problems.append("extractor_n_bits: must be divisible by 8")
        if self.security_exponent < 0:
            problems.append("security_exponent: must be >= 0")
        if self.rng_seed < 0:
            problems.append("rng_seed: must be >= 0")
        if self.arrival_offset_ps < 0:
            problems.append("arrival_offset_ps: must be >= 0")
        if problems:
            raise ConfigurationError("invalid config:\n  " + "\n  ".join(problems))

    # -- derived objects ------------------------------------------------

    def _laser(self, side: str) -> LaserSpec:
        width_ps = getattr(self, f"{side}_pulse_width_3db_ps")
        jitter_ps = getattr(self, f"{side}_pulse_width_jitter_sd_ps")
        return LaserSpec(
            center_wavelength_nm=getattr(self, f"{side}_center_wavelength_nm"),
            linewidth_3db_nm=getattr(self, f"{side}_linewidth_3db_nm"),
            mode=_MODES[getattr(self, f"{side}_mode")],
            repetition_rate_hz=getattr(self, f"{side}_repetition_rate_hz"),
            pulse_width_3db_s=width_ps * 1e-12 if width_ps else None,
            pulse_width_jitter_sd_s=jitter_ps * 1e-12 if jitter_ps else None,
        )

    def ld1_spec(self) -> LaserSpec:
        return self._laser("ld1")

    def ld2_spec(self) -> LaserSpec:
        return self._laser("ld2")

    def beat_spec(self) -> BeatSpec:
        return BeatSpec(self.beat_mean_hz, self.beat_sd_hz)

    def quantum_model(self) -> QuantumSignalModel:
        return QuantumSignalModel(self.quantum_amplitude_mv, self.quantum_center_mv)

    def adc_config(self) -> AdcConfig:
        return AdcConfig(self.adc_bits, self.adc_offset_mv, self.adc_span_mv)

    def noise_bounds(self) -> NoiseBounds | None:
        if self.noise_n_min_mv is None or self.noise_n_max_mv is None:
            return None
        return NoiseBounds(self.noise_n_min_mv, self.noise_n_max_mv, self.noise_confidence)

    def sample_period_s(self) -> float:
        if self.configuration == "cw_cw":
            return self.sample_period_ns * 1e-9
        rate = self.ld2_repetition_rate_hz or self.ld1_repetition_rate_hz
        return 1.0 / rate

    def arrival_offset_s(self) -> float:
        return self.arrival_offset_ps * 1e-12

    def snapshot(self) -> dict:
        """Stable key-ordered dict of every field, for the run manifest."""
        return {f.name: getattr(self, f.name) for f in fields(self)}
