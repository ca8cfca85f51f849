"""Stage orchestration: simulate/ingest -> quantize -> certify -> extract
-> test, with a manifest that makes every run reproducible and auditable.

Every stage output is a pure function of (config, rng_seed, input files);
the manifest records a SHA-256 per artifact plus the config snapshot, so
re-running with the same config and seed must reproduce every checksum.
Wall-clock timings and worker counts live in a separate "environment"
section that is excluded from the deterministic projection.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import numpy as np

from . import __version__ as _version
from .certify import (
    CertificationInput,
    verify_extraction_ratio,
    worst_case_min_entropy,
)
from .config import PipelineConfig
from .digitizer import quantize
from .errors import (
    CertificationFailure,
    ConfigurationError,
    IngestError,
    InvalidParameterError,
)
from .extractor import ToeplitzSeed, derive_seed, extract_stream
from .noise import (
    ChannelLabel,
    NoiseChannel,
    combine_bounds,
    drift_negligibility_check,
    estimate_bounds,
    interferometer_drift,
)
from .presets import PAPER_CASES, sensitivity_rows
from .source import (
    QuantumSignalModel,
    arcsine_cdf,
    effective_amplitude_mv,
    simulate_cw_cw,
    simulate_pulsed,
)
from . import stattests, traceio

TRACE_FILE = "trace.bin"
QUANTIZED_FILE = "quantized.u8"
CERT_FILE = "certification.json"
SEED_FILE = "toeplitz.seed"
BITS_FILE = "extracted.bits"
TESTS_FILE = "stattests.json"
AUTOCORR_CSV = "autocorr.csv"
PVALUES_CSV = "pvalues.csv"
MANIFEST_FILE = "manifest.json"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    """Incrementally updated run record backed by manifest.json."""

    def __init__(self, out_dir, cfg: PipelineConfig | None = None, rng_seed=None):
        self.path = Path(out_dir) / MANIFEST_FILE
        if self.path.exists():
            self.data = json.loads(self.path.read_text())
        else:
            self.data = {
                "config": None,
                "rng_seed": None,
                "stages": {},
                "rates": {},
                "versions": {
                    "qrng": _version,
                    "numpy": np.__version__,
                },
                "environment": {"timings_s": {}, "workers": 1, "force_used": False},
            }
        if cfg is not None:
            self.data["config"] = cfg.snapshot()
        if rng_seed is not None:
            self.data["rng_seed"] = rng_seed

    def record_stage(self, name: str, out_dir, filename: str, elapsed_s: float, **stats):
        entry = {"file": filename, "sha256": sha256_file(Path(out_dir) / filename)}
        entry.update(stats)
        self.data["stages"][name] = entry
        self.data["environment"]["timings_s"][name] = elapsed_s

    def deterministic_projection(self) -> dict:
        return {k: v for k, v in self.data.items() if k != "environment"}

    def save(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")


def _effective_model(cfg: PipelineConfig) -> QuantumSignalModel:
    """Amplitude the source actually emits (pulse overlap applied), which is
    what certification must assume."""
    amp = effective_amplitude_mv(
        cfg.quantum_model(), cfg.ld1_spec(), cfg.ld2_spec(), cfg.arrival_offset_s()
    )
    return QuantumSignalModel(amplitude_mv=amp, center_mv=cfg.quantum_center_mv)


def stage_simulate(cfg: PipelineConfig, out_dir, rng_seed=None, workers=1) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = cfg.rng_seed if rng_seed is None else rng_seed
    t0 = time.perf_counter()
    if cfg.configuration == "cw_cw":
        trace = simulate_cw_cw(
            cfg.ld1_spec(),
            cfg.ld2_spec(),
            cfg.beat_spec(),
            cfg.quantum_model(),
            cfg.sample_period_s(),
            cfg.sample_count,
            seed,
        )
    else:
        trace = simulate_pulsed(
            cfg.ld1_spec(),
            cfg.ld2_spec(),
            cfg.quantum_model(),
            cfg.arrival_offset_s(),
            cfg.sample_count,
            seed,
            width_jitter=cfg.pulse_width_jitter_enabled,
        )
    traceio.write_trace_binary(out_dir / TRACE_FILE, trace)
    elapsed = time.perf_counter() - t0

    model = _effective_model(cfg)
    v = np.sort(trace.samples_mv)
    ecdf_hi = np.arange(1, v.size + 1) / v.size
    cdf = arcsine_cdf(v, model)
    ks = float(np.max(np.maximum(np.abs(ecdf_hi - cdf), np.abs(ecdf_hi - 1 / v.size - cdf))))
    summary = {
        "samples": len(trace),
        "sample_period_s": trace.sample_period_s,
        "min_mv": float(trace.samples_mv.min()),
        "max_mv": float(trace.samples_mv.max()),
        "ks_distance_vs_analytic": ks,
    }
    man = Manifest(out_dir, cfg, seed)
    man.record_stage("simulate", out_dir, TRACE_FILE, elapsed, **summary)
    man.save()
    return summary


def stage_ingest(cfg, out_dir, src_path, fmt, headerless=False, resample=False) -> dict:
    """Normalize an external trace into the pipeline's own formats."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    if fmt == "csv":
        trace, _label = traceio.read_trace_csv(src_path, headerless=headerless, resample=resample)
        traceio.write_trace_binary(out_dir / TRACE_FILE, trace)
        out_name, stats = TRACE_FILE, {"samples": len(trace)}
    elif fmt == "binary":
        trace, _label = traceio.read_trace_binary(src_path)
        traceio.write_trace_binary(out_dir / TRACE_FILE, trace)
        out_name, stats = TRACE_FILE, {"samples": len(trace)}
    elif fmt == "raw_u8":
        sidecar = Path(str(src_path) + ".json")
        if not sidecar.exists():
            raise IngestError(f"raw_u8 ingest needs an ADC sidecar at {sidecar}")
        qt = traceio.read_quantized(src_path)
        traceio.write_quantized(out_dir / QUANTIZED_FILE, qt)
        out_name, stats = QUANTIZED_FILE, {"codes": len(qt)}
    else:
        raise InvalidParameterError(f"unknown ingest format {fmt!r}")
    elapsed = time.perf_counter() - t0
    man = Manifest(out_dir, cfg)
    man.record_stage("ingest", out_dir, out_name, elapsed, source=str(src_path), **stats)
    man.save()
    return stats


def stage_quantize(cfg: PipelineConfig, out_dir) -> dict:
    out_dir = Path(out_dir)
    trace_path = out_dir / TRACE_FILE
    if not trace_path.exists():
        raise FileNotFoundError(f"no trace at {trace_path}; run simulate or ingest first")
    t0 = time.perf_counter()
    trace, _ = traceio.read_trace_binary(trace_path)
    qt = quantize(trace, cfg.adc_config())
    traceio.write_quantized(out_dir / QUANTIZED_FILE, qt)
    elapsed = time.perf_counter() - t0
    stats = {
        "codes": len(qt),
        "clipped_low": qt.clipped_low,
        "clipped_high": qt.clipped_high,
    }
    man = Manifest(out_dir, cfg)
    man.record_stage("quantize", out_dir, QUANTIZED_FILE, elapsed, **stats)
    man.save()
    return stats


def _bounds_from_config(cfg: PipelineConfig):
    bounds = cfg.noise_bounds()
    if bounds is not None:
        return bounds, "configured"
    channels = []
    for attr, label in (
        ("noise_electrical_file", ChannelLabel.ELECTRICAL),
        ("noise_intensity_ld1_file", ChannelLabel.INTENSITY_LD1),
        ("noise_intensity_ld2_file", ChannelLabel.INTENSITY_LD2),
    ):
        path = getattr(cfg, attr)
        if path is None:
            raise ConfigurationError(f"{attr}: required when explicit bounds are absent")
        if str(path).endswith(".csv"):
            trace, _ = traceio.read_trace_csv(path)
        else:
            trace, _ = traceio.read_trace_binary(path)
        channels.append(NoiseChannel(label, samples_mv=trace.samples_mv))
    parts = [estimate_bounds(ch, cfg.noise_confidence) for ch in channels]
    return combine_bounds(parts), "estimated_from_channels"


def stage_certify(cfg: PipelineConfig, out_dir, include_drift=False) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    bounds, bounds_origin = _bounds_from_config(cfg)
    model = _effective_model(cfg)
    drift_rad = interferometer_drift(cfg.sample_period_s())
    drift_report = drift_negligibility_check(drift_rad)
    assumptions = [
        f"noise bounds {bounds_origin}: [{bounds.n_min_mv}, {bounds.n_max_mv}] mV"
        f" at confidence {bounds.confidence}",
        f"interferometer drift {drift_rad:.3e} rad/sample"
        f" ({'ignored as negligible' if drift_report.negligible else 'NOT negligible'})",
    ]
    if include_drift:
        pad = model.amplitude_mv * drift_rad
        bounds = type(bounds)(bounds.n_min_mv - pad, bounds.n_max_mv + pad, bounds.confidence)
        assumptions.append(f"drift folded into bounds as +-{pad:.3e} mV")
    report = worst_case_min_entropy(
        CertificationInput(model, cfg.adc_config(), bounds), assumptions=assumptions
    )
    ratio = verify_extraction_ratio(
        report,
        cfg.extractor_n_bits,
        cfg.extractor_m_bits,
        cfg.adc_bits,
        cfg.security_exponent,
    )
    doc = {
        "report": report.to_json_dict(),
        "extraction_ratio": {
            "ok": ratio.ok,
            "h_min_bits": ratio.h_min_bits,
            "extractable_bits": ratio.extractable_bits,
            "m_bits": ratio.m_bits,
            "slack_bits": ratio.slack_bits,
            "n_bits": cfg.extractor_n_bits,
            "adc_bits": cfg.adc_bits,
            "security_exponent": cfg.security_exponent,
        },
        "drift": {
            "rad_per_sample": drift_rad,
            "negligible": drift_report.negligible,
            "ratio_to_two_pi": drift_report.ratio_to_two_pi,
            "included_in_bounds": include_drift,
        },
        "empirical": None,
        "sensitivity": None,
    }
    qpath = out_dir / QUANTIZED_FILE
    if qpath.exists():
        from .certify import empirical_min_entropy

        qt = traceio.read_quantized(qpath)
        doc["empirical"] = {
            "min_entropy_bits": empirical_min_entropy(qt),
            "note": "raw -log2 max code frequency; diagnostic only, no noise conditioning",
        }
    if cfg.preset_name in PAPER_CASES:
        doc["sensitivity"] = sensitivity_rows(cfg.preset_name, bounds=cfg.noise_bounds())
    (out_dir / CERT_FILE).write_text(json.dumps(doc, indent=2) + "\n")
    elapsed = time.perf_counter() - t0
    man = Manifest(out_dir, cfg)
    man.record_stage(
        "certify",
        out_dir,
        CERT_FILE,
        elapsed,
        h_min_bits=report.h_min_bits,
        ratio_ok=ratio.ok,
    )
    man.save()
    return doc


def _toeplitz_seed_for(cfg: PipelineConfig, rng_seed: int, seed_file=None) -> ToeplitzSeed:
    if seed_file is not None:
        seed = traceio.read_seed(seed_file)
        if (seed.n, seed.m) != (cfg.extractor_n_bits, cfg.extractor_m_bits):
            raise ConfigurationError(
                f"seed file geometry ({seed.n}, {seed.m}) != config"
                f" ({cfg.extractor_n_bits}, {cfg.extractor_m_bits})"
            )
        return seed
    need = (cfg.extractor_n_bits + cfg.extractor_m_bits - 1 + 7) // 8
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([rng_seed, 2])))
    return derive_seed(gen.bytes(need), cfg.extractor_n_bits, cfg.extractor_m_bits)


def stage_extract(
    cfg: PipelineConfig,
    out_dir,
    rng_seed=None,
    workers=1,
    force=False,
    seed_file=None,
) -> dict:
    out_dir = Path(out_dir)
    seed_val = cfg.rng_seed if rng_seed is None else rng_seed
    cert_path = out_dir / CERT_FILE
    cert_ok = False
    if cert_path.exists():
        cert_ok = bool(json.loads(cert_path.read_text())["extraction_ratio"]["ok"])
    if not cert_ok and not force:
        raise CertificationFailure(
            "no passing certification report in output directory;"
            " run certify first or pass --force"
        )
    qpath = out_dir / QUANTIZED_FILE
    if not qpath.exists():
        raise FileNotFoundError(f"no quantized trace at {qpath}; run quantize first")
    t0 = time.perf_counter()
    qt = traceio.read_quantized(qpath)
    seed = _toeplitz_seed_for(cfg, seed_val, seed_file)
    traceio.write_seed(out_dir / SEED_FILE, seed)
    result = extract_stream(seed, qt, workers=workers)
    traceio.write_bits(out_dir / BITS_FILE, result.packed_bits)
    elapsed = time.perf_counter() - t0
    implied_bps = result.bits_per_sample / qt.sample_period_s
    rates = {
        "bits_per_sample": result.bits_per_sample,
        "implied_output_bits_per_second": implied_bps,
        "output_bits": result.bit_count,
        "blocks": result.block_count,
        "discarded_samples": result.discarded_samples,
    }
    man = Manifest(out_dir, cfg, seed_val)
    man.data["rates"] = rates
    man.data["environment"]["workers"] = workers
    if force and not cert_ok:
        man.data["environment"]["force_used"] = True
        man.data.setdefault("warnings", []).append(
            "extraction forced without a passing certification report"
        )
    man.record_stage(
        "extract",
        out_dir,
        BITS_FILE,
        elapsed,
        seed_fingerprint=result.seed_fingerprint,
        **rates,
    )
    man.record_stage("toeplitz_seed", out_dir, SEED_FILE, 0.0)
    man.save()
    return rates


def stage_test(cfg, out_dir, bits_path=None, alpha=0.01) -> "stattests.TestSuiteResult":
    out_dir = Path(out_dir)
    path = Path(bits_path) if bits_path else out_dir / BITS_FILE
    if not path.exists():
        raise FileNotFoundError(f"no bit file at {path}")
    t0 = time.perf_counter()
    packed = traceio.read_bits(path)
    bits = stattests.bytes_to_bits(packed)
    result = stattests.suite(bits, alpha=alpha)
    (out_dir / TESTS_FILE).write_text(json.dumps(result.to_json_dict(), indent=2) + "\n")
    if result.autocorr is not None:
        result.write_autocorr_csv(out_dir / AUTOCORR_CSV)
    result.write_pvalue_csv(out_dir / PVALUES_CSV)
    elapsed = time.perf_counter() - t0
    man = Manifest(out_dir, cfg)
    man.record_stage(
        "test",
        out_dir,
        TESTS_FILE,
        elapsed,
        all_passed=result.all_passed,
        alpha=alpha,
    )
    man.save()
    return result


def run_pipeline(
    cfg: PipelineConfig,
    out_dir,
    rng_seed=None,
    workers=1,
    force=False,
    alpha=0.01,
    include_drift=False,
):
    """The five stages in sequence; the first failing stage aborts."""
    stage_simulate(cfg, out_dir, rng_seed=rng_seed, workers=workers)
    stage_quantize(cfg, out_dir)
    cert = stage_certify(cfg, out_dir, include_drift=include_drift)
    if not cert["extraction_ratio"]["ok"] and not force:
        raise CertificationFailure(
            f"certification failed: extractable"
            f" {cert['extraction_ratio']['extractable_bits']:.1f} bits <"
            f" m = {cert['extraction_ratio']['m_bits']}"
        )
    stage_extract(cfg, out_dir, rng_seed=rng_seed, workers=workers, force=force)
    return stage_test(cfg, out_dir, alpha=alpha)
