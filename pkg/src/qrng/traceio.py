"""On-disk formats: analog traces (binary + CSV), quantized traces with
JSON sidecars, Toeplitz seed files, and packed bit files.

Binary trace layout (little-endian):
  bytes 0..11   magic  b"QRNG-TRACE\\x00\\x00"
  byte  12      format version (1)
  byte  13      label code (configuration or noise channel, 0 = unlabeled)
  bytes 14..15  reserved (zero)
  float64       sample period in seconds
  uint64        sample count
  float64[n]    voltages in millivolts
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .digitizer import AdcConfig, QuantizedTrace
from .errors import IngestError, InvalidParameterError
from .extractor import ToeplitzSeed
from .noise import ChannelLabel
from .source import AnalogTrace, ConfigLabel

TRACE_MAGIC = b"QRNG-TRACE\x00\x00"
TRACE_VERSION = 1

_LABEL_CODES = {
    None: 0,
    ConfigLabel.CW_CW: 1,
    ConfigLabel.CW_PULSED: 2,
    ConfigLabel.PULSED_PULSED: 3,
    ChannelLabel.ELECTRICAL: 16,
    ChannelLabel.INTENSITY_LD1: 17,
    ChannelLabel.INTENSITY_LD2: 18,
}
_CODE_LABELS = {v: k for k, v in _LABEL_CODES.items()}

SAMPLE_PERIOD_TOLERANCE = 1e-6  # 1 ppm


def write_trace_binary(path, trace: AnalogTrace, label=None):
    label = label if label is not None else trace.config_label
    header = TRACE_MAGIC + bytes([TRACE_VERSION, _LABEL_CODES[label], 0, 0])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(struct.pack("<d", trace.sample_period_s))
        fh.write(struct.pack("<Q", len(trace)))
        fh.write(trace.samples_mv.astype("<f8").tobytes())


def read_trace_binary(path):
    """Returns (AnalogTrace, label) where label is a ConfigLabel, a
    ChannelLabel, or None for unlabeled files."""
    raw = Path(path).read_bytes()
    if len(raw) < 32 or raw[:12] != TRACE_MAGIC:
        raise IngestError(f"{path}: not a qrng binary trace (bad magic)")
    version, label_code = raw[12], raw[13]
    if version != TRACE_VERSION:
        raise IngestError(f"{path}: unsupported trace version {version}")
    if label_code not in _CODE_LABELS:
        raise IngestError(f"{path}: unknown label code {label_code}")
    period, count = struct.unpack_from("<dQ", raw, 16)
    expected = 32 + 8 * count
    if len(raw) != expected:
        raise IngestError(f"{path}: expected {expected} bytes for {count} samples, got {len(raw)}")
    samples = np.frombuffer(raw, dtype="<f8", count=count, offset=32).astype(np.float64)
    label = _CODE_LABELS[label_code]
    cfg = label if isinstance(label, ConfigLabel) else ConfigLabel.CW_CW
    return AnalogTrace(period, samples, cfg), label


def write_trace_csv(path, trace: AnalogTrace, label=None):
    label = label if label is not None else trace.config_label
    with open(path, "w") as fh:
        if label is not None:
            fh.write(f"# label={label.value}\n")
        fh.write("time_s,voltage_mv\n")
        t = np.arange(len(trace)) * trace.sample_period_s
        for ti, vi in zip(t, trace.samples_mv):
            fh.write(f"{ti:.12e},{vi:.10g}\n")


def _parse_label(text):
    for enum_cls in (ConfigLabel, ChannelLabel):
        try:
            return enum_cls(text)
        except ValueError:
            continue
    return None


def read_trace_csv(path, headerless=False, resample=False):
    """Parse an oscilloscope-style two-column CSV.

    Rejects non-uniform timestamps (beyond 1 ppm of the median step)
    naming the offending line, unless ``resample`` linearly interpolates
    onto the uniform grid. Returns (AnalogTrace, label).
    """
    times, volts = [], []
    label = None
    header_seen = headerless
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                body = text.lstrip("#").strip()
                if body.startswith("label="):
                    label = _parse_label(body.split("=", 1)[1].strip())
                continue
            if not header_seen:
                if text.replace(" ", "") != "time_s,voltage_mv":
                    raise IngestError(
                        f'expected header "time_s,voltage_mv", got {text!r}', line=lineno
                    )
                header_seen = True
                continue
            parts = text.split(",")
            if len(parts) != 2:
                raise IngestError(f"expected 2 columns, got {len(parts)}", line=lineno)
            try:
                times.append(float(parts[0]))
                volts.append(float(parts[1]))
            except ValueError:
                raise IngestError(f"non-numeric row {text!r}", line=lineno) from None
    if len(times) < 2:
        raise IngestError(f"{path}: need at least 2 samples, got {len(times)}")
    t = np.asarray(times)
    v = np.asarray(volts)
    dt = np.diff(t)
    period = float(np.median(dt))
    if period <= 0:
        raise IngestError(f"{path}: non-increasing timestamps")
    bad = np.abs(dt - period) > SAMPLE_PERIOD_TOLERANCE * period
    if bad.any():
        if not resample:
            first_bad = int(np.argmax(bad))
            data_line = first_bad + 2 + (0 if headerless else 1)
            raise IngestError(
                f"sample period deviates from {period:.6e}s by more than 1 ppm"
                " (pass resample=True to interpolate)",
                line=data_line,
            )
        uniform_t = t[0] + period * np.arange(round((t[-1] - t[0]) / period) + 1)
        v = np.interp(uniform_t, t, v)
    return AnalogTrace(period, v, ConfigLabel.CW_CW), label


def write_quantized(path, qt: QuantizedTrace):
    """Raw code bytes plus a JSON sidecar (``<path>.json``) carrying the
    ADC config, the sample period, and the clipping counters."""
    path = Path(path)
    if qt.adc.bits <= 8:
        path.write_bytes(qt.codes.astype(np.uint8).tobytes())
    else:
        path.write_bytes(qt.codes.astype("<u2").tobytes())
    sidecar = {
        "adc": qt.adc.to_json_dict(),
        "sample_period_s": qt.sample_period_s,
        "clipped_low": qt.clipped_low,
        "clipped_high": qt.clipped_high,
    }
    path.with_name(path.name + ".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def read_quantized(path):
    path = Path(path)
    sidecar_path = path.with_name(path.name + ".json")
    if not sidecar_path.exists():
        raise IngestError(f"{path}: missing ADC sidecar {sidecar_path.name}")
    meta = json.loads(sidecar_path.read_text())
    adc = AdcConfig(**meta["adc"])
    raw = path.read_bytes()
    codes = (
        np.frombuffer(raw, dtype=np.uint8)
        if adc.bits <= 8
        else np.frombuffer(raw, dtype="<u2")
    )
    return QuantizedTrace(
        adc=adc,
        codes=codes.copy(),
        sample_period_s=meta["sample_period_s"],
        clipped_low=meta.get("clipped_low", 0),
        clipped_high=meta.get("clipped_high", 0),
    )


def write_seed(path, seed: ToeplitzSeed):
    """8-byte header (n, m as little-endian uint32) then the packed bits."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", seed.n, seed.m))
        fh.write(np.packbits(seed.bits).tobytes())


def read_seed(path) -> ToeplitzSeed:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise IngestError(f"{path}: truncated seed file")
    n, m = struct.unpack_from("<II", raw, 0)
    need_bits = n + m - 1
    body = np.frombuffer(raw, dtype=np.uint8, offset=8)
    if body.size < (need_bits + 7) // 8:
        raise IngestError(f"{path}: seed file too short for (n={n}, m={m})")
    bits = np.unpackbits(body)[:need_bits]
    return ToeplitzSeed(n, m, bits)


def write_bits(path, packed_bits: np.ndarray):
    Path(path).write_bytes(np.asarray(packed_bits, dtype=np.uint8).tobytes())


def read_bits(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if not raw:
        raise InvalidParameterError(f"{path}: empty bit file")
    return np.frombuffer(raw, dtype=np.uint8).copy()
