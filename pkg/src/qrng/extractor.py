"""Toeplitz-hashing strong extractor.

An (m x n) binary Toeplitz matrix is defined by n+m-1 seed bits via
``T[i][j] = seed[i - j + n - 1]``; extraction is the GF(2) product of T
with an n-bit input block. The seed is public randomness and may be
reused across blocks; sizing against the certified min-entropy is checked
by :func:`qrng.certify.verify_extraction_ratio`.

Two implementations are kept deliberately: a naive reference that is the
literal definition, and the word-parallel table kernel from
:mod:`qrng._accel` used for throughput. They must agree bit-exactly.
"""

from __future__ import annotations

import hashlib
import statistics
import time
from dataclasses import dataclass

import numpy as np

from . import _accel
from .digitizer import QuantizedTrace
from .errors import InvalidParameterError


class ToeplitzSeed:
    """Seed bits plus block geometry; caches the derived XOR table."""

    def __init__(self, n: int, m: int, bits: np.ndarray):
        bits = np.asarray(bits, dtype=np.uint8)
        if m > n:
            raise InvalidParameterError(f"m={m} must not exceed n={n}")
        if n < 1:
            raise InvalidParameterError("n must be >= 1")
        if bits.ndim != 1 or bits.size != n + m - 1:
            raise InvalidParameterError(
                f"seed needs exactly n+m-1 = {n + m - 1} bits, got {bits.size}"
            )
        if bits.max(initial=0) > 1:
            raise InvalidParameterError("seed bits must be 0/1")
        self.n = n
        self.m = m
        self.bits = bits
        self.bits.setflags(write=False)
        self._table = None

    @property
    def fingerprint(self) -> str:
        """SHA-256 over the packed seed bits; logged in reports for audit."""
        return hashlib.sha256(np.packbits(self.bits).tobytes()).hexdigest()

    @property
    def word_width(self) -> int:
        return (self.m + 63) // 64

    def xor_table(self) -> np.ndarray:
        if self._table is None:
            self._table = _accel.build_xor_table(self.bits, self.n, self.m)
        return self._table

    def dense_matrix(self) -> np.ndarray:
        """The full (m, n) matrix; only sensible for tests and small sizes."""
        idx = np.arange(self.m)[:, None] - np.arange(self.n)[None, :] + self.n - 1
        return self.bits[idx]

    def __repr__(self):
        return f"ToeplitzSeed(n={self.n}, m={self.m}, fingerprint={self.fingerprint[:12]})"


def derive_seed(entropy_source: bytes, n: int, m: int) -> ToeplitzSeed:
    """Unpack n+m-1 seed bits MSB-first from an externally supplied byte
    string. Deterministic; the same bytes always give the same seed."""
    need_bits = n + m - 1
    need_bytes = (need_bits + 7) // 8
    if len(entropy_source) < need_bytes:
        raise InvalidParameterError(
            f"need {need_bytes} seed bytes for (n={n}, m={m}), got {len(entropy_source)}"
        )
    bits = np.unpackbits(np.frombuffer(entropy_source, dtype=np.uint8))[:need_bits]
    return ToeplitzSeed(n, m, bits)


def toeplitz_extract_reference(seed: ToeplitzSeed, input_bits: np.ndarray) -> np.ndarray:
    """The definition, as a double loop over matrix entries. Slow on
    purpose; this is the oracle the fast path is tested against."""
    x = np.asarray(input_bits, dtype=np.uint8)
    if x.size != seed.n:
        raise InvalidParameterError(f"input must be {seed.n} bits, got {x.size}")
    out = np.zeros(seed.m, dtype=np.uint8)
    bits = seed.bits
    for i in range(seed.m):
        acc = 0
        for j in range(seed.n):
            acc ^= bits[i - j + seed.n - 1] & x[j]
        out[i] = acc
    return out


def toeplitz_extract_dense(seed: ToeplitzSeed, input_blocks: np.ndarray) -> np.ndarray:
    """Naive path vectorized: dense matrix product reduced mod 2.

    ``input_blocks`` is (B, n) or (n,); float32 accumulation is exact here
    because row sums cannot exceed n < 2^24.
    """
    x = np.atleast_2d(np.asarray(input_blocks, dtype=np.float32))
    if x.shape[1] != seed.n:
        raise InvalidParameterError(f"input must be {seed.n} bits, got {x.shape[1]}")
    t = seed.dense_matrix().astype(np.float32)
    y = (x @ t.T).astype(np.int64) & 1
    out = y.astype(np.uint8)
    return out[0] if np.asarray(input_blocks).ndim == 1 else out


def _blocks_to_bits(seed: ToeplitzSeed, out_words: np.ndarray) -> np.ndarray:
    """(B, words) uint64 -> (B, m) bit matrix, MSB-first word order."""
    as_bytes = out_words.astype(">u8").view(np.uint8).reshape(out_words.shape[0], -1)
    return np.unpackbits(as_bytes, axis=1)[:, : seed.m]


def extract_blocks(
    seed: ToeplitzSeed,
    block_bytes: np.ndarray,
    workers: int = 1,
    backend: str | None = None,
) -> np.ndarray:
    """Word-parallel extraction of packed input blocks.

    ``block_bytes`` is (B, n/8) uint8, each row one MSB-first input block;
    returns the (B, words) uint64 output words.
    """
    if seed.n % 8 != 0:
        raise InvalidParameterError("packed-block extraction requires n divisible by 8")
    kernel = _accel.xor_table_blocks(backend)
    table = seed.xor_table()
    out = np.zeros((block_bytes.shape[0], seed.word_width), np.uint64)
    kernel(table, block_bytes, out, workers)
    return out


def toeplitz_extract(
    seed: ToeplitzSeed, input_bits: np.ndarray, backend: str | None = None
) -> np.ndarray:
    """Extract one block: m output bits from n input bits.

    Uses the word-parallel kernel whenever n is byte-aligned, the dense
    naive product otherwise (toy sizes only).
    """
    x = np.asarray(input_bits, dtype=np.uint8)
    if x.size != seed.n:
        raise InvalidParameterError(f"input must be {seed.n} bits, got {x.size}")
    if seed.n % 8 != 0:
        return toeplitz_extract_dense(seed, x)
    packed = np.packbits(x)[None, :]
    words = extract_blocks(seed, packed, backend=backend)
    return _blocks_to_bits(seed, words)[0]


@dataclass
class ExtractResult:
    packed_bits: np.ndarray  # uint8, MSB-first
    bit_count: int
    block_count: int
    discarded_samples: int
    seed_fingerprint: str
    bits_per_sample: float


def _codes_to_block_bytes(trace: QuantizedTrace, n: int) -> tuple[np.ndarray, int]:
    k = trace.adc.bits
    if n % k != 0:
        raise InvalidParameterError(f"block size n={n} not divisible by adc bits k={k}")
    samples_per_block = n // k
    n_blocks = len(trace) // samples_per_block
    if n_blocks == 0:
        raise InvalidParameterError(
            f"trace has {len(trace)} samples, one block needs {samples_per_block}"
        )
    discarded = len(trace) - n_blocks * samples_per_block
    used = trace.codes[: n_blocks * samples_per_block]
    if k == 8:
        block_bytes = used.reshape(n_blocks, samples_per_block)
    else:
        shifts = np.arange(k - 1, -1, -1, dtype=np.uint16)
        bits = (used[:, None].astype(np.uint16) >> shifts) & 1
        bits = bits.astype(np.uint8).reshape(n_blocks, n)
        block_bytes = np.packbits(bits, axis=1)
    return np.ascontiguousarray(block_bytes), discarded


def extract_stream(
    seed: ToeplitzSeed,
    trace: QuantizedTrace,
    workers: int = 1,
    backend: str | None = None,
) -> ExtractResult:
    """Pack ADC codes MSB-first into n-bit blocks, extract each block, and
    concatenate the m-bit outputs. A trailing partial block is discarded
    and counted. Output is identical for any worker count."""
    block_bytes, discarded = _codes_to_block_bytes(trace, seed.n)
    n_blocks = block_bytes.shape[0]
    words = extract_blocks(seed, block_bytes, workers=workers, backend=backend)
    if seed.m % 8 == 0:
        m_bytes = seed.m // 8
        packed = (
            words.astype(">u8").view(np.uint8).reshape(n_blocks, -1)[:, :m_bytes].ravel()
        )
    else:
        bits = _blocks_to_bits(seed, words).ravel()
        packed = np.packbits(bits)
    total_bits = n_blocks * seed.m
    used_samples = len(trace) - discarded
    return ExtractResult(
        packed_bits=np.ascontiguousarray(packed),
        bit_count=total_bits,
        block_count=n_blocks,
        discarded_samples=discarded,
        seed_fingerprint=seed.fingerprint,
        bits_per_sample=total_bits / used_samples,
    )


def throughput_benchmark(
    seed: ToeplitzSeed,
    payload_bytes: int,
    runs: int = 5,
    workers: int = 1,
    backend: str | None = None,
    rng_seed: int = 0,
) -> dict:
    """Sustained extraction throughput on a random payload.

    Times only the hot kernel (the table is built once up front, as in
    steady-state streaming) and reports the median over ``runs`` passes.
    """
    if payload_bytes < (1 << 20):
        raise InvalidParameterError("benchmark payload must be at least 1 MiB")
    if runs < 5:
        raise InvalidParameterError("need at least 5 runs for a stable median")
    n_bytes = seed.n // 8
    n_blocks = payload_bytes // n_bytes
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([rng_seed, 3])))
    blocks = rng.integers(0, 256, (n_blocks, n_bytes), dtype=np.uint8)
    out = np.zeros((n_blocks, seed.word_width), np.uint64)
    kernel = _accel.xor_table_blocks(backend)
    table = seed.xor_table()
    kernel(table, blocks[:64], out[:64], workers)  # warm-up / JIT compile
    durations = []
    for _ in range(runs):
        out[:] = 0
        t0 = time.perf_counter()
        kernel(table, blocks, out, workers)
        durations.append(time.perf_counter() - t0)
    dt = statistics.median(durations)
    in_bits = n_blocks * seed.n
    out_bits = n_blocks * seed.m
    return {
        "backend": backend or _accel.DEFAULT_BACKEND,
        "workers": workers,
        "n_bits": seed.n,
        "m_bits": seed.m,
        "payload_bytes": n_blocks * n_bytes,
        "runs": runs,
        "median_seconds": dt,
        "all_seconds": durations,
        "input_bits_per_second": in_bits / dt,
        "output_bits_per_second": out_bits / dt,
    }
