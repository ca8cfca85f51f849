"""Kernel backends for the hot extraction loop.

The word-parallel Toeplitz kernel XORs precomputed 64-bit table rows,
one row per input byte. It exists in two implementations:

* ``numba`` - JIT-compiled, group-major loop order with an 8-group unroll
  so each table slice stays cache-resident, parallel over block chunks.
* ``numpy`` - pure-numpy gather/XOR fallback, same table, same results.

Both are bit-exact against each other and against the naive GF(2)
reference. Selection: the numba backend is used when importable unless
``QRNG_NO_NUMBA=1`` (or ``QRNG_BACKEND=numpy``) is set in the environment.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_disabled_by_env() -> bool:
    if os.environ.get("QRNG_NO_NUMBA", "").strip().lower() in ("1", "true", "yes"):
        return True
    return os.environ.get("QRNG_BACKEND", "").strip().lower() == "numpy"


HAVE_NUMBA = False
if not _numba_disabled_by_env():
    try:
        import numba
        from numba import njit, prange

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass

DEFAULT_BACKEND = "numba" if HAVE_NUMBA else "numpy"


def build_xor_table(seed_bits: np.ndarray, n: int, m: int) -> np.ndarray:
    """Fold the Toeplitz structure into per-input-byte XOR rows.

    Output block = XOR over set input bits j of the m-bit seed slice
    starting at n-1-j, so each input *byte* selects one of 256 precombined
    m-bit rows. Table shape is (n/8 groups, 257, ceil(m/64) words); the
    row dimension is padded to 257 to stagger group slices across cache
    sets. Words are MSB-first. Size for (n, m) = (4096, 2048) is ~34 MB,
    built once per seed and reused for every block.
    """
    if n % 8 != 0:
        raise ValueError("table kernel requires n divisible by 8")
    windows = np.lib.stride_tricks.sliding_window_view(seed_bits, m)
    base_bits = windows[::-1]  # row j = slice starting at n-1-j
    packed = np.packbits(base_bits, axis=1)
    word_pad = (-packed.shape[1]) % 8
    if word_pad:
        packed = np.pad(packed, ((0, 0), (0, word_pad)))
    base = packed.view(">u8").astype(np.uint64)
    groups = n // 8
    table = np.zeros((groups, 257, base.shape[1]), np.uint64)
    rows = np.arange(groups) * 8
    for value in range(1, 256):
        low = value & -value
        bit_in_byte = 7 - (low.bit_length() - 1)  # MSB-first within the byte
        table[:, value] = table[:, value ^ low] ^ base[rows + bit_in_byte]
    return table


def xor_table_blocks_numpy(table, in_bytes, out_words, workers=1):
    """Reference fallback: one vectorized gather+XOR per byte group.

    ``workers`` is accepted for interface parity and ignored (numpy keeps
    this single-threaded); output is identical to the numba path.
    """
    for g in range(in_bytes.shape[1]):
        np.bitwise_xor(out_words, table[g, in_bytes[:, g], :], out_words)
    return out_words


if HAVE_NUMBA:

    @njit(parallel=True, cache=True)
    def _xor_kernel(table, in_bytes, out_words, nchunks):  # pragma: no cover - jit
        n_blocks, groups = in_bytes.shape
        width = table.shape[2]
        chunk = (n_blocks + nchunks - 1) // nchunks
        for c in prange(nchunks):
            lo = c * chunk
            hi = min(lo + chunk, n_blocks)
            g = 0
            while g + 8 <= groups:
                t0, t1, t2, t3 = table[g], table[g + 1], table[g + 2], table[g + 3]
                t4, t5, t6, t7 = table[g + 4], table[g + 5], table[g + 6], table[g + 7]
                for b in range(lo, hi):
                    v0, v1 = in_bytes[b, g], in_bytes[b, g + 1]
                    v2, v3 = in_bytes[b, g + 2], in_bytes[b, g + 3]
                    v4, v5 = in_bytes[b, g + 4], in_bytes[b, g + 5]
                    v6, v7 = in_bytes[b, g + 6], in_bytes[b, g + 7]
                    for w in range(width):
                        out_words[b, w] ^= (
                            t0[v0, w] ^ t1[v1, w] ^ t2[v2, w] ^ t3[v3, w]
                            ^ t4[v4, w] ^ t5[v5, w] ^ t6[v6, w] ^ t7[v7, w]
                        )
                g += 8
            while g < groups:
                tg = table[g]
                for b in range(lo, hi):
                    v = in_bytes[b, g]
                    for w in range(width):
                        out_words[b, w] ^= tg[v, w]
                g += 1

    def xor_table_blocks_numba(table, in_bytes, out_words, workers=1):
        """Word-parallel kernel; block chunks run on up to ``workers``
        threads. The XOR order within each block is fixed, so the output
        is independent of the worker count."""
        usable = max(1, min(int(workers), numba.get_num_threads()))
        _xor_kernel(table, in_bytes, out_words, usable)
        return out_words

else:
    xor_table_blocks_numba = None


def xor_table_blocks(backend: str | None = None):
    """Resolve a kernel by name ('numba' or 'numpy'; None = best available)."""
    if backend is None:
        backend = DEFAULT_BACKEND
    if backend == "numba":
        if xor_table_blocks_numba is None:
            raise RuntimeError(
                "numba backend requested but numba is unavailable or disabled"
            )
        return xor_table_blocks_numba
    if backend == "numpy":
        return xor_table_blocks_numpy
    raise ValueError(f"unknown backend {backend!r}")
