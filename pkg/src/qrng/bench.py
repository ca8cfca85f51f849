"""Extraction throughput benchmark, comparing the numba and numpy backends.

    python -m qrng.bench [--payload-mib 64] [--workers 1 2] [--out report.json]

Reports sustained input/output bit rates at the default (4096, 2048)
geometry for every (backend, workers) combination, as JSON with enough
environment context to interpret the numbers.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys

import numpy as np

from . import _accel, __version__
from .extractor import derive_seed, throughput_benchmark


def run_benchmark(payload_mib=64, workers_list=(1, 2, 4), runs=5, n=4096, m=2048) -> dict:
    need = (n + m - 1 + 7) // 8
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([1234, 2])))
    seed = derive_seed(gen.bytes(need), n, m)
    backends = ["numpy"]
    if _accel.HAVE_NUMBA:
        backends.insert(0, "numba")
    results = []
    for backend in backends:
        for workers in workers_list:
            if backend == "numpy" and workers != 1:
                continue  # the fallback is single-threaded by design
            rep = throughput_benchmark(
                seed,
                payload_bytes=payload_mib << 20,
                runs=runs,
                workers=workers,
                backend=backend,
            )
            results.append(rep)
    numba_version = None
    if _accel.HAVE_NUMBA:
        import numba

        numba_version = numba.__version__
    return {
        "qrng_version": __version__,
        "geometry": {"n_bits": n, "m_bits": m},
        "environment": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "numba": numba_version,
            "cpu_count": os.cpu_count(),
            "machine": platform.machine(),
            "QRNG_NO_NUMBA": os.environ.get("QRNG_NO_NUMBA"),
        },
        "results": results,
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--payload-mib", type=int, default=64)
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--workers", type=int, nargs="+", default=[1, 2, 4])
    ap.add_argument("--out", default=None, help="also write the JSON report here")
    args = ap.parse_args(argv)
    report = run_benchmark(args.payload_mib, args.workers, args.runs)
    for r in report["results"]:
        print(
            f"{r['backend']:>6} x{r['workers']} workers:"
            f" out {r['output_bits_per_second'] / 1e9:6.3f} Gbps,"
            f" in {r['input_bits_per_second'] / 1e9:6.3f} Gbps"
            f" (median of {r['runs']} runs)"
        )
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=2)
        print(f"report written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
