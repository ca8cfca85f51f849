"""Command-line front end.

    qrng simulate|ingest|quantize|certify|extract|test|run
         --config PATH [--seed U64] [--out DIR] [--workers N]
         [--force] [--format {csv,binary,raw_u8}] ...

Exit codes: 0 success, 1 validation, 2 certification failure,
3 statistical test failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import PipelineConfig
from .errors import (
    CertificationFailure,
    DegenerateInputError,
    IngestError,
    QrngError,
)
from . import pipeline

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CERTIFICATION = 2
EXIT_TESTS = 3
EXIT_IO = 4


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 means "certification failure"
    # here, so remap usage problems to the validation code.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _build_parser() -> _Parser:
    p = _Parser(prog="qrng", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="pipeline config file")
        sp.add_argument("--seed", type=int, default=None, help="override the config rng_seed")
        sp.add_argument("--out", default="qrng-out", help="output directory")
        sp.add_argument("--workers", type=int, default=1, help="worker threads (extraction)")

    sp = sub.add_parser("simulate", help="generate an analog trace from the config")
    common(sp)

    sp = sub.add_parser("ingest", help="normalize an external trace file")
    common(sp)
    sp.add_argument("path", help="source file")
    sp.add_argument("--format", choices=("csv", "binary", "raw_u8"), default="csv")
    sp.add_argument("--headerless", action="store_true", help="two-column CSV without header")
    sp.add_argument("--resample", action="store_true",
                    help="interpolate non-uniform timestamps onto a uniform grid")

    sp = sub.add_parser("quantize", help="ADC-quantize the trace in the output directory")
    common(sp)

    sp = sub.add_parser("certify", help="worst-case min-entropy certification")
    common(sp)
    sp.add_argument("--include-drift", action="store_true",
                    help="fold interferometer drift into the noise bounds")

    sp = sub.add_parser("extract", help="Toeplitz-extract the quantized trace")
    common(sp)
    sp.add_argument("--force", action="store_true",
                    help="extract even without a passing certification (recorded)")
    sp.add_argument("--seed-file", default=None, help="external Toeplitz seed file")

    sp = sub.add_parser("test", help="statistical test suite on a bit file")
    common(sp)
    sp.add_argument("bits", nargs="?", default=None, help="bit file (default: <out>/extracted.bits)")
    sp.add_argument("--alpha", type=float, default=0.01)

    sp = sub.add_parser("run", help="full pipeline: simulate->quantize->certify->extract->test")
    common(sp)
    sp.add_argument("--force", action="store_true")
    sp.add_argument("--alpha", type=float, default=0.01)
    sp.add_argument("--include-drift", action="store_true")
    return p


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config)
    if args.seed is not None:
        cfg.rng_seed = args.seed
    return cfg


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    summary = pipeline.stage_simulate(cfg, args.out, rng_seed=args.seed, workers=args.workers)
    print(
        f"simulated {summary['samples']} samples at"
        f" T_s = {summary['sample_period_s']:.3e} s;"
        f" range [{summary['min_mv']:.2f}, {summary['max_mv']:.2f}] mV;"
        f" KS vs analytic law = {summary['ks_distance_vs_analytic']:.5f}"
    )
    return EXIT_OK


def _cmd_ingest(args) -> int:
    cfg = _load_config(args)
    stats = pipeline.stage_ingest(
        cfg, args.out, args.path, args.format,
        headerless=args.headerless, resample=args.resample,
    )
    print(f"ingested {args.path}: {stats}")
    return EXIT_OK


def _cmd_quantize(args) -> int:
    cfg = _load_config(args)
    stats = pipeline.stage_quantize(cfg, args.out)
    print(
        f"quantized {stats['codes']} samples"
        f" (clipped low {stats['clipped_low']}, high {stats['clipped_high']})"
    )
    return EXIT_OK


def _cmd_certify(args) -> int:
    cfg = _load_config(args)
    doc = pipeline.stage_certify(cfg, args.out, include_drift=args.include_drift)
    ratio = doc["extraction_ratio"]
    print(
        f"h_min = {doc['report']['h_min_bits']:.4f} bits/sample"
        f" (worst noise {doc['report']['worst_noise_mv']:.4f} mV,"
        f" code {doc['report']['worst_code']});"
        f" extraction ratio {'OK' if ratio['ok'] else 'FAIL'}"
        f" (slack {ratio['slack_bits']:.1f} bits)"
    )
    if doc["sensitivity"]:
        print("sensitivity (grid x bounds -> h_min bits):")
        for row in doc["sensitivity"]:
            mark = " <- reference" if row["reference_assumption"] else ""
            print(
                f"  {row['grid']:>18} / {row['bounds']:<10}"
                f" {row['h_min_bits']:.4f}"
                f"{' (clipping-bound)' if row['clipping_bound'] else ''}{mark}"
            )
    return EXIT_OK if ratio["ok"] else EXIT_CERTIFICATION


def _cmd_extract(args) -> int:
    cfg = _load_config(args)
    rates = pipeline.stage_extract(
        cfg, args.out, rng_seed=args.seed, workers=args.workers,
        force=args.force, seed_file=args.seed_file,
    )
    print(
        f"extracted {rates['output_bits']} bits from {rates['blocks']} blocks"
        f" ({rates['bits_per_sample']:.3f} bits/sample,"
        f" implied line rate {rates['implied_output_bits_per_second'] / 1e6:.1f} Mbps,"
        f" {rates['discarded_samples']} trailing samples discarded)"
    )
    return EXIT_OK


def _cmd_test(args) -> int:
    cfg = _load_config(args)
    result = pipeline.stage_test(cfg, args.out, bits_path=args.bits, alpha=args.alpha)
    for e in result.entries:
        status = "PASS" if e.passed else ("N/A " if not e.applicable else "FAIL")
        pv = "nan" if e.p_value != e.p_value else f"{e.p_value:.4g}"
        print(f"  {status} {e.name:<22} p = {pv}")
    print(f"suite: {'all applicable tests pass' if result.all_passed else 'FAILURES present'}")
    return EXIT_OK if result.all_passed else EXIT_TESTS


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    result = pipeline.run_pipeline(
        cfg, args.out, rng_seed=args.seed, workers=args.workers,
        force=args.force, alpha=args.alpha, include_drift=args.include_drift,
    )
    manifest = json.loads((Path(args.out) / pipeline.MANIFEST_FILE).read_text())
    print(json.dumps({"rates": manifest["rates"], "stages": list(manifest["stages"])}, indent=2))
    return EXIT_OK if result.all_passed else EXIT_TESTS


_COMMANDS = {
    "simulate": _cmd_simulate,
    "ingest": _cmd_ingest,
    "quantize": _cmd_quantize,
    "certify": _cmd_certify,
    "extract": _cmd_extract,
    "test": _cmd_test,
    "run": _cmd_run,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (CertificationFailure, DegenerateInputError) as exc:
        print(f"certification error: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except IngestError as exc:
        print(f"ingest error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except QrngError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
