"""Command-line entry point: ``levyhom <subcommand> [options]``.

Exit codes: 0 all checks passed, 1 an invariant check failed, 2 usage or
configuration error, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

import scipy.fft

from .config import STAGES, load_config
from .errors import ConfigError, ConvergenceError, QuadratureError
from .pipeline import run, validate

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML experiment config (default: reference shear run)")
    common.add_argument("--seed", type=_u64, metavar="U64", help="override the master seed")
    common.add_argument("--out", metavar="DIR", help="override the output directory")
    common.add_argument("--threads", type=_positive, default=1, metavar="N",
                        help="FFT worker threads (default 1)")
    common.add_argument("--verbose", "-v", action="count", default=0,
                        help="log progress (repeat for debug output)")
    parser = argparse.ArgumentParser(
        prog="levyhom",
        description="Periodic homogenization experiments for jump processes with divergence-free drift.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "kernel-check": "symbol envelope and tail-condition report",
        "env-gen": "write the environment mode list and moment diagnostics",
        "corrector": "solve the cell problem and write corrector fields",
        "effective": "homogenized matrix and its decomposition",
        "resolvent-sweep": "convergence table of the scaled resolvent problem",
        "simulate": "Monte Carlo displacement statistics and diffusivity estimate",
        "validate": "run the fast invariant suite",
        "run": "run every stage listed in the config",
    }
    for name in (*STAGES, "validate", "run"):
        sub.add_parser(name, parents=[common], help=helps[name], description=helps[name])
    return parser


def _print_manifest(manifest, stream) -> None:
    for st in manifest.stages:
        print(f"{st.name:<16} {st.status:<8} {st.seconds:8.2f}s  {st.message}", file=stream)
        for name, passed, detail in st.checks:
            print(f"    {'PASS' if passed else 'FAIL'}  {name:<28} {detail}", file=stream)
    print(f"status: {manifest.status}  manifest: {manifest.output}/manifest.json", file=stream)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    out = sys.stdout
    try:
        with scipy.fft.set_workers(args.threads):
            if args.command == "validate":
                rows = validate()
                for name, passed, detail in rows:
                    print(f"{'PASS' if passed else 'FAIL'}  {name:<30} {detail}", file=out)
                return EXIT_OK if all(p for _, p, _ in rows) else EXIT_INVARIANT
            cfg = load_config(args.config)
            for w in cfg.warnings:
                print(f"warning: {w}", file=sys.stderr)
            stages = None if args.command == "run" else [args.command]
            cfg = cfg.with_overrides(seed=args.seed, output=args.out, stages=stages)
            manifest = run(cfg)
            _print_manifest(manifest, out)
            return manifest.exit_code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, QuadratureError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
