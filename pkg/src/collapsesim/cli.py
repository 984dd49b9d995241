"""Command-line entry point.

Exit status: 0 on success, 2 for configuration errors, 3 for runtime errors.
"""

from __future__ import annotations

import argparse
import signal
import sys
from typing import Optional, Sequence

from . import __version__
from .config import MODES, ConfigError, parse_config
from .report import check_writable, render, write_atomic
from .runner import run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collapsesim",
        description="Exact vs coarse-grained simulation of a two-branch measurement interaction.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="mode", required=True, metavar="MODE")
    for mode in MODES:
        p = sub.add_parser(mode, help=f"run the {mode} pipeline")
        p.add_argument("--config", help="INI config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int, help="Monte Carlo sample count M")
        p.add_argument("--particles", type=int, help="apparatus particle count N")
        p.add_argument("--steps", type=int)
        p.add_argument("--dt", type=float)
        p.add_argument("--workers", type=int, help="threads for coarse sampling")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"))
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    return {
        "mode": args.mode,
        "seed": args.seed,
        "samples": args.samples,
        "apparatus.particles": args.particles,
        "steps": args.steps,
        "dt": args.dt,
        "workers": args.workers,
        "output_path": args.out,
        "output_format": args.format,
    }


def _raise_exit(signum, frame):
    # Turns SIGTERM into SystemExit so pending temp files are cleaned up.
    raise SystemExit(128 + signum)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if cfg.output_path is not None:
            check_writable(cfg.output_path)
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    previous = signal.signal(signal.SIGTERM, _raise_exit)
    try:
        report = run(cfg)
        text = render(report, cfg.output_format)
        if cfg.output_path is None:
            sys.stdout.write(text)
        else:
            write_atomic(cfg.output_path, text)
    except (ArithmeticError, ValueError, RuntimeError, OSError, MemoryError) as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    finally:
        signal.signal(signal.SIGTERM, previous)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
