"""Command-line entry point.

    cavmol <mode> --config run.ini [--output DIR] [--workers N]
    cavmol --seed-check

The subcommand names the run mode; a config that states a different mode
is rejected rather than silently reinterpreted.  Exit codes: 0 success,
2 configuration problem, 3 numerical contract violated, 4 sweep finished
with failed points.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .config import MODES, ConfigError, parse_config
from .fock import TruncationError
from .grid import DtConvergenceError
from .model import NoCrossingError
from .units import UnitError

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavmol",
        description=(
            "Polariton photodynamics of a diatomic molecule in a single-mode "
            "cavity: spectra, wavepacket dynamics on two numerical backends, "
            "method comparison, and parameter sweeps."
        ),
    )
    parser.add_argument(
        "--seed-check",
        action="store_true",
        help="run the built-in invariant suite and exit",
    )
    sub = parser.add_subparsers(dest="mode", metavar="{" + ",".join(MODES) + "}")
    for mode in MODES:
        p = sub.add_parser(mode, help=f"run in {mode} mode")
        p.add_argument("--config", required=True, help="path to the run configuration")
        p.add_argument("--output", default=None, help="override the output directory")
        p.add_argument(
            "--workers",
            type=int,
            default=None,
            help="sweep parallelism (default: available cores)",
        )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.seed_check:
        from .checks import seed_check

        return 0 if seed_check() else 3
    if args.mode is None:
        print("a subcommand or --seed-check is required", file=sys.stderr)
        return 2

    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as err:
        print(f"cannot read config: {err}", file=sys.stderr)
        return 2

    try:
        spec = parse_config(
            text,
            base_dir=os.path.dirname(os.path.abspath(args.config)),
            default_mode=args.mode,
        )
    except ConfigError as err:
        print(f"{args.config}: {err}", file=sys.stderr)
        return 2
    if spec.mode != args.mode:
        print(
            f"{args.config}: config says mode={spec.mode} but the "
            f"{args.mode} subcommand was invoked",
            file=sys.stderr,
        )
        return 2
    if args.output is not None:
        spec = replace(spec, output_dir=args.output)

    from .runner import run

    try:
        return run(spec, workers=args.workers)
    except ConfigError as err:
        print(f"{args.config}: {err}", file=sys.stderr)
        return 2
    except (TruncationError, DtConvergenceError, NoCrossingError, UnitError) as err:
        print(f"numerical contract violated: {err}", file=sys.stderr)
        return 3
    except ValueError as err:
        print(f"numerical contract violated: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
