"""Command line entry point: ``beamsteer simulate|preset|analyze``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import ConfigurationError, NumericError, __version__
from .config import parse_config
from .experiments import PRESETS, analyze, codebook_table, run_preset, simulate
from .output import emit


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")
    p.add_argument("--seed", type=int, default=None, help="override master_seed")
    p.add_argument("--workers", type=int, default=1, help="worker processes for Monte Carlo trials")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="beamsteer", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo rates for a config file")
    p.add_argument("config", type=Path)

    p = sub.add_parser("preset", parents=[common], help="reproduce one of the figure experiments")
    p.add_argument("name", choices=PRESETS)
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")

    p = sub.add_parser("analyze", parents=[common], help="closed-form rate loss and codebook sizing")
    p.add_argument("config", type=Path)
    p.add_argument("--table", choices=("loss", "codebook"), default="loss")
    return parser


def _load(path: Path, seed):
    cfg = parse_config(path.read_text(), source=str(path))
    return cfg.replace(master_seed=seed) if seed is not None else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            table = simulate(_load(args.config, args.seed), workers=args.workers)
        elif args.command == "preset":
            table = run_preset(args.name, args.overrides, workers=args.workers, seed=args.seed)
        else:
            cfg = _load(args.config, args.seed)
            table = analyze(cfg) if args.table == "loss" else codebook_table(cfg.d_over_lambda)
    except (ConfigurationError, OSError) as exc:
        print(f"beamsteer: error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"beamsteer: numeric error: {exc} {exc.context.get('trial_index', '')}", file=sys.stderr)
        return 3

    try:
        if args.out is None:
            emit(table, args.format, sys.stdout)
        else:
            with open(args.out, "w", newline="") as fh:
                emit(table, args.format, fh)
    except OSError as exc:
        print(f"beamsteer: cannot write output: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
