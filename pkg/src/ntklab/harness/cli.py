"""Command-line entry point: ``ntklab <experiment> [--config FILE] [--out FILE] ...``."""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from ntklab.harness.config import SweepConfig, config_from_mapping, load_config
from ntklab.harness.csvout import write_csv
from ntklab.harness.experiments import run
from ntklab.network import ConfigurationError

SUBCOMMANDS = {
    "dispersion": "dispersion",
    "nondiag": "nondiag",
    "gd-step": "gd_step",
    "structure": "structure",
    "theory": "theory_only",
}

HELP = {
    "dispersion": "Monte-Carlo dispersion of the diagonal NTK against the closed forms",
    "nondiag": "ratio of off-diagonal to diagonal NTK expectations",
    "gd-step": "relative NTK change after one gradient step",
    "structure": "within/cross-class NTK structure while training on toy blobs",
    "theory": "tabulate closed-form predictions only",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ntklab", description="Finite-width NTK experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", help="flat YAML file with SweepConfig fields")
        p.add_argument("--out", help="output CSV path (default: config 'out', else stdout)")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit), overrides the config")
        p.add_argument("--workers", type=int, default=1, help="worker processes for independent cells")
        p.add_argument("--samples", type=int, help="samples per cell, overrides the config")
    return parser


def resolve_config(args: argparse.Namespace) -> SweepConfig:
    kind = SUBCOMMANDS[args.command]
    cfg = load_config(args.config, kind) if args.config else config_from_mapping({}, kind)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.samples is not None:
        overrides["samples"] = args.samples
    if args.out is not None:
        overrides["out"] = args.out
    return cfg.replace(**overrides) if overrides else cfg


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    try:
        cfg = resolve_config(args)
    except (ConfigurationError, OSError) as exc:
        print(f"ntklab: configuration error: {exc}", file=sys.stderr)
        return 2
    result = run(cfg, workers=args.workers)
    if cfg.out:
        write_csv(result, cfg.out)
    else:
        write_csv(result, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
