"""Command line entry point: ``run``, ``cir`` and ``tref`` subcommands."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace

from molfilter.channel import build_cir, reference_time
from molfilter.experiment import ConfigError, ExperimentConfig, parse_config, run_sweep


def _filters(raw: str):
    return tuple(f.strip() for f in raw.split(",") if f.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="molfilter", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log sweep progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the N^tx sweep and write CSV files")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="output directory (overrides out_dir)")
    run.add_argument("--seed", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--filters", type=_filters, help="comma-separated subset of matched,sum,correlator,peak")
    run.add_argument("--workers", type=int)

    cir = sub.add_parser("cir", help="print the L x M channel impulse response as CSV")
    cir.add_argument("--config", required=True)

    tref = sub.add_parser("tref", help="print the reference time in seconds")
    tref.add_argument("--config", required=True)
    return parser


def _overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    changes = {}
    for key in ("seed", "trials", "filters", "workers"):
        value = getattr(args, key)
        if value is not None:
            changes[key] = value
    if args.out is not None:
        changes["out_dir"] = args.out
    return replace(cfg, **changes) if changes else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = parse_config(args.config)
        if args.command == "run":
            cfg = _overrides(cfg, args)
            for path in run_sweep(cfg):
                print(path)
        elif args.command == "cir":
            cir = build_cir(cfg.channel(), cfg.timing())
            w = csv.writer(sys.stdout, lineterminator="\n")
            for row in cir.taps:
                w.writerow([repr(float(v)) for v in row])
        elif args.command == "tref":
            print(repr(reference_time(cfg.channel())))
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
