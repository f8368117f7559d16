"""Command line entry point: ``hybridfb run <config>``, ``validate``, ``print-defaults``."""

import argparse
from dataclasses import replace
import os
import sys

from .config import ExperimentConfig, parse_config
from .errors import ConfigError
from .experiments import run_experiment
from .validation import DEFAULT_SEED, run_all

OUT_DIR_ENV = "HYBRIDFB_OUT_DIR"


def _out_dir(args, cfg_output):
    if args.out_dir:
        return args.out_dir
    return os.environ.get(OUT_DIR_ENV) or cfg_output


def _build_parser():
    parser = argparse.ArgumentParser(prog="hybridfb", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("config")
    validate = sub.add_parser("validate", help="run the acceptance checks; exit 0 iff all pass")
    for p in (run, validate):
        p.add_argument("--seed", type=int, default=None, help="override the base seed")
        p.add_argument("--out-dir", default=None, help=f"output directory (else ${OUT_DIR_ENV}, else config)")
        p.add_argument("--threads", type=int, default=1, help="worker processes for drops")
    sub.add_parser("print-defaults", help="print the default configuration")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.command == "print-defaults":
        sys.stdout.write(ExperimentConfig().to_text())
        return 0
    if args.command == "validate":
        seed = DEFAULT_SEED if args.seed is None else args.seed
        out = _out_dir(args, "results")
        results = run_all(seed=seed, out_dir=os.path.join(out, "validate-scratch"))
        failed = [r.number for r in results if not r.passed]
        print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
        return 1 if failed else 0
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
    except (OSError, ConfigError) as exc:
        print(f"hybridfb: {args.config}: {exc}", file=sys.stderr)
        return 2
    if args.threads < 1:
        print("hybridfb: --threads must be >= 1", file=sys.stderr)
        return 2
    out = _out_dir(args, cfg.output)
    written = run_experiment(cfg, out_dir=out, threads=args.threads)
    if cfg.experiment == "validate":
        return 0 if all(c.passed for c in written["checks"]) else 1
    for name in ("runs", "aggregate", "classification"):
        print(f"{name}: {written[name]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
