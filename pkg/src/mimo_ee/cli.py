"""Command line: ``mimo-ee run --config <path> [--out <path>] [--seed <u64>] [--trials <n>]``."""
import argparse
import logging
import sys

from .experiments import ConfigError, emit_csv, load_config, run_scenario, validate
from .solver import SolverError

log = logging.getLogger("mimo_ee")


def build_parser():
    ap = argparse.ArgumentParser(prog="mimo-ee", description="Energy-efficient massive MIMO power allocation experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scenario from a config file")
    run.add_argument("--config", required=True, help="flat key = value config file")
    run.add_argument("--out", help="output CSV path (overrides the config)")
    run.add_argument("--seed", type=int, help="base seed, trial t uses seed + t")
    run.add_argument("--trials", type=int, help="trials per sweep point")
    run.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad usage; that is a config error here
        return 0 if e.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg.out = args.out
        if args.seed is not None:
            cfg.seed = args.seed
        if args.trials is not None:
            cfg.trials = args.trials
        validate(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    try:
        res = run_scenario(cfg, progress=lambda x: log.info("done sweep point %s", x))
        for path in emit_csv(res, cfg.out):
            log.info("wrote %s", path)
    except (SolverError, OSError, ValueError, FloatingPointError) as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
