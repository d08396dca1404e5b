"""Command-line entry point: ``modemlab <experiment> [--config PATH] [options]``."""
from __future__ import annotations

import argparse
import logging
import sys

from .experiments.config import EXPERIMENTS, ConfigError, default_config, load_config
from .experiments.runner import run_experiment
from .experiments.tables import SchemaError
from .tsnmt import ConditioningError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONDITIONING = 3

log = logging.getLogger("modemlab")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="modemlab", description="Run a modem or capacity experiment and write CSV output.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="YAML experiment config (defaults are used when omitted)")
    p.add_argument("--seed", type=int, help="64-bit master seed (overrides the config)")
    p.add_argument("--trials", type=int, help="Monte Carlo trials (overrides the config)")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--jobs", type=int, help="worker processes (overrides the config)")
    p.add_argument("--plot", action="store_true", help="also write an SVG next to the CSV")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config, args.experiment) if args.config else default_config(args.experiment)
        for attr, value in (("seed", args.seed), ("trials", args.trials), ("output_dir", args.out), ("jobs", args.jobs)):
            if value is not None:
                setattr(cfg, attr, value)
        cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        path = run_experiment(cfg, plot=args.plot)
    except ConditioningError as exc:
        print(f"conditioning failure: {exc}", file=sys.stderr)
        return EXIT_CONDITIONING
    except SchemaError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("wrote %s", path)
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
