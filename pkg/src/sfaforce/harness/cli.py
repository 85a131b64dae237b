"""Command-line entry point: run scenarios, calibrate, summarise logs.

Exit codes: 0 success, 1 config/validation error, 2 runtime error. All
outputs land under the --out directory (or the config's output.directory),
never the working directory implicitly.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .scenarios import run_calibration, run_scenario
from .summary import summarize

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sfaforce",
        description="Simulated intrinsic force sensing and control experiments "
                    "for hydraulic soft fluidic actuators.",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario config")
    run_p.add_argument("config", help="path to a scenario YAML config")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed (u64)")
    run_p.add_argument("--out", default=None, help="output directory (overrides config)")
    run_p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="summary format (overrides config)")

    cal_p = sub.add_parser("calibrate", help="produce a calibration artifact from plant sweeps")
    cal_p.add_argument("config", help="path to a calibration YAML config")
    cal_p.add_argument("--seed", type=int, default=None, help="override the config seed (u64)")
    cal_p.add_argument("--out", default=None, help="output directory (overrides config)")

    sum_p = sub.add_parser("summarize", help="rebuild a summary from step logs on disk")
    sum_p.add_argument("log_dir", help="directory containing conditions.csv and logs/")
    sum_p.add_argument("--out", default=None, help="directory for the rebuilt summary")
    sum_p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _reseed(scenario, seed: int | None):
    if seed is None:
        return scenario
    plant = dataclasses.replace(scenario.plant, rng_seed=seed)
    reseeded = dataclasses.replace(scenario, seed=seed, plant=plant)
    resolved = dict(scenario.resolved)
    resolved["seed"] = seed
    object.__setattr__(reseeded, "resolved", resolved)
    return reseeded


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "run":
            scenario = _reseed(load_config(args.config), args.seed)
            if scenario.kind == "calibration":
                raise ConfigError("configs with kind 'calibration' run via the calibrate command")
            summary = run_scenario(scenario, out_dir=args.out, fmt=args.format)
            out_base = Path(args.out) if args.out else Path(scenario.output_dir)
            print(out_base / scenario.kind / ("summary.json" if (args.format or scenario.output_format) == "json" else "summary.csv"))
        elif args.command == "calibrate":
            scenario = _reseed(load_config(args.config), args.seed)
            if scenario.kind != "calibration":
                raise ConfigError(f"calibrate expects kind 'calibration', got {scenario.kind!r}")
            artifact = run_calibration(scenario, out_dir=args.out)
            print(artifact)
        elif args.command == "summarize":
            summary = summarize(args.log_dir)
            out_dir = Path(args.out) if args.out else Path(args.log_dir)
            path = summary.write(out_dir, args.format)
            print(path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
