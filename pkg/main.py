"""
MQS Measurement Simulator - Main Entry Point

Simulates measurement-induced macroscopic superpositions in a two-component
condensate: snapshot counting after a coherent outcoupling pulse, one-by-one
detection under continuous observation, and the interference readout.

Usage:
    python main.py --config run.json [--seed N] [--mode NAME] [--out DIR]
    python main.py validate --config run.json
"""

import argparse
import logging
import sys
from dataclasses import replace
from typing import List, Optional

import config
from cli.run_config import MODES, RunConfig, apply_scale, validate
from cli.runner import run
from errors import ConfigError, SimulationError

# ============================================================================
# LOGGING SETUP
# ============================================================================
logger = logging.getLogger(__name__)
logging.basicConfig(
    level=config.LOG_LEVEL,
    format=config.LOG_FORMAT,
    handlers=[
        logging.StreamHandler() if config.LOG_TO_CONSOLE else logging.NullHandler(),
        logging.FileHandler(config.LOG_FILE) if config.LOG_TO_FILE else logging.NullHandler(),
    ]
)


def build_parser() -> argparse.ArgumentParser:
    """Command-line surface: an optional run/validate command plus overrides of the run file."""
    parser = argparse.ArgumentParser(description="Measurement-induced MQS simulator")
    parser.add_argument("command", nargs="?", choices=("run", "validate"), default="run",
                        help="run a configuration (default) or only validate it")
    parser.add_argument("--config", help="path to a flat JSON run configuration")
    parser.add_argument("--seed", type=int, help="master seed (overrides the config)")
    parser.add_argument("--mode", choices=MODES, help="mode to run (overrides the config)")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--workers", type=int, help="worker processes for ensembles")
    scale = parser.add_mutually_exclusive_group()
    scale.add_argument("--desk-scale", action="store_true", help="N = 100 per level, scaled nu and <n0>")
    scale.add_argument("--full-scale", action="store_true", help="N = 1000 per level")
    return parser


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """Config file (or defaults) with command-line overrides and scale profile applied."""
    run_config = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.mode is not None:
        overrides["mode"] = args.mode
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.workers is not None:
        overrides["workers"] = args.workers
    run_config = replace(run_config, **overrides)
    if args.desk_scale:
        run_config = apply_scale(run_config, "desk")
    elif args.full_scale:
        run_config = apply_scale(run_config, "full")
    return run_config


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run or validate, and map failures to exit codes.

    Returns:
        0 on success, 2 for configuration errors, 3 for model errors and
        4 when a built-in self-check fails.
    """
    args = build_parser().parse_args(argv)
    logger.info("MQS Measurement Simulator Starting")
    try:
        run_config = load_run_config(args)
        if args.command == "validate":
            report = validate(run_config)
            print(report.render())
            return 0 if report.ok else ConfigError.exit_code
        summary = run(run_config)
    except SimulationError as e:
        logger.error(f"Run failed: {e}", exc_info=True)
        print(f"error category={e.category}: {e}", file=sys.stderr)
        return e.exit_code
    print(summary.line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
