"""bvpp-sim command line.

    bvpp-sim generate --config scenario.yaml [--out DIR] [--seed N] [--threads N] [--strict]
    bvpp-sim case1 ...
    bvpp-sim case2 ...
    bvpp-sim validate-config --config scenario.yaml
    bvpp-sim version

Log verbosity comes from the BVPP_SIM_LOG environment variable (DEBUG,
INFO, WARNING, ...); logs go to stderr, data only to files.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings

import bvpp_sim
from bvpp_sim import config as config_mod
from bvpp_sim import pipeline
from bvpp_sim.errors import BvppError, BvppWarning, ConfigError

log = logging.getLogger("bvpp_sim")

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bvpp-sim", description="Building virtual power plant simulation")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario file (YAML or JSON)")
    common.add_argument("--out", help="output directory (overrides output_dir in the config)")
    common.add_argument("--seed", type=_u64, help="override the global seed")
    common.add_argument("--threads", type=_positive, default=1, help="worker threads inside stages")
    common.add_argument("--strict", action="store_true", help="treat warnings as errors")

    sub.add_parser("generate", parents=[common], help="simulate household profiles")
    sub.add_parser("case1", parents=[common], help="market participation: schedules, bids, settlement")
    sub.add_parser("case2", parents=[common], help="clustering, flagging and peer recommendations")
    sub.add_parser("validate-config", parents=[common], help="check a scenario file and print its hash")
    sub.add_parser("version", help="print the toolkit version")
    return parser


def _setup_logging():
    level = os.environ.get("BVPP_SIM_LOG", "WARNING").upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logging.captureWarnings(True)


COMMANDS = {"generate": pipeline.cmd_generate, "case1": pipeline.cmd_case1, "case2": pipeline.cmd_case2}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "version":
        print(bvpp_sim.__version__)
        return EXIT_OK
    _setup_logging()
    with warnings.catch_warnings():
        if args.strict:
            warnings.simplefilter("error", BvppWarning)
        try:
            cfg = config_mod.load(args.config, args.seed, args.out)
            if args.command == "validate-config":
                print(f"ok {cfg.hash()} households={len(cfg.households)} grid={cfg.grid.length}")
                return EXIT_OK
            COMMANDS[args.command](cfg, args.threads)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except (BvppError, BvppWarning, OSError, ValueError) as exc:
            print(f"{args.command} failed: {exc}", file=sys.stderr)
            return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
