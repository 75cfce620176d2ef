import sys
import os
from dotenv import load_dotenv

# Environment: DYNOPLAN_LOG_LEVEL, DYNOPLAN_WORKERS
load_dotenv()

# Add current directory to Python path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import argparse
import logging
from typing import List, Optional

from dynoplan.commands import register_all
from dynoplan.core.errors import ConfigError, DynoPlanError
from dynoplan.utils.logging import configure_logging

logger = logging.getLogger("dynoplan.cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PIPELINE = 2


class UsageError(Exception):
    pass


class CommandParser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; route them to exit 1 instead."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def common_flags() -> argparse.ArgumentParser:
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("--config", help="experiment config file (JSON)")
    flags.add_argument("--seed", type=int, help="overrides the config seed")
    flags.add_argument("--out", help="output directory; overrides the config")
    flags.add_argument("--episodes", type=int, help="episode count; overrides the config")
    flags.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    return flags


def build_parser() -> CommandParser:
    parser = CommandParser(prog="dynoplan", description="Hierarchical option planner experiments")
    subparsers = parser.add_subparsers(dest="command", metavar="{run,fit,regions,gen-demos}",
                                       parser_class=CommandParser)
    subparsers.required = True
    register_all(subparsers, parents=[common_flags()])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config_required", False) and not args.config:
            raise UsageError(f"dynoplan {args.command}: --config is required")
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE

    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error(f"Config error: {e}")
        return EXIT_USAGE
    except DynoPlanError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_PIPELINE
    except Exception as e:
        logger.exception(f"{args.command} failed unexpectedly: {e}")
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
