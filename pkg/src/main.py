#!/usr/bin/env python3
"""
COLA experiments - Entry point
"""
import argparse
import logging
import sys
from typing import Optional, Sequence

from .cli.handlers import setup_parsers
from .core.config import settings
from .core.exceptions import ColaError
from .core.logging_config import setup_logging

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cola",
        description="Confidence-level allocation for aggregating conformal prediction sets",
    )
    parser.add_argument("--log-level", default=None, help=f"logging level (default {settings.LOG_LEVEL})")
    subparsers = parser.add_subparsers(dest="command", required=True)
    setup_parsers(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the subcommand and map errors to exit codes"""
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or settings.LOG_LEVEL)

    try:
        return args.handler(args)
    except ColaError as e:
        logger.error("❌ %s", e)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
