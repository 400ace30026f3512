import argparse
import asyncio
import os
import sys
import time
from datetime import timedelta
from typing import Sequence

import humanize
from loguru import logger

import commands.decode
import commands.evaluate
import commands.featurize
import commands.fixtures
import commands.forward
import commands.separate
import commands.weights
from commands.common import EXIT_UNEXPECTED, exit_code_for

COMMAND_MODULES = (
    commands.featurize,
    commands.evaluate,
    commands.forward,
    commands.decode,
    commands.separate,
    commands.weights,
    commands.fixtures,
)


def configure_logging(verbose: bool = False) -> None:
    logger.remove()  # All default handlers are removed
    level = "DEBUG" if verbose else os.getenv("LOG_LEVEL", "INFO")
    logger.add(sys.stderr, diagnose=False, level=level)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amtkit", description="Multi-instrument transcription and separation toolkit."
    )
    parser.add_argument("--taxonomy", help="Instrument taxonomy file (default: $AMTKIT_TAXONOMY or the built-in one).")
    parser.add_argument("--jobs", type=int, default=1, help="Pieces processed concurrently.")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level.")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for module in COMMAND_MODULES:
        module.register(subparsers)
    return parser


async def run(args: argparse.Namespace) -> int:
    start_time = time.monotonic()
    try:
        code = await args.func(args)
    except Exception as e:
        code = exit_code_for(e)
        if code == EXIT_UNEXPECTED:
            logger.exception(f"{args.command} failed unexpectedly")
        else:
            logger.error(f"{args.command}: {e}")
        return code
    elapsed = timedelta(seconds=time.monotonic() - start_time)
    logger.info(f"{args.command} finished in {humanize.precisedelta(elapsed, minimum_unit='milliseconds')}")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    return asyncio.run(run(args))


if __name__ == "__main__":
    sys.exit(main())
