"""
Main module contains the command line entrypoint
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import NoReturn

from kinonav.core.config import LOG_LEVEL, RunConfig
from kinonav.core.exceptions import (
    DataError,
    IdentificationError,
    KinonavError,
    MissingPolicyError,
    ModelError,
    SimulationError,
    UsageError,
    WorldError,
)
from kinonav.exception_handlers import (
    EXIT_OK,
    data_error_handler,
    identification_error_handler,
    infeasible_task_handler,
    model_error_handler,
    usage_error_handler,
)
from kinonav.router import ROUTER

stdout_handler = logging.StreamHandler(stream=sys.stdout)
logging.basicConfig(
    handlers=[stdout_handler],
    format="[%(asctime)s]-%(name)s-%(levelname)s: %(message)s",
    level=LOG_LEVEL,
)
logger = logging.getLogger(__name__)

ExceptionHandler = Callable[[Exception], int]
EXCEPTION_HANDLERS: list[tuple[type[Exception], ExceptionHandler]] = []


def add_exception_handler(exc_type: type[Exception], handler: ExceptionHandler) -> None:
    EXCEPTION_HANDLERS.append((exc_type, handler))


# Most specific families first, lookup takes the first match
add_exception_handler(UsageError, usage_error_handler)
add_exception_handler(MissingPolicyError, usage_error_handler)
add_exception_handler(IdentificationError, identification_error_handler)
add_exception_handler(ModelError, model_error_handler)
add_exception_handler(DataError, data_error_handler)
add_exception_handler(WorldError, infeasible_task_handler)
add_exception_handler(SimulationError, infeasible_task_handler)


class CommandParser(argparse.ArgumentParser):
    """Argument parser that raises instead of exiting so errors share the exception handlers"""

    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


def build_parser() -> CommandParser:
    """
    Build the parser with one subparser per registered command
    :return: the parser
    """
    common = CommandParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed, 0 when omitted")
    common.add_argument("--config", default=argparse.SUPPRESS, help="key-value override file")
    common.add_argument("-o", "--output", default=argparse.SUPPRESS, help="output file or directory")

    parser = CommandParser(prog="kinonav", description="Kinodynamic navigation toolkit", parents=[common])
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=CommandParser)
    for command in ROUTER.commands.values():
        subparser = subparsers.add_parser(command.name, help=command.help, parents=[common])
        command.arguments(subparser)
    return parser


def dispatch(exc: KinonavError) -> int:
    for exc_type, handler in EXCEPTION_HANDLERS:
        if isinstance(exc, exc_type):
            return handler(exc)
    raise exc


def main(argv: Sequence[str] | None = None) -> int:
    """
    Parse the arguments and run the chosen command
    :param argv: the arguments, sys.argv when None
    :return: the exit code
    """
    try:
        args = build_parser().parse_args(argv)
        config_path = getattr(args, "config", None)
        config = RunConfig.load(None if config_path is None else Path(config_path), getattr(args, "seed", 0))
        logger.info("Running %s with seed %d", args.command, config.seed)
        ROUTER.commands[args.command].handler(args, config)
    except KinonavError as exc:
        return dispatch(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
