"""
Module containing the command line subcommands
"""

from __future__ import annotations

import argparse
import logging
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

from kinonav.core.config import RunConfig
from kinonav.core.exceptions import UsageError
from kinonav.core.model import DEFAULT_PARAMS, SecondOrderParams
from kinonav.core.services.evaluation import evaluate
from kinonav.core.services.identification import identify_from_files
from kinonav.core.services.replay import replay
from kinonav.core.services.scans import project_scans
from kinonav.core.services.worlds import make_worlds
from kinonav.motion.sysid import DEFAULT_WINDOW, read_params
from kinonav.policies.factory import POLICY_NAMES

logger = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace, RunConfig], None]
Arguments = Callable[[argparse.ArgumentParser], None]


@dataclass(frozen=True)
class Command:
    name: str
    help: str
    arguments: Arguments
    handler: Handler


class Router:
    """
    Registry of subcommands, each declaring its arguments next to its handler
    """

    def __init__(self) -> None:
        self.commands: dict[str, Command] = {}

    def command(self, name: str, help_: str, arguments: Arguments) -> Callable[[Handler], Handler]:
        def register(handler: Handler) -> Handler:
            self.commands[name] = Command(name, help_, arguments, handler)
            return handler

        return register


ROUTER = Router()


def _output(args: argparse.Namespace) -> Path:
    if getattr(args, "output", None) is None:
        raise UsageError(f"{args.command} needs an output path (-o)")
    return Path(args.output)


def _params(path: str | None) -> SecondOrderParams:
    return DEFAULT_PARAMS if path is None else read_params(Path(path))


def _identify_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("logs", nargs="+", help="CSV logs with header t,v_cmd,w_cmd,v_meas,w_meas")
    parser.add_argument("--window", type=int, default=DEFAULT_WINDOW, help="smoothing window in samples, odd")
    parser.add_argument(
        "--adjust-damping",
        nargs="?",
        const=0.7,
        type=float,
        default=None,
        metavar="ZETA",
        help="set every damping to ZETA (default 0.7) keeping rise times",
    )


@ROUTER.command("identify", "identify the motion model from recorded logs", _identify_arguments)
def identify_command(args: argparse.Namespace, _: RunConfig) -> None:
    identify_from_files([Path(log) for log in args.logs], _output(args), args.window, args.adjust_damping)


def _evaluate_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--episodes", required=True, help="episodes file written by make-worlds")
    parser.add_argument("--model", default=None, help="model file, the default parameters when omitted")
    parser.add_argument(
        "--policy",
        default="mpc",
        help=f"comma separated policy names among {', '.join(POLICY_NAMES)}",
    )
    parser.add_argument("--noisy-pose", action="store_true", help="policies only see odometry and absolute fixes")
    parser.add_argument("--limit", type=int, default=0, help="evaluate at most this many episodes, 0 for all")
    parser.add_argument("--offset", type=int, default=0, help="skip this many episodes in id order")


@ROUTER.command("evaluate", "run policies on an episode set and report SR, SPL and SCT", _evaluate_arguments)
def evaluate_command(args: argparse.Namespace, config: RunConfig) -> None:
    if args.noisy_pose:
        config = config.model_copy(update={"mpc": config.mpc.model_copy(update={"noisy_pose": True})})
    policies = [name.strip() for name in args.policy.split(",") if name.strip()]
    if not policies:
        raise UsageError("--policy needs at least one policy name")
    evaluate(
        Path(args.episodes),
        policies,
        _output(args),
        config,
        _params(args.model),
        limit=args.limit,
        offset=args.offset,
    )


def _replay_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", default=None, help="model file, the default parameters when omitted")
    parser.add_argument("--commands", default=None, help="CSV with columns t, v_cmd and w_cmd")
    parser.add_argument("--log", default=None, help="recorded log to replay and compare against")
    parser.add_argument("--initial", nargs=3, type=float, default=(0.0, 0.0, 0.0), metavar=("X", "Y", "THETA"))


@ROUTER.command("replay", "replay a command script open loop", _replay_arguments)
def replay_command(args: argparse.Namespace, config: RunConfig) -> None:
    replay(
        _output(args),
        args.initial,
        None if args.commands is None else Path(args.commands),
        None if args.log is None else Path(args.log),
        _params(args.model),
        config.sim.physics,
    )


def _size(value: str) -> tuple[float, float]:
    width, _, height = value.lower().partition("x")
    try:
        return float(width), float(height or width)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT in metres, got {value}") from exc


def _make_worlds_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--count", type=int, default=20)
    parser.add_argument("--size", type=_size, default=(8.0, 8.0), help="WIDTHxHEIGHT in metres")
    parser.add_argument("--clutter", type=float, default=0.1, help="share of the interior covered by boxes")
    parser.add_argument("--episodes-per-world", type=int, default=1)
    parser.add_argument("--depth", action="store_true", help="also render the rig's depth frames at every start")


@ROUTER.command("make-worlds", "generate worlds and episodes", _make_worlds_arguments)
def make_worlds_command(args: argparse.Namespace, config: RunConfig) -> None:
    make_worlds(
        _output(args),
        args.count,
        config.seed,
        args.size,
        args.clutter,
        args.episodes_per_world,
        robot_radius=config.sim.robot_radius,
        depth=args.depth,
    )


def _scan_project_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--depth", nargs="+", required=True, help="depth rasters")
    parser.add_argument("--cams", default=None, help="camera rig JSON")
    parser.add_argument("--max-range", type=float, default=None)


@ROUTER.command("scan-project", "project depth rasters into 180 bin scans", _scan_project_arguments)
def scan_project_command(args: argparse.Namespace, config: RunConfig) -> None:
    project_scans(
        [Path(path) for path in args.depth],
        None if args.cams is None else Path(args.cams),
        _output(args),
        config.sim.n_bins,
        config.sim.max_range if args.max_range is None else args.max_range,
    )
