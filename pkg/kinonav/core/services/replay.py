"""
Service layer for open loop replay of command scripts
"""

from __future__ import annotations

import csv
import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from kinonav.core.exceptions import ParseError, UnsortedTimestampsError, UsageError
from kinonav.core.model import DEFAULT_PARAMS, MotionState, PhysicsConfig, Pose, SecondOrderParams, VelocityCommand
from kinonav.core.utility import format_float, normalize_angle
from kinonav.motion.dynamics import replay_open_loop
from kinonav.motion.sysid import TrajectoryLog

logger = logging.getLogger(__name__)

REPLAY_HEADER = ("t", "x", "y", "theta", "v", "w", "v_dot", "w_dot")
DRIFT_HEADER = ("t", "x_log", "y_log", "x_sim", "y_sim", "drift")

Trajectory = list[tuple[float, MotionState]]


def read_commands(path: Path) -> list[tuple[float, VelocityCommand]]:
    """
    Read a command script, a CSV with at least the columns t, v_cmd and w_cmd
    :param path: the script
    :return: (time, command) pairs
    :raises ParseError: with the offending line number
    """
    if not path.exists():
        raise ParseError(str(path), None, "file does not exist")
    commands = []
    with path.open(encoding="utf-8", mode="r", newline="") as fle:
        reader = csv.DictReader(fle)
        if reader.fieldnames is None or not {"t", "v_cmd", "w_cmd"} <= set(reader.fieldnames):
            raise ParseError(str(path), 1, "expected columns t, v_cmd and w_cmd")
        for row in reader:
            try:
                commands.append((float(row["t"]), VelocityCommand(float(row["v_cmd"]), float(row["w_cmd"]))))
            except (TypeError, ValueError) as exc:
                raise ParseError(str(path), reader.line_num, "malformed command row") from exc
    if not commands:
        raise ParseError(str(path), None, "script holds no commands")
    times = [time for time, _ in commands]
    if any(later <= earlier for earlier, later in zip(times, times[1:], strict=False)):
        raise ParseError(str(path), None, "command times must be strictly increasing")
    return commands


def commands_from_log(log: TrajectoryLog) -> list[tuple[float, VelocityCommand]]:
    """The command changes of a recorded log, each with the time it was first seen"""
    commands = []
    previous: VelocityCommand | None = None
    for time, v_cmd, w_cmd in zip(log.t, log.v_cmd, log.w_cmd, strict=True):
        command = VelocityCommand(float(v_cmd), float(w_cmd))
        if command != previous:
            commands.append((float(time), command))
            previous = command
    return commands


def dead_reckon(log: TrajectoryLog, initial: Pose) -> np.ndarray:
    """
    Integrate the measured velocities of a log into positions
    :return: array of shape (len(log), 2)
    """
    dt = np.diff(log.t)
    theta = initial.theta + np.concatenate(([0.0], np.cumsum(log.w_meas[:-1] * dt)))
    x = initial.x + np.concatenate(([0.0], np.cumsum(log.v_meas[:-1] * np.cos(theta[:-1]) * dt)))
    y = initial.y + np.concatenate(([0.0], np.cumsum(log.v_meas[:-1] * np.sin(theta[:-1]) * dt)))
    return np.column_stack((x, y))


def write_trajectory(path: Path, trajectory: Trajectory) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open(encoding="utf-8", mode="w", newline="") as fle:
        writer = csv.writer(fle, lineterminator="\n")
        writer.writerow(REPLAY_HEADER)
        for time, state in trajectory:
            writer.writerow([format_float(time), *(format_float(value) for value in state.as_tuple())])


def write_drift(path: Path, log: TrajectoryLog, recorded: np.ndarray, trajectory: Trajectory) -> float:
    """
    Per sample distance between the dead reckoned log and the replayed trajectory, interpolated at log times
    :return: the final drift in metres
    """
    times = np.array([time for time, _ in trajectory])
    x_sim = np.interp(log.t, times, [state.x for _, state in trajectory])
    y_sim = np.interp(log.t, times, [state.y for _, state in trajectory])
    drift = np.hypot(x_sim - recorded[:, 0], y_sim - recorded[:, 1])
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open(encoding="utf-8", mode="w", newline="") as fle:
        writer = csv.writer(fle, lineterminator="\n")
        writer.writerow(DRIFT_HEADER)
        for row in zip(log.t, recorded[:, 0], recorded[:, 1], x_sim, y_sim, drift, strict=True):
            writer.writerow([format_float(value) for value in row])
    return float(drift[-1])


def replay(
    output: Path,
    initial: Sequence[float] = (0.0, 0.0, 0.0),
    commands_path: Path | None = None,
    log_path: Path | None = None,
    params: SecondOrderParams = DEFAULT_PARAMS,
    physics: PhysicsConfig | None = None,
) -> Trajectory:
    """
    Replay a command script open loop from rest and write the trajectory. With a recorded log, the script defaults to
    the log's commands and the drift between the log's dead reckoning and the replay is written next to the trace.
    :param output: the trace file; the drift file gets a ``-drift`` suffix
    :param initial: starting pose (x, y, theta)
    :param commands_path: the command script
    :param log_path: a recorded identification log
    :param params: the motion model
    :param physics: loop frequencies
    :return: the replayed trajectory
    """
    if len(initial) != 3:
        raise UsageError("initial pose must be x y theta")
    physics = physics or PhysicsConfig()
    start = Pose(float(initial[0]), float(initial[1]), normalize_angle(float(initial[2])))
    log = TrajectoryLog.read_csv(log_path) if log_path is not None else None
    if commands_path is not None:
        commands = read_commands(commands_path)
    elif log is not None:
        commands = commands_from_log(log)
    else:
        raise UsageError("replay needs a command script or a recorded log")
    try:
        trajectory = replay_open_loop(MotionState.at_rest(start), commands, params, physics)
    except UnsortedTimestampsError as exc:
        raise ParseError(str(commands_path or log_path), None, str(exc)) from exc
    write_trajectory(output, trajectory)
    logger.info("Replayed %s commands into %s states, written to %s", len(commands), len(trajectory), output)
    if log is not None:
        drift_path = output.with_name(f"{output.stem}-drift{output.suffix or '.csv'}")
        final = write_drift(drift_path, log, dead_reckon(log, start), trajectory)
        logger.info("Final drift against %s: %.4f m", log_path, final)
    return trajectory
