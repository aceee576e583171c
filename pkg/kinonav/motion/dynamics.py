"""
Asymmetric second order motion model and its fixed step integrator.

Each axis (linear and angular) tracks its commanded velocity through

    acc' = f^2 * (target - vel) - 2 * zeta * f * acc

with a separate (f, zeta, acc_max) triple for the acceleration and deceleration regimes. One kernel operates on numpy
arrays so the scalar integrator and the batched rollouts used by the planner share the same arithmetic.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from kinonav.core.exceptions import InvalidParamsError, UnsortedTimestampsError
from kinonav.core.model import AxisParams, MotionState, PhysicsConfig, SecondOrderParams, VelocityCommand
from kinonav.core.utility import normalize_angle, require_finite

logger = logging.getLogger(__name__)

REST_TOLERANCE = 1e-6

# Called after every substep with (previous, proposed) and returns the state to keep
SubstepConstraint = Callable[[MotionState, MotionState], MotionState]

StateColumns = tuple[
    NDArray[np.float64],
    NDArray[np.float64],
    NDArray[np.float64],
    NDArray[np.float64],
    NDArray[np.float64],
    NDArray[np.float64],
    NDArray[np.float64],
]


def select_regime(delta: float, vel: float, params: AxisParams) -> tuple[float, float, float]:
    """
    Pick the response regime of one axis. Acceleration when the error pushes the velocity further from zero, or
    when starting from rest with a non zero error; deceleration otherwise.
    :param delta: commanded minus current velocity
    :param vel: current velocity
    :param params: the axis parameters
    :return: (f, zeta, acc_max) of the active regime
    """
    if delta * vel > 0 or (abs(vel) < REST_TOLERANCE and delta != 0):
        return params.f_up, params.zeta_up, params.acc_up_max
    return params.f_down, params.zeta_down, params.acc_down_max


def _axis_update(
    delta: NDArray[np.float64],
    vel: NDArray[np.float64],
    acc: NDArray[np.float64],
    params: AxisParams,
    dt: float,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    up = (delta * vel > 0) | ((np.abs(vel) < REST_TOLERANCE) & (delta != 0))
    f = np.where(up, params.f_up, params.f_down)
    zeta = np.where(up, params.zeta_up, params.zeta_down)
    acc_max = np.where(up, params.acc_up_max, params.acc_down_max)
    new_acc = np.clip(acc + dt * (f * f * delta - 2.0 * zeta * f * acc), -acc_max, acc_max)
    new_vel = np.clip(vel + dt * new_acc, params.vel_min, params.vel_max)
    return new_vel, new_acc


def substep_arrays(
    columns: StateColumns,
    v_star: ArrayLike,
    w_star: ArrayLike,
    params: SecondOrderParams,
    dt: float,
) -> StateColumns:
    """
    Advance any number of states by one physics substep. States are given column wise
    (x, y, theta, v, w, v_dot, w_dot), each an array of the same shape, and commands broadcast against them.
    :return: the new state columns
    """
    x, y, theta, v, w, v_dot, w_dot = columns
    v, v_dot = _axis_update(np.asarray(v_star) - v, v, v_dot, params.linear, dt)
    w, w_dot = _axis_update(np.asarray(w_star) - w, w, w_dot, params.angular, dt)
    theta = theta + dt * w
    x = x + dt * v * np.cos(theta)
    y = y + dt * v * np.sin(theta)
    theta = np.asarray(normalize_angle(theta), dtype=np.float64)
    return (x, y, theta, v, w, v_dot, w_dot)


@require_finite
def substep(state: MotionState, cmd: VelocityCommand, params: SecondOrderParams, dt: float) -> MotionState:
    """
    Advance a state by one physics substep: regime selection, acceleration update and clip, velocity update with the
    new acceleration and clip, then pose integration with the new velocities.
    :param state: the current state
    :param cmd: the command held over the substep
    :param params: identified model
    :param dt: substep length in seconds
    :return: the new state
    :raises InvalidStateError: when state or command carry non finite values
    """
    if not dt > 0:
        raise InvalidParamsError(f"dt must be positive, got {dt}")
    columns = tuple(np.float64(value) for value in state.as_tuple())
    new = substep_arrays(columns, cmd.v_star, cmd.w_star, params, dt)  # type: ignore[arg-type]
    return MotionState(*(float(value) for value in new))


def integrate_window(
    state: MotionState,
    cmd: VelocityCommand,
    params: SecondOrderParams,
    config: PhysicsConfig,
    constraint: SubstepConstraint | None = None,
) -> tuple[MotionState, list[MotionState]]:
    """
    Run the fast physics loop between two decisions
    :param state: state at the start of the window
    :param cmd: command held for the whole window
    :param params: identified model
    :param config: the loop frequencies
    :param constraint: optional per substep hook, e.g. collision handling
    :return: (final state, trace of every substep state)
    """
    trace = []
    current = state
    for _ in range(config.substeps_per_step):
        proposed = substep(current, cmd, params, config.dt)
        current = constraint(current, proposed) if constraint is not None else proposed
        trace.append(current)
    return current, trace


def replay_open_loop(
    initial: MotionState,
    commands: Sequence[tuple[float, VelocityCommand]],
    params: SecondOrderParams,
    config: PhysicsConfig,
) -> list[tuple[float, MotionState]]:
    """
    Replay a timestamped command script with zero order hold. Each command is held until the next timestamp, the last
    one for a single decision period.
    :param initial: the state at the first timestamp
    :param commands: (time, command) pairs, strictly increasing in time
    :param params: identified model
    :param config: the loop frequencies, the physics rate sets the substep
    :return: (time, state) pairs at substep resolution, starting with the initial state
    :raises UnsortedTimestampsError: when timestamps are not strictly increasing
    """
    times = [time for time, _ in commands]
    if any(later <= earlier for earlier, later in zip(times, times[1:], strict=False)):
        raise UnsortedTimestampsError("Command timestamps must be strictly increasing")
    start = times[0] if times else 0.0
    trajectory = [(start, initial)]
    state = initial
    for index, (time, cmd) in enumerate(commands):
        end = times[index + 1] if index + 1 < len(times) else time + 1.0 / config.f_decision
        count = round((end - time) / config.dt)
        for step in range(1, count + 1):
            state = substep(state, cmd, params, config.dt)
            trajectory.append((time + step * config.dt, state))
    logger.debug("Replayed %s commands into %s states", len(commands), len(trajectory))
    return trajectory


def rollout_batch(
    state: MotionState,
    commands: ArrayLike,
    params: SecondOrderParams,
    config: PhysicsConfig,
) -> NDArray[np.float64]:
    """
    Roll out many command sequences from one state, each command held for one decision window
    :param state: the common initial state
    :param commands: array of shape (N, horizon, 2) holding (v*, w*) per window
    :param params: identified model
    :param config: the loop frequencies
    :return: array of shape (N, horizon * substeps, 7) with every substep state
    """
    sequences = np.asarray(commands, dtype=np.float64)
    if sequences.ndim != 3 or sequences.shape[2] != 2:
        raise InvalidParamsError(f"commands must have shape (N, horizon, 2), got {sequences.shape}")
    count, horizon, _ = sequences.shape
    substeps = config.substeps_per_step
    columns: StateColumns = tuple(np.full(count, value) for value in state.as_tuple())  # type: ignore[assignment]
    out = np.empty((count, horizon * substeps, 7))
    for window in range(horizon):
        for step in range(substeps):
            columns = substep_arrays(columns, sequences[:, window, 0], sequences[:, window, 1], params, config.dt)
            out[:, window * substeps + step] = np.stack(columns, axis=-1)
    return out
