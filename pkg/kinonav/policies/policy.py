"""
This module provides the abstract base class for navigation policies. A policy picks one of the 28 discrete actions
from the observation of the previous state. The shared path following machinery lives in PathFollowingPolicy: pose
estimation (privileged or fused from the noisy channels), periodic replanning on the inflated grid, carrot selection
along the path and the stop rule near the goal.

Classes:
MpcConfig (BaseModel): tuning shared by the path following policies.
Policy (ABC): the interface the simulator drives.
PathFollowingPolicy (Policy): base class of the scripted policies.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Sequence
from typing import TYPE_CHECKING, ClassVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveFloat, PositiveInt

from kinonav.core.exceptions import BlockedPositionError, SimulationError
from kinonav.core.model import ActionSpace, MotionState, Pose, VelocityCommand
from kinonav.motion.dynamics import integrate_window
from kinonav.navigation.world import shortest_path

if TYPE_CHECKING:
    from kinonav.navigation.simulator import NavigationEnv, Observation

logger = logging.getLogger(__name__)


class MpcConfig(BaseModel):
    """
    Path following and model predictive control tuning
    """

    model_config = ConfigDict(frozen=True)

    horizon: int = Field(default=2, ge=1, le=2)
    waypoint_lookahead: PositiveFloat = 0.8
    w_dist: NonNegativeFloat = 1.0
    w_heading: NonNegativeFloat = 0.3
    w_collision: NonNegativeFloat = 1e3
    w_speed: NonNegativeFloat = 0.5
    replan_period: PositiveInt = 5
    stop_radius_ratio: PositiveFloat = 0.75
    noisy_pose: bool = False


def carrot_point(path: Sequence[tuple[float, float]], x: float, y: float, lookahead: float) -> tuple[float, float]:
    """
    The point ``lookahead`` metres further along the path than the path point closest to (x, y)
    :param path: waypoints, at least one
    :return: the carrot, the last waypoint when the path ends sooner
    """
    points = np.asarray(path, dtype=float)
    if len(points) == 1:
        return float(points[0, 0]), float(points[0, 1])
    starts, ends = points[:-1], points[1:]
    segments = ends - starts
    lengths = np.hypot(segments[:, 0], segments[:, 1])
    with np.errstate(invalid="ignore", divide="ignore"):
        fraction = np.where(
            lengths > 0,
            ((x - starts[:, 0]) * segments[:, 0] + (y - starts[:, 1]) * segments[:, 1]) / lengths**2,
            0.0,
        )
    fraction = np.clip(fraction, 0.0, 1.0)
    closest = starts + fraction[:, None] * segments
    nearest = int(np.argmin(np.hypot(closest[:, 0] - x, closest[:, 1] - y)))
    travelled = np.concatenate(([0.0], np.cumsum(lengths)))
    target = travelled[nearest] + fraction[nearest] * lengths[nearest] + lookahead
    if target >= travelled[-1]:
        return float(points[-1, 0]), float(points[-1, 1])
    segment = int(np.searchsorted(travelled, target, side="right")) - 1
    within = (target - travelled[segment]) / lengths[segment]
    carrot = starts[segment] + within * segments[segment]
    return float(carrot[0]), float(carrot[1])


def heading_error(pose: Pose, target: tuple[float, float]) -> float:
    """Signed angle to turn from the pose heading towards the target, in (-pi, pi]"""
    bearing = math.atan2(target[1] - pose.y, target[0] - pose.x)
    return float(math.remainder(bearing - pose.theta, 2.0 * math.pi))


class Policy(ABC):
    """
    Policy maps the observation of the previous state to a discrete action index
    """

    name: ClassVar[str]

    @abstractmethod
    def reset(self, env: NavigationEnv) -> None:
        """
        Prepare for a new episode
        :param env: the environment about to be reset
        :return: None
        """

    @abstractmethod
    def act(self, observation: Observation, state: MotionState) -> int:
        """
        Choose the next action
        :param observation: the observation rendered from the state the last window ended in
        :param state: the true state at the same instant, only used in privileged mode
        :return: an action index in 0..27
        """


class PathFollowingPolicy(Policy):
    """
    Follows a carrot along the grid shortest path to the goal and stops close to it
    """

    def __init__(self, config: MpcConfig | None = None) -> None:
        self.config = config or MpcConfig()
        self._env: NavigationEnv | None = None
        self._path: list[tuple[float, float]] = []
        self._steps = 0
        self._anchor: tuple[Pose, Pose] | None = None
        self._velocity = MotionState()
        self._before_prediction = MotionState()

    @property
    def env(self) -> NavigationEnv:
        if self._env is None:
            raise SimulationError("Policy used before reset")
        return self._env

    def reset(self, env: NavigationEnv) -> None:
        self._env = env
        self._steps = 0
        self._anchor = None
        self._velocity = MotionState()
        self._before_prediction = MotionState()
        self._path = shortest_path(env.grid, env.episode.start[:2], env.episode.goal, env.config.robot_radius)

    def estimate(self, observation: Observation, state: MotionState) -> MotionState:
        """
        The state the decision is based on: the true state in privileged mode, otherwise the last absolute fix
        composed with the odometry increment since that fix, carrying velocities predicted from the commands sent
        """
        if not self.config.noisy_pose:
            return state
        if observation.absloc_age == 0 or self._anchor is None:
            self._anchor = (observation.absloc_est.pose, observation.odom_est.pose)
        fix, odom_at_fix = self._anchor
        pose = fix.compose(observation.odom_est.pose.relative_to(odom_at_fix))
        if self._steps > 0 and observation.prev_action == ActionSpace.NO_ACTION:
            # the last window was a recovery manoeuvre, not the command predicted
            self._predict(self._before_prediction, self.env.config.recovery_command)
        return self._velocity.evolve(x=pose.x, y=pose.y, theta=pose.theta)

    def _predict(self, start: MotionState, cmd: VelocityCommand) -> None:
        self._before_prediction = start
        self._velocity, _ = integrate_window(start, cmd, self.env.params, self.env.config.physics)

    def _replan(self, current: MotionState) -> None:
        env = self.env
        try:
            self._path = shortest_path(env.grid, (current.x, current.y), env.episode.goal, env.config.robot_radius)
        except BlockedPositionError:
            logger.debug("Estimated position (%.3f, %.3f) is blocked, keeping the previous path", current.x, current.y)

    def act(self, observation: Observation, state: MotionState) -> int:
        current = self.estimate(observation, state)
        env = self.env
        if self._steps > 0 and self._steps % self.config.replan_period == 0:
            self._replan(current)
        self._steps += 1
        goal = env.episode.goal
        if current.pose.distance_to(*goal) < self.config.stop_radius_ratio * env.config.success_radius:
            action = ActionSpace.STOP
        else:
            carrot = carrot_point(self._path, current.x, current.y, self.config.waypoint_lookahead)
            action = self.choose(current, carrot, carrot == goal)
        if self.config.noisy_pose:
            self._predict(current, ActionSpace.to_command(action))
        return action

    @abstractmethod
    def choose(self, current: MotionState, carrot: tuple[float, float], final: bool) -> int:
        """
        Pick the action steering towards the carrot
        :param current: the estimated state
        :param carrot: the point to steer to
        :param final: whether the carrot is the goal itself
        :return: the action index
        """
