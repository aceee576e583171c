"""
The slow decision loop: each discrete action is integrated through one physics window with collision handling, then
reward, success, localization noise and recovery are updated. The observation returned by a step is rendered from
the state the window ended in and drives the next decision.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveFloat, PositiveInt

from kinonav.core.exceptions import EpisodeDoneError
from kinonav.core.model import (
    DEFAULT_PARAMS,
    ActionSpace,
    Episode,
    EpisodeResult,
    MotionState,
    PhysicsConfig,
    Pose,
    SecondOrderParams,
    VelocityCommand,
)
from kinonav.core.utility import derive_rng
from kinonav.motion.dynamics import SubstepConstraint, integrate_window
from kinonav.motion.noise import (
    AbsLocNoiseParams,
    AbsoluteLocalizer,
    OdometryIntegrator,
    OdomNoiseParams,
    PoseEstimate,
)
from kinonav.navigation.metrics import time_lower_bound
from kinonav.navigation.world import (
    DEFAULT_MAX_RANGE,
    DEFAULT_ROBOT_RADIUS,
    GeodesicField,
    OccupancyGrid,
    collision_check,
    path_length,
    shortest_path,
    simulate_lidar,
)

if TYPE_CHECKING:
    from kinonav.policies.policy import Policy

logger = logging.getLogger(__name__)

RECOVERY_DISPLACEMENT = 0.05

PolarGoal = tuple[float, float, float]


def action_to_command(index: int) -> VelocityCommand:
    """
    The command of a discrete action, linear choice outer and angular choice inner
    :raises InvalidActionError: for an index outside 0..27
    """
    return ActionSpace.to_command(index)


def command_to_action(cmd: VelocityCommand) -> int:
    """Inverse of action_to_command"""
    return ActionSpace.to_action(cmd)


class SimConfig(BaseModel):
    """Everything the decision loop needs besides the world, the episode and the motion model"""

    model_config = ConfigDict(frozen=True)

    physics: PhysicsConfig = PhysicsConfig()
    success_radius: PositiveFloat = 0.2
    success_speed_eps: tuple[PositiveFloat, PositiveFloat] = (0.02, 0.05)
    success_hold: PositiveInt = 3
    reward_R: PositiveFloat = 2.5  # noqa: N815
    slack_lambda: NonNegativeFloat = 0.01
    collision_C: NonNegativeFloat = 0.1  # noqa: N815
    max_steps: PositiveInt = 500
    recovery_block_time: PositiveFloat = 5.0
    recovery_speed: float = Field(default=-0.2, lt=0.0)
    recovery_duration: PositiveFloat = 2.0
    robot_radius: PositiveFloat = DEFAULT_ROBOT_RADIUS
    n_bins: PositiveInt = 180
    max_range: PositiveFloat = DEFAULT_MAX_RANGE
    render_scan: bool = True
    odom: OdomNoiseParams = OdomNoiseParams()
    absloc: AbsLocNoiseParams = AbsLocNoiseParams()

    @property
    def recovery_command(self) -> VelocityCommand:
        return VelocityCommand(self.recovery_speed, 0.0)

    @property
    def block_steps(self) -> int:
        return max(1, round(self.recovery_block_time * self.physics.f_decision))

    @property
    def recovery_steps(self) -> int:
        return max(1, round(self.recovery_duration * self.physics.f_decision))


def polar_goal(reference: Pose, goal: tuple[float, float]) -> PolarGoal:
    """
    Goal as (distance, cos bearing, sin bearing) in the frame of ``reference``
    """
    delta = Pose(goal[0], goal[1], reference.theta).relative_to(reference)
    rho = math.hypot(delta.forward, delta.lateral)
    if rho == 0.0:
        return (0.0, 1.0, 0.0)
    return (rho, delta.forward / rho, delta.lateral / rho)


@dataclass(frozen=True, eq=False)
class Observation:
    """
    What a policy sees before a decision. The three goal encodings refer to the same goal point;
    ``gt_goal_compass`` is exact and only meant as a supervision channel.
    """

    scan: NDArray[np.float64]
    odom_est: PoseEstimate
    absloc_est: PoseEstimate
    absloc_age: int
    goal_static: PolarGoal
    goal_dynamic: PolarGoal
    goal_absolute: tuple[float, float]
    prev_action: int
    gt_goal_compass: PolarGoal


@dataclass(frozen=True, slots=True)
class StepInfo:
    collided: bool
    success: bool
    geodesic: float
    pose: Pose
    time: float
    action: int
    command: VelocityCommand


@dataclass(frozen=True, eq=False)
class StepOutcome:
    observation: Observation
    reward: float
    done: bool
    info: StepInfo


@dataclass(frozen=True, slots=True)
class TraceRow:
    """One decision step of an episode; row 0 holds the initial state"""

    t: float
    x: float
    y: float
    theta: float
    v: float
    w: float
    action: int
    reward: float
    collided: bool
    v_cmd: float
    w_cmd: float


TRACE_HEADER = ("t", "x", "y", "theta", "v", "w", "action", "reward", "collided", "v_cmd", "w_cmd")


def compute_reward(config: SimConfig, success: bool, geo_prev: float, geo_now: float, collided: bool) -> float:
    """
    Success bonus, plus the geodesic progress made over the step, minus the slack cost and the collision penalty
    """
    return (
        config.reward_R * float(success)
        + (geo_prev - geo_now)
        - config.slack_lambda
        - config.collision_C * float(collided)
    )


class RecoveryMonitor:
    """
    Watches the trailing blocked window: when the robot has collided within it and moved less than a few
    centimetres over it, a backward manoeuvre is queued and the window restarts.
    """

    def __init__(self, config: SimConfig) -> None:
        self._config = config
        self._positions: deque[tuple[float, float]] = deque(maxlen=config.block_steps + 1)
        self._collisions: deque[bool] = deque(maxlen=config.block_steps)

    def reset(self, pose: Pose) -> None:
        self._positions.clear()
        self._collisions.clear()
        self._positions.append((pose.x, pose.y))

    def update(self, pose: Pose, collided: bool) -> list[VelocityCommand] | None:
        """
        Record one decision step
        :return: the forced command sequence when a recovery is due, otherwise None
        """
        self._positions.append((pose.x, pose.y))
        self._collisions.append(collided)
        if len(self._positions) < self._positions.maxlen or not any(self._collisions):  # type: ignore[operator]
            return None
        oldest = np.asarray(self._positions[0])
        displacement = float(np.max(np.hypot(*(np.asarray(self._positions) - oldest).T)))
        if displacement >= RECOVERY_DISPLACEMENT:
            return None
        self.reset(pose)
        return [self._config.recovery_command] * self._config.recovery_steps


class NavigationEnv:
    """
    One episode of point goal navigation in a static grid world
    """

    def __init__(
        self,
        grid: OccupancyGrid,
        episode: Episode,
        config: SimConfig | None = None,
        params: SecondOrderParams = DEFAULT_PARAMS,
        seed: int = 0,
    ) -> None:
        self.grid = grid
        self.episode = episode
        self.config = config or SimConfig()
        self.params = params
        self.seed = seed
        self._field = GeodesicField(grid, episode.goal, self.config.robot_radius)
        self._monitor = RecoveryMonitor(self.config)
        self._forced: deque[VelocityCommand] = deque()
        self.state = MotionState.at_rest(episode.start_pose)
        self.steps = 0
        self.done = False
        self.success = False
        self.collisions = 0
        self.path_length = 0.0
        self._commands: deque[VelocityCommand] = deque(maxlen=self.config.success_hold)
        self._geodesic = 0.0
        self._prev_action = ActionSpace.NO_ACTION
        self._odometry, self._localizer = self._noise_models()

    def _noise_models(self) -> tuple[OdometryIntegrator, AbsoluteLocalizer]:
        return (
            OdometryIntegrator(self.config.odom, derive_rng(self.seed, "noise", self.episode.id, "odometry")),
            AbsoluteLocalizer(self.config.absloc, derive_rng(self.seed, "noise", self.episode.id, "absloc")),
        )

    @property
    def time(self) -> float:
        return self.steps / self.config.physics.f_decision

    @property
    def goal_distance(self) -> float:
        return self.state.pose.distance_to(*self.episode.goal)

    def reset(self) -> Observation:
        """
        Put the robot at rest on the start pose and take the first absolute fix
        :return: the observation for the first decision
        """
        start = self.episode.start_pose
        self.state = MotionState.at_rest(start)
        self.steps = 0
        self.done = False
        self.success = False
        self.collisions = 0
        self.path_length = 0.0
        self._commands.clear()
        self._forced.clear()
        self._prev_action = ActionSpace.NO_ACTION
        self._odometry, self._localizer = self._noise_models()
        self._localizer.reset(start)
        self._monitor.reset(start)
        self._geodesic = self._field.distance(start.x, start.y)
        return self.observe()

    def observe(self) -> Observation:
        """Render the observation of the current state"""
        pose = self.state.pose
        config = self.config
        scan = (
            simulate_lidar(self.grid, pose, config.n_bins, config.max_range)
            if config.render_scan
            else np.empty(0)
        )
        absloc = self._localizer.estimate
        return Observation(
            scan=scan,
            odom_est=self._odometry.estimate,
            absloc_est=absloc,
            absloc_age=self._localizer.age,
            goal_static=polar_goal(self.episode.start_pose, self.episode.goal),
            goal_dynamic=polar_goal(absloc.pose, self.episode.goal),
            goal_absolute=self.episode.goal,
            prev_action=self._prev_action,
            gt_goal_compass=polar_goal(pose, self.episode.goal),
        )

    def check_recovery(self) -> list[VelocityCommand] | None:
        """
        The forced commands still queued by the recovery monitor, None when the policy is in control
        """
        return list(self._forced) if self._forced else None

    def _collision_hook(self) -> tuple[list[bool], SubstepConstraint]:
        flags: list[bool] = []

        def constraint(previous: MotionState, proposed: MotionState) -> MotionState:
            if collision_check(self.grid, proposed.pose, self.config.robot_radius):
                flags.append(True)
                return proposed.evolve(x=previous.x, y=previous.y, v=0.0, v_dot=0.0)
            self.path_length += math.hypot(proposed.x - previous.x, proposed.y - previous.y)
            return proposed

        return flags, constraint

    def step(self, action: int) -> StepOutcome:
        """
        Apply one decision
        :param action: discrete action index, ignored while a recovery manoeuvre is running
        :return: the outcome, carrying the observation for the next decision
        :raises EpisodeDoneError: when the episode already terminated
        """
        if self.done:
            raise EpisodeDoneError(f"Episode {self.episode.id} is done")
        if self._forced:
            cmd = self._forced.popleft()
            applied = ActionSpace.NO_ACTION
        else:
            cmd = action_to_command(action)
            applied = action
        before = self.state
        flags, constraint = self._collision_hook()
        self.state, _ = integrate_window(before, cmd, self.params, self.config.physics, constraint)
        collided = bool(flags)
        self.collisions += int(collided)

        self._odometry.advance(self.state.pose.relative_to(before.pose))
        self._localizer.advance(self.state.pose)

        geo_prev = self._geodesic
        geo_now = self._field.distance(self.state.x, self.state.y)
        if math.isinf(geo_now):
            logger.debug("No geodesic estimate at (%.3f, %.3f), keeping the previous one", self.state.x, self.state.y)
            geo_now = geo_prev
        self._geodesic = geo_now

        self._commands.append(cmd)
        eps_v, eps_w = self.config.success_speed_eps
        self.success = (
            self.goal_distance < self.config.success_radius
            and len(self._commands) == self.config.success_hold
            and all(command.is_stop for command in self._commands)
            and abs(self.state.v) < eps_v
            and abs(self.state.w) < eps_w
        )
        reward = compute_reward(self.config, self.success, geo_prev, geo_now, collided)

        forced = self._monitor.update(self.state.pose, collided)
        if forced is not None and not self._forced:
            logger.warning("Episode %s blocked, reversing for %s steps", self.episode.id, len(forced))
            self._forced.extend(forced)

        self.steps += 1
        self._prev_action = applied
        self.done = self.success or self.steps >= self.config.max_steps
        info = StepInfo(collided, self.success, geo_now, self.state.pose, self.time, applied, cmd)
        return StepOutcome(self.observe(), reward, self.done, info)


def _trace_row(
    t: float,
    state: MotionState,
    action: int,
    reward: float,
    collided: bool,
    cmd: VelocityCommand,
) -> TraceRow:
    return TraceRow(t, state.x, state.y, state.theta, state.v, state.w, action, reward, collided, *cmd.as_tuple())


def run_episode(
    episode: Episode,
    grid: OccupancyGrid,
    policy: Policy,
    config: SimConfig | None = None,
    params: SecondOrderParams = DEFAULT_PARAMS,
    seed: int = 0,
) -> tuple[EpisodeResult, list[TraceRow]]:
    """
    Run a policy on an episode until success or the step limit
    :param episode: the task
    :param grid: the world the episode refers to
    :param policy: the controller
    :param config: simulator configuration
    :param params: the motion model
    :param seed: master seed, the noise streams are keyed by the episode id
    :return: the result and one trace row per decision
    :raises UnreachableGoalError: when the goal cannot be reached from the start
    """
    config = config or SimConfig()
    waypoints = shortest_path(grid, episode.start[:2], episode.goal, config.robot_radius)
    env = NavigationEnv(grid, episode, config, params, seed)
    policy.reset(env)
    observation = env.reset()
    trace = [_trace_row(0.0, env.state, ActionSpace.NO_ACTION, 0.0, False, VelocityCommand())]
    while not env.done:
        outcome = env.step(policy.act(observation, env.state))
        observation = outcome.observation
        info = outcome.info
        trace.append(_trace_row(info.time, env.state, info.action, outcome.reward, info.collided, info.command))
    result = EpisodeResult(
        episode_id=episode.id,
        policy=policy.name,
        success=env.success,
        path_length=env.path_length,
        shortest_length=path_length(waypoints),
        completion_time=env.time,
        t_star=time_lower_bound(waypoints, params),
        collisions=env.collisions,
    )
    logger.info(
        "Episode %s with %s: success=%s steps=%s collisions=%s",
        episode.id,
        policy.name,
        result.success,
        env.steps,
        result.collisions,
    )
    return result, trace
