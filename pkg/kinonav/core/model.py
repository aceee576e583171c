"""
This module contains the value types shared across kinonav: robot poses and motion states, velocity commands, the
identified second order model parameters, the two-frequency physics configuration, and the episode records that
flow between the world, the simulator and the metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import ClassVar, Self

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, computed_field, model_validator

from kinonav.core.exceptions import InvalidActionError, InvalidParamsError
from kinonav.core.utility import format_float, normalize_angle


@dataclass(frozen=True, slots=True)
class Pose:
    """Planar pose in metres and radians"""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)

    def distance_to(self, x: float, y: float) -> float:
        return math.hypot(x - self.x, y - self.y)

    def relative_to(self, origin: Pose) -> PoseDelta:
        """
        Express this pose in the frame of ``origin``
        :param origin: the reference pose
        :return: the delta that composes origin into this pose
        """
        dx = self.x - origin.x
        dy = self.y - origin.y
        cos_o = math.cos(origin.theta)
        sin_o = math.sin(origin.theta)
        return PoseDelta(
            forward=cos_o * dx + sin_o * dy,
            lateral=-sin_o * dx + cos_o * dy,
            dtheta=normalize_angle(self.theta - origin.theta),
        )

    def compose(self, delta: PoseDelta) -> Pose:
        """
        Apply a robot frame delta to this pose
        :param delta: motion expressed in this pose's frame
        :return: the resulting pose
        """
        cos_t = math.cos(self.theta)
        sin_t = math.sin(self.theta)
        return Pose(
            x=self.x + cos_t * delta.forward - sin_t * delta.lateral,
            y=self.y + sin_t * delta.forward + cos_t * delta.lateral,
            theta=normalize_angle(self.theta + delta.dtheta),
        )


@dataclass(frozen=True, slots=True)
class PoseDelta:
    """Rigid planar motion expressed in the frame it starts from"""

    forward: float = 0.0
    lateral: float = 0.0
    dtheta: float = 0.0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.forward, self.lateral, self.dtheta)


@dataclass(frozen=True, slots=True)
class MotionState:
    """
    The extended robot state: pose, velocities and accelerations. theta is kept in (-pi, pi].
    """

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0
    v: float = 0.0
    w: float = 0.0
    v_dot: float = 0.0
    w_dot: float = 0.0

    def as_tuple(self) -> tuple[float, float, float, float, float, float, float]:
        return (self.x, self.y, self.theta, self.v, self.w, self.v_dot, self.w_dot)

    @property
    def pose(self) -> Pose:
        return Pose(self.x, self.y, self.theta)

    @staticmethod
    def at_rest(pose: Pose) -> MotionState:
        return MotionState(x=pose.x, y=pose.y, theta=normalize_angle(pose.theta))

    def evolve(self, **changes: float) -> MotionState:
        return replace(self, **changes)


@dataclass(frozen=True, slots=True)
class VelocityCommand:
    """Target linear (m/s) and angular (rad/s) velocity held over a decision period"""

    v_star: float = 0.0
    w_star: float = 0.0

    def as_tuple(self) -> tuple[float, float]:
        return (self.v_star, self.w_star)

    @property
    def is_stop(self) -> bool:
        return self.v_star == 0.0 and self.w_star == 0.0


LINEAR_CHOICES = (0.0, 0.3, 0.6, 1.0)
ANGULAR_CHOICES = (-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0)


class ActionSpace:
    """
    The 28 discrete velocity commands: linear choices (outer, ascending) times angular choices (inner, ascending),
    index = linear_index * 7 + angular_index
    """

    COMMANDS: ClassVar[tuple[VelocityCommand, ...]] = tuple(
        VelocityCommand(v_star, w_star) for v_star in LINEAR_CHOICES for w_star in ANGULAR_CHOICES
    )
    SIZE: ClassVar[int] = len(LINEAR_CHOICES) * len(ANGULAR_CHOICES)
    STOP: ClassVar[int] = 3
    NO_ACTION: ClassVar[int] = -1

    @staticmethod
    def to_command(index: int) -> VelocityCommand:
        if not 0 <= index < ActionSpace.SIZE:
            raise InvalidActionError(f"Action index {index} outside 0..{ActionSpace.SIZE - 1}")
        return ActionSpace.COMMANDS[index]

    @staticmethod
    def to_action(cmd: VelocityCommand) -> int:
        try:
            return ActionSpace.COMMANDS.index(cmd)
        except ValueError as exc:
            raise InvalidActionError(f"{cmd} is not a discrete action") from exc


class AxisParams(BaseModel):
    """
    Asymmetric second order response of one axis: natural frequency (rad/s) and damping for the acceleration (up)
    and deceleration (down) regimes, plus the identified velocity and acceleration saturations.
    """

    model_config = ConfigDict(frozen=True)

    f_up: PositiveFloat
    zeta_up: PositiveFloat
    f_down: PositiveFloat
    zeta_down: PositiveFloat
    vel_max: float
    vel_min: float
    acc_up_max: PositiveFloat
    acc_down_max: PositiveFloat

    @model_validator(mode="after")
    def _check_velocity_bounds(self) -> Self:
        if not self.vel_min <= 0.0 <= self.vel_max:
            raise ValueError(f"velocity bounds must bracket zero, got [{self.vel_min}, {self.vel_max}]")
        return self


_AXIS_KEYS = {
    "f_up": "f_up",
    "zeta_up": "zeta_up",
    "f_down": "f_down",
    "zeta_down": "zeta_down",
    "v_max": "vel_max",
    "v_min": "vel_min",
    "acc_up_max": "acc_up_max",
    "acc_down_max": "acc_down_max",
}
_AXIS_PREFIXES = {"lin": "linear", "ang": "angular"}


class SecondOrderParams(BaseModel):
    """The 8 identified model parameters plus saturation limits, one AxisParams per axis"""

    model_config = ConfigDict(frozen=True)

    linear: AxisParams
    angular: AxisParams

    def to_document(self) -> list[str]:
        """
        Render as the flat ``name = value`` document (``lin.f_up = 3.0`` ...)
        :return: the document lines, without trailing newlines
        """
        lines = []
        for prefix, axis_name in _AXIS_PREFIXES.items():
            axis = getattr(self, axis_name)
            lines.extend(
                f"{prefix}.{key} = {format_float(getattr(axis, field))}" for key, field in _AXIS_KEYS.items()
            )
        return lines

    @staticmethod
    def from_document(values: dict[str, str]) -> SecondOrderParams:
        """
        Build the parameters from a parsed key-value document. ``meta.*`` keys are ignored.
        :param values: mapping produced by parse_key_value_lines
        :return: the validated parameters
        :raises InvalidParamsError: on missing, unknown or invalid keys
        """
        axes: dict[str, dict[str, float]] = {"linear": {}, "angular": {}}
        for name, raw in values.items():
            prefix, _, key = name.partition(".")
            if prefix == "meta":
                continue
            if prefix not in _AXIS_PREFIXES or key not in _AXIS_KEYS:
                raise InvalidParamsError(f"Unknown parameter key {name}")
            try:
                axes[_AXIS_PREFIXES[prefix]][_AXIS_KEYS[key]] = float(raw)
            except ValueError as exc:
                raise InvalidParamsError(f"Parameter {name} is not a number: {raw!r}") from exc
        try:
            return SecondOrderParams.model_validate(axes)
        except ValueError as exc:
            raise InvalidParamsError(str(exc)) from exc


DEFAULT_PARAMS = SecondOrderParams(
    linear=AxisParams(
        f_up=3.0,
        zeta_up=0.7,
        f_down=4.0,
        zeta_down=0.7,
        vel_max=1.0,
        vel_min=0.0,
        acc_up_max=2.0,
        acc_down_max=2.0,
    ),
    angular=AxisParams(
        f_up=5.0,
        zeta_up=0.7,
        f_down=6.0,
        zeta_down=0.7,
        vel_max=3.0,
        vel_min=-3.0,
        acc_up_max=8.0,
        acc_down_max=8.0,
    ),
)


class PhysicsConfig(BaseModel):
    """Decision (slow) and physics (fast) loop frequencies"""

    model_config = ConfigDict(frozen=True)

    f_decision: PositiveFloat = 3.0
    f_physics: PositiveFloat = 30.0

    @model_validator(mode="after")
    def _check_frequencies(self) -> Self:
        if self.f_physics < self.f_decision:
            raise ValueError("f_physics must be at least f_decision")
        return self

    @computed_field  # type: ignore[prop-decorator]
    @property
    def substeps_per_step(self) -> int:
        # rounding guards against 30/3 landing a hair above 10
        return max(1, math.ceil(round(self.f_physics / self.f_decision, 9)))

    @computed_field  # type: ignore[prop-decorator]
    @property
    def dt(self) -> float:
        return 1.0 / self.f_physics


class Episode(BaseModel):
    """A navigation task on one grid file"""

    model_config = ConfigDict(frozen=True)

    id: str
    grid: str
    start: tuple[float, float, float]
    goal: tuple[float, float]
    geodesic_start_goal: float | None = None

    @property
    def start_pose(self) -> Pose:
        return Pose(*self.start)


class EpisodeResult(BaseModel):
    """
    Per-episode outcome feeding SR, SPL and SCT

    ``shortest_length`` is positive for every episode that was simulated with its start away from the goal. Zero
    marks either a result recorded without a simulation (an infeasible world, see ``failed_result``) or an episode
    starting on its goal, and in both cases ``t_star`` is zero as well.
    """

    episode_id: str = ""
    policy: str = ""
    success: bool
    path_length: float = Field(ge=0.0)
    shortest_length: float = Field(ge=0.0)
    completion_time: float = Field(ge=0.0)
    t_star: float = Field(ge=0.0)
    collisions: int = Field(ge=0)

    @model_validator(mode="after")
    def _check_lower_bounds(self) -> Self:
        if (self.shortest_length == 0.0) != (self.t_star == 0.0):
            raise ValueError(
                f"shortest_length and t_star must vanish together, got {self.shortest_length} and {self.t_star}"
            )
        return self
