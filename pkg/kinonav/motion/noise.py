"""
Localization noise: drifting odometry and absolute pose fixes arriving at an irregular period.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Self

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from kinonav.core.model import Pose, PoseDelta
from kinonav.core.utility import normalize_angle

logger = logging.getLogger(__name__)


class OdomNoiseParams(BaseModel):
    """
    Gaussian noise on (forward step, heading change) added at every decision step
    """

    model_config = ConfigDict(frozen=True)

    mean: tuple[float, float] = (0.01, 0.0)
    cov: tuple[tuple[float, float], tuple[float, float]] = ((1e-4, 1e-4), (1e-4, 1e-3))

    @field_validator("cov")
    @classmethod
    def _check_psd(
        cls,
        value: tuple[tuple[float, float], tuple[float, float]],
    ) -> tuple[tuple[float, float], tuple[float, float]]:
        matrix = np.asarray(value, dtype=float)
        if not np.allclose(matrix, matrix.T):
            raise ValueError("odometry covariance must be symmetric")
        if np.linalg.eigvalsh(matrix).min() < -1e-12:
            raise ValueError("odometry covariance must be positive semi-definite")
        return value


class AbsLocNoiseParams(BaseModel):
    """
    Independent Gaussian noise on absolute fixes and the inclusive range of steps between two fixes
    """

    model_config = ConfigDict(frozen=True)

    sigma: tuple[float, float, float] = (float(np.sqrt(0.03)), float(np.sqrt(0.03)), float(np.sqrt(0.05)))
    period_lo: int = Field(default=8, ge=1)
    period_hi: int = Field(default=12, ge=1)

    @field_validator("sigma")
    @classmethod
    def _check_sigma(cls, value: tuple[float, float, float]) -> tuple[float, float, float]:
        if min(value) < 0:
            raise ValueError("standard deviations must be non negative")
        return value

    @model_validator(mode="after")
    def _check_period(self) -> Self:
        if self.period_lo > self.period_hi:
            raise ValueError("period_lo must not exceed period_hi")
        return self


@dataclass(frozen=True, slots=True)
class PoseEstimate:
    """An estimated pose; ``valid`` is false until a first estimate exists"""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0
    valid: bool = True

    @property
    def pose(self) -> Pose:
        return Pose(self.x, self.y, self.theta)

    @staticmethod
    def from_pose(pose: Pose) -> PoseEstimate:
        return PoseEstimate(pose.x, pose.y, normalize_angle(pose.theta), True)


def sample_odometry_noise(params: OdomNoiseParams, rng: np.random.Generator, size: int | None = None) -> NDArray:
    """
    Draw (eps_forward, eps_theta) pairs
    :param params: odometry noise parameters
    :param rng: the random stream
    :param size: number of pairs, None for a single pair
    :return: array of shape (2,) or (size, 2)
    """
    return rng.multivariate_normal(np.asarray(params.mean), np.asarray(params.cov), size=size)


def integrate_odometry(
    prev_est: PoseEstimate,
    true_step: PoseDelta,
    params: OdomNoiseParams,
    rng: np.random.Generator,
) -> PoseEstimate:
    """
    Add one noisy step to a dead reckoning estimate. The forward component and the heading change of the true step are
    perturbed, the lateral component is passed through.
    :param prev_est: the estimate before the step
    :param true_step: true motion in the robot frame
    :param params: noise parameters
    :param rng: the random stream
    :return: the new estimate
    """
    eps_forward, eps_theta = sample_odometry_noise(params, rng)
    noisy = PoseDelta(true_step.forward + eps_forward, true_step.lateral, true_step.dtheta + eps_theta)
    return PoseEstimate.from_pose(prev_est.pose.compose(noisy))


def sample_abs_fix(true_pose: Pose, params: AbsLocNoiseParams, rng: np.random.Generator) -> PoseEstimate:
    """
    A fix is the true pose plus independent zero mean noise, nothing carries over between fixes
    """
    noise = rng.normal(0.0, 1.0, size=3) * np.asarray(params.sigma)
    return PoseEstimate(
        x=true_pose.x + float(noise[0]),
        y=true_pose.y + float(noise[1]),
        theta=normalize_angle(true_pose.theta + float(noise[2])),
        valid=True,
    )


def next_fix_delay(params: AbsLocNoiseParams, rng: np.random.Generator) -> int:
    """Steps until the next fix, uniform over period_lo..period_hi inclusive"""
    return int(rng.integers(params.period_lo, params.period_hi, endpoint=True))


class OdometryIntegrator:
    """
    Dead reckoning estimate expressed in the frame of the pose the episode started from
    """

    def __init__(self, params: OdomNoiseParams, rng: np.random.Generator) -> None:
        self._params = params
        self._rng = rng
        self.estimate = PoseEstimate()

    def advance(self, true_step: PoseDelta) -> PoseEstimate:
        self.estimate = integrate_odometry(self.estimate, true_step, self._params, self._rng)
        return self.estimate


class AbsoluteLocalizer:
    """
    Holds the last absolute fix and its age in decision steps, taking a new fix whenever the countdown expires
    """

    def __init__(self, params: AbsLocNoiseParams, rng: np.random.Generator) -> None:
        self._params = params
        self._rng = rng
        self.estimate = PoseEstimate(valid=False)
        self.age = 0
        self._countdown = 0

    def reset(self, true_pose: Pose) -> PoseEstimate:
        self._take_fix(true_pose)
        return self.estimate

    def _take_fix(self, true_pose: Pose) -> None:
        self.estimate = sample_abs_fix(true_pose, self._params, self._rng)
        self.age = 0
        self._countdown = next_fix_delay(self._params, self._rng)

    def advance(self, true_pose: Pose) -> bool:
        """
        Move one decision step forward
        :param true_pose: the pose at the end of the step
        :return: whether a new fix was taken
        """
        self._countdown -= 1
        if self._countdown <= 0:
            self._take_fix(true_pose)
            logger.debug("Absolute fix at (%.3f, %.3f)", self.estimate.x, self.estimate.y)
            return True
        self.age += 1
        return False
