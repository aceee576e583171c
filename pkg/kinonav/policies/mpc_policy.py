"""
Module provides the MpcPolicy class, a path following policy that anticipates motion by rolling the identified
dynamics forward for every sequence of discrete actions over a short horizon.
"""

from __future__ import annotations

import itertools
import logging
from typing import ClassVar

import numpy as np
from numpy.typing import NDArray

from kinonav.core.model import ActionSpace, MotionState
from kinonav.motion.dynamics import rollout_batch
from kinonav.navigation.world import collides_many
from kinonav.policies.policy import MpcConfig, PathFollowingPolicy

logger = logging.getLogger(__name__)

COMMAND_TABLE = np.array([command.as_tuple() for command in ActionSpace.COMMANDS])


def action_sequences(horizon: int) -> NDArray[np.intp]:
    """All action index sequences of the given length in lexicographic order, shape (28 ** horizon, horizon)"""
    return np.array(list(itertools.product(range(ActionSpace.SIZE), repeat=horizon)), dtype=np.intp)


class MpcPolicy(PathFollowingPolicy):
    """
    Exhaustive model predictive control over the discrete action space. Every sequence is simulated from the current
    state; terminal states are scored by distance and heading error to the carrot, and any colliding substep adds
    the collision weight. The first action of the cheapest sequence is returned, the lowest index winning ties.
    """

    name: ClassVar[str] = "mpc"

    def __init__(self, config: MpcConfig | None = None) -> None:
        super().__init__(config)
        self._sequences = action_sequences(self.config.horizon)

    def costs(self, current: MotionState, carrot: tuple[float, float], final: bool = False) -> NDArray[np.float64]:
        """
        Cost of every action sequence, aligned with action_sequences(horizon)
        :param current: the state the rollouts start from
        :param carrot: the point to steer to
        :param final: when the carrot is the goal, terminal speed is penalized too
        :return: one cost per sequence
        """
        env = self.env
        rollouts = rollout_batch(current, COMMAND_TABLE[self._sequences], env.params, env.config.physics)
        count, substeps, _ = rollouts.shape
        collides = collides_many(
            env.grid,
            rollouts[:, :, 0].ravel(),
            rollouts[:, :, 1].ravel(),
            env.config.robot_radius,
        ).reshape(count, substeps)
        terminal = rollouts[:, -1]
        dx = carrot[0] - terminal[:, 0]
        dy = carrot[1] - terminal[:, 1]
        heading = np.abs(np.remainder(np.arctan2(dy, dx) - terminal[:, 2] + np.pi, 2.0 * np.pi) - np.pi)
        config = self.config
        cost = config.w_dist * np.hypot(dx, dy) + config.w_heading * heading
        cost += config.w_collision * collides.any(axis=1)
        if final:
            cost += config.w_speed * np.abs(terminal[:, 3])
        return cost

    def choose(self, current: MotionState, carrot: tuple[float, float], final: bool) -> int:
        best = int(np.argmin(self.costs(current, carrot, final)))
        action = int(self._sequences[best, 0])
        logger.debug("MPC chose action %s towards (%.3f, %.3f)", action, *carrot)
        return action
