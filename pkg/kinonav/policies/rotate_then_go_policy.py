"""
Module provides the RotateThenGoPolicy class, a dynamics blind baseline that turns in place until it faces the carrot
and then drives forward slowly.
"""

from __future__ import annotations

import math
from typing import ClassVar

from kinonav.core.model import ActionSpace, MotionState, VelocityCommand
from kinonav.policies.policy import PathFollowingPolicy, heading_error

HEADING_TOLERANCE = math.radians(15.0)
TURN = ActionSpace.to_action(VelocityCommand(0.0, 1.0))
TURN_NEGATIVE = ActionSpace.to_action(VelocityCommand(0.0, -1.0))
FORWARD = ActionSpace.to_action(VelocityCommand(0.3, 0.0))


class RotateThenGoPolicy(PathFollowingPolicy):
    """
    Pure rotation at 1 rad/s while the carrot is more than 15 degrees off the heading, otherwise 0.3 m/s straight
    """

    name: ClassVar[str] = "rotate_then_go"

    def choose(self, current: MotionState, carrot: tuple[float, float], final: bool) -> int:
        error = heading_error(current.pose, carrot)
        if abs(error) > HEADING_TOLERANCE:
            return TURN if error > 0 else TURN_NEGATIVE
        return FORWARD
