"""
This module provides a factory function to get the navigation policy registered under a name.
"""

import logging

from kinonav.core.exceptions import MissingPolicyError
from kinonav.policies.mpc_policy import MpcPolicy
from kinonav.policies.policy import MpcConfig, Policy
from kinonav.policies.rotate_then_go_policy import RotateThenGoPolicy

logger = logging.getLogger(__name__)

POLICY_NAMES = (MpcPolicy.name, RotateThenGoPolicy.name)


def get_policy(name: str, config: MpcConfig | None = None) -> Policy:
    """
    Get the policy for the given name
    :param name: str - the policy name
    :param config: MpcConfig - tuning passed to the policy
    :return: - Policy
    """
    logger.info("Getting policy: %s", name)
    match name.lower():
        case "mpc":
            return MpcPolicy(config)
        case "rotate_then_go":
            return RotateThenGoPolicy(config)
        case _:
            raise MissingPolicyError(f"No policy named {name}")
