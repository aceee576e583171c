"""
Specifications for querying Episode and EpisodeResult records.
"""

from __future__ import annotations

from kinonav.core.model import Episode, EpisodeResult
from kinonav.core.specifications.base import Specification


class EpisodeSpecification(Specification[Episode]):
    """
    Specification for Episode records of an episodes file
    """

    @property
    def model(self) -> type[Episode]:
        return Episode


class EpisodeResultSpecification(Specification[EpisodeResult]):
    """
    Specification for EpisodeResult records of a results file
    """

    @property
    def model(self) -> type[EpisodeResult]:
        return EpisodeResult

    def by_policy(self, policy: str) -> EpisodeResultSpecification:
        """
        Select the results produced by one policy, in episode id order
        :param policy: the policy name
        :return: this specification
        """
        self.value = lambda result: result.policy == policy
        self.order_by = "episode_id"
        return self
