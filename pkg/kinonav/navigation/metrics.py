"""
Navigation metrics: success rate, success weighted by path length (SPL), success weighted by completion time (SCT),
and the dynamics aware lower bound on the optimal completion time that SCT is measured against.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence

from kinonav.core.exceptions import DataError
from kinonav.core.model import EpisodeResult, SecondOrderParams
from kinonav.core.reports import MetricsReport
from kinonav.navigation.world import path_length

logger = logging.getLogger(__name__)


def _require_results(results: Sequence[EpisodeResult]) -> None:
    if not results:
        raise DataError("No episode results to aggregate")


def success_rate(results: Sequence[EpisodeResult]) -> float:
    _require_results(results)
    return sum(result.success for result in results) / len(results)


def _weighted(success: bool, optimal: float, actual: float) -> float:
    if not success:
        return 0.0
    longest = max(optimal, actual)
    # zero length and zero time episodes are solved optimally by definition
    return 1.0 if longest == 0.0 else optimal / longest


def spl(results: Sequence[EpisodeResult]) -> float:
    """
    Mean over episodes of success * shortest / max(path, shortest)
    :param results: the episode results
    :return: value in [0, 1]
    :raises DataError: on an empty list
    """
    _require_results(results)
    return math.fsum(_weighted(r.success, r.shortest_length, r.path_length) for r in results) / len(results)


def sct(results: Sequence[EpisodeResult]) -> float:
    """
    Mean over episodes of success * t_star / max(completion time, t_star)
    :param results: the episode results
    :return: value in [0, 1]
    :raises DataError: on an empty list
    """
    _require_results(results)
    return math.fsum(_weighted(r.success, r.t_star, r.completion_time) for r in results) / len(results)


def time_lower_bound(path: Sequence[Sequence[float]], params: SecondOrderParams) -> float:
    """
    Lower bound on the time needed to follow a path: the segment lengths are summed into one straight run covered by
    accelerating from rest at the maximum linear acceleration up to the maximum velocity, then cruising. Turning and
    braking are not charged.
    :param path: waypoints of the shortest path
    :param params: the motion model providing vel_max and acc_up_max
    :return: seconds
    :raises DataError: on an empty path
    """
    if len(path) == 0:
        raise DataError("Cannot bound the completion time of an empty path")
    length = path_length(path)
    v_max = params.linear.vel_max
    acc = params.linear.acc_up_max
    if length == 0.0:
        return 0.0
    if v_max <= 0.0:
        return math.inf
    t_acc = v_max / acc
    d_acc = v_max * v_max / (2.0 * acc)
    if length < d_acc:
        return math.sqrt(2.0 * length / acc)
    return t_acc + (length - d_acc) / v_max


def aggregate(results: Sequence[EpisodeResult], policy: str = "") -> MetricsReport:
    """
    Summarize a result set
    :param results: the episode results
    :param policy: name shown in the report
    :return: the report, fractions and percentages
    :raises DataError: on an empty list
    """
    _require_results(results)
    report = MetricsReport(
        policy=policy,
        episodes=len(results),
        success_rate=success_rate(results),
        spl=spl(results),
        sct=sct(results),
        mean_collisions=math.fsum(result.collisions for result in results) / len(results),
        mean_time=math.fsum(result.completion_time for result in results) / len(results),
    )
    logger.info(
        "%s: SR %.1f%% SPL %.1f%% SCT %.1f%% over %s episodes",
        policy or "results",
        report.success_rate_percent,
        report.spl_percent,
        report.sct_percent,
        report.episodes,
    )
    return report
