"""
Service layer for evaluating policies on episode sets
"""

from __future__ import annotations

import csv
import logging
from collections.abc import Sequence
from pathlib import Path

from kinonav.core.config import RunConfig
from kinonav.core.exceptions import UsageError, WorldError
from kinonav.core.model import DEFAULT_PARAMS, Episode, EpisodeResult, SecondOrderParams
from kinonav.core.reports import ComparisonReport
from kinonav.core.repositories import Repo
from kinonav.core.specifications.episode import EpisodeResultSpecification, EpisodeSpecification
from kinonav.core.utility import format_float
from kinonav.navigation.metrics import aggregate
from kinonav.navigation.simulator import TRACE_HEADER, TraceRow, run_episode
from kinonav.navigation.world import OccupancyGrid
from kinonav.policies.factory import get_policy

logger = logging.getLogger(__name__)

RESULTS_FILE = "results.jsonl"
REPORT_JSON = "report.json"
REPORT_TEXT = "report.txt"
COMMANDS_HEADER = ("t", "v_cmd", "w_cmd")


def load_episodes(path: Path, limit: int = 0, offset: int = 0) -> list[Episode]:
    """
    Read an episodes file
    :param path: JSON lines file of episodes
    :param limit: maximum number of episodes, 0 for all
    :param offset: number of episodes to skip in id order
    :return: the episodes in id order
    :raises UsageError: on a negative limit or offset
    """
    if limit < 0 or offset < 0:
        raise UsageError(f"limit and offset must not be negative, got {limit} and {offset}")
    episodes = list(Repo[Episode](path).find(EpisodeSpecification().all(limit, offset, order_by="id")))
    logger.info("Loaded %s episodes from %s", len(episodes), path)
    return episodes


class GridCache:
    """Grids referenced by an episodes file, resolved relative to it and loaded once"""

    def __init__(self, base: Path) -> None:
        self._base = base
        self._grids: dict[str, OccupancyGrid] = {}

    def get(self, reference: str) -> OccupancyGrid:
        if reference not in self._grids:
            self._grids[reference] = OccupancyGrid.read(self._base / reference)
        return self._grids[reference]


def failed_result(episode: Episode, policy: str) -> EpisodeResult:
    return EpisodeResult(
        episode_id=episode.id,
        policy=policy,
        success=False,
        path_length=0.0,
        shortest_length=0.0,
        completion_time=0.0,
        t_star=0.0,
        collisions=0,
    )


def write_trace(path: Path, trace: Sequence[TraceRow]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open(encoding="utf-8", mode="w", newline="") as fle:
        writer = csv.writer(fle, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for row in trace:
            writer.writerow(
                (
                    format_float(row.t),
                    format_float(row.x),
                    format_float(row.y),
                    format_float(row.theta),
                    format_float(row.v),
                    format_float(row.w),
                    row.action,
                    format_float(row.reward),
                    int(row.collided),
                    format_float(row.v_cmd),
                    format_float(row.w_cmd),
                ),
            )


def write_commands(path: Path, trace: Sequence[TraceRow]) -> None:
    """
    The command script of an episode: each command with the time it started being applied, ready for replay
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open(encoding="utf-8", mode="w", newline="") as fle:
        writer = csv.writer(fle, lineterminator="\n")
        writer.writerow(COMMANDS_HEADER)
        for previous, row in zip(trace, trace[1:], strict=False):
            writer.writerow((format_float(previous.t), format_float(row.v_cmd), format_float(row.w_cmd)))


def evaluate_policy(
    episodes: Sequence[Episode],
    grids: GridCache,
    policy_name: str,
    config: RunConfig,
    params: SecondOrderParams,
    output: Path,
) -> list[EpisodeResult]:
    """
    Run one policy on every episode, writing the trace and command script of each
    :return: the results in episode order; unreachable episodes count as failures
    """
    results = []
    for episode in episodes:
        policy = get_policy(policy_name, config.mpc)
        try:
            result, trace = run_episode(episode, grids.get(episode.grid), policy, config.sim, params, config.seed)
        except WorldError as exc:
            logger.warning("Episode %s counted as failure: %s", episode.id, exc)
            results.append(failed_result(episode, policy.name))
            continue
        write_trace(output / "traces" / policy.name / f"{episode.id}.csv", trace)
        write_commands(output / "commands" / policy.name / f"{episode.id}.csv", trace)
        results.append(result)
    return results


def evaluate(
    episodes_path: Path,
    policies: Sequence[str],
    output: Path,
    config: RunConfig | None = None,
    params: SecondOrderParams = DEFAULT_PARAMS,
    limit: int = 0,
    offset: int = 0,
) -> ComparisonReport:
    """
    Evaluate each policy on the same episode set and write results, traces and the report
    :param episodes_path: the episodes file, grid references resolve relative to it
    :param policies: policy names, each gets a report row
    :param output: the output directory
    :param config: run configuration
    :param params: the motion model
    :param limit: evaluate at most this many episodes, 0 for all
    :param offset: skip this many episodes in id order
    :return: the report
    """
    config = config or RunConfig()
    episodes = load_episodes(episodes_path, limit, offset)
    grids = GridCache(episodes_path.parent)
    repo = Repo[EpisodeResult](output / RESULTS_FILE)
    repo.add_all([], overwrite=True)
    names = list(dict.fromkeys(get_policy(name).name for name in policies))
    for name in names:
        repo.add_all(evaluate_policy(episodes, grids, name, config, params, output))
    reports = [aggregate(repo.find(EpisodeResultSpecification().by_policy(name)), name) for name in names]
    report = ComparisonReport(reports=reports)
    (output / REPORT_JSON).write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    table = report.to_table()
    (output / REPORT_TEXT).write_text(table, encoding="utf-8")
    for line in table.splitlines():
        logger.info(line)
    return report
