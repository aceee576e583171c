"""
Service layer for procedural worlds and their episode sets
"""

from __future__ import annotations

import logging
from pathlib import Path

from kinonav.core.model import Episode
from kinonav.core.repositories import Repo
from kinonav.core.utility import derive_rng
from kinonav.navigation.scanfuse import DepthFrame, default_rig, render_depth
from kinonav.navigation.world import DEFAULT_RESOLUTION, DEFAULT_ROBOT_RADIUS, generate_rooms, sample_episodes

logger = logging.getLogger(__name__)

EPISODES_FILE = "episodes.jsonl"
RIG_FILE = "rig.json"


def world_name(index: int) -> str:
    return f"world-{index:03d}"


def make_worlds(
    output: Path,
    count: int,
    seed: int,
    size: tuple[float, float] = (8.0, 8.0),
    clutter: float = 0.1,
    episodes_per_world: int = 1,
    resolution: float = DEFAULT_RESOLUTION,
    robot_radius: float = DEFAULT_ROBOT_RADIUS,
    depth: bool = False,
) -> list[Episode]:
    """
    Generate worlds, sample their episodes and write everything under one directory: ``world-000.grid`` ...,
    ``episodes.jsonl`` and, with ``depth``, the default camera rig with the depth frames seen from every episode start,
    one capture per episode numbered in episode order
    :param output: the directory
    :param count: number of worlds
    :param seed: master seed, each world and its episodes use their own named stream
    :return: all sampled episodes
    """
    episodes: list[Episode] = []
    rig = default_rig()
    for index in range(count):
        name = world_name(index)
        world_seed = int(derive_rng(seed, "world-gen", index).integers(0, 2**31))
        grid = generate_rooms(world_seed, size[0], size[1], resolution, clutter, robot_radius)
        grid.write(output / f"{name}.grid")
        sampled = sample_episodes(
            grid,
            episodes_per_world,
            derive_rng(seed, "episode", index),
            grid_ref=f"{name}.grid",
            id_prefix=name,
            robot_radius=robot_radius,
        )
        if depth:
            for frame_id, episode in enumerate(sampled, start=len(episodes)):
                for camera_index, camera in enumerate(rig.cameras):
                    frame = DepthFrame(
                        render_depth(grid, episode.start_pose, camera),
                        camera.fx,
                        camera.fy,
                        camera.cx,
                        camera.cy,
                        camera.portrait,
                        frame_id=frame_id,
                    )
                    frame.write(output / "depth" / f"{episode.id}-cam{camera_index}.depth")
        episodes.extend(sampled)
        logger.info("Generated %s with %s episodes", name, len(sampled))
    if depth:
        rig.write(output / RIG_FILE)
    Repo[Episode](output / EPISODES_FILE).add_all(episodes, overwrite=True)
    logger.info("Wrote %s worlds and %s episodes to %s", count, len(episodes), output)
    return episodes
