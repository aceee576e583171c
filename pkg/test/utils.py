"""
Testing utils
"""

import random

import numpy as np
from faker import Faker
from faker.providers import BaseProvider

from kinonav.core.model import ActionSpace, Episode, EpisodeResult, Pose, VelocityCommand
from kinonav.navigation.world import OccupancyGrid

random.seed(1)
Faker.seed(1)
faker = Faker()


class KinonavProvider(BaseProvider):
    """
    Custom kinonav faker provider
    """

    def pose(self, size: float = 8.0) -> Pose:
        """
        Generate a random pose inside a size x size square
        :param size: side of the square in metres
        :return: the pose
        """
        return Pose(
            faker.pyfloat(min_value=0, max_value=size),
            faker.pyfloat(min_value=0, max_value=size),
            faker.pyfloat(min_value=-3, max_value=3),
        )

    def velocity_command(self) -> VelocityCommand:
        """
        Pick one of the discrete velocity commands
        :return: the command
        """
        return random.choice(ActionSpace.COMMANDS)

    def episode(self, grid: str = "world-000.grid") -> Episode:
        """
        Generate a random episode on the given grid reference
        :param grid: the grid reference
        :return: the episode
        """
        start = self.pose()
        return Episode(
            id=f"episode-{faker.unique.pyint(max_value=999):03d}",
            grid=grid,
            start=start.as_tuple(),
            goal=(faker.pyfloat(min_value=0, max_value=8), faker.pyfloat(min_value=0, max_value=8)),
            geodesic_start_goal=faker.pyfloat(min_value=3, max_value=12),
        )

    def episode_result(self, policy: str = "mpc") -> EpisodeResult:
        """
        Generate a random but consistent episode result
        :param policy: the policy name
        :return: the result
        """
        shortest = faker.pyfloat(min_value=3, max_value=12)
        t_star = shortest / 1.0 + 0.5
        success = faker.pybool()
        return EpisodeResult(
            episode_id=f"episode-{faker.unique.pyint(max_value=999):03d}",
            policy=policy,
            success=success,
            path_length=shortest * faker.pyfloat(min_value=1, max_value=1.5),
            shortest_length=shortest,
            completion_time=t_star * faker.pyfloat(min_value=1, max_value=3),
            t_star=t_star,
            collisions=faker.pyint(max_value=3),
        )


KINONAV_FAKER_PROVIDER = KinonavProvider(faker)


def empty_room(width: float = 4.0, height: float = 4.0, resolution: float = 0.05, wall: int = 2) -> OccupancyGrid:
    """
    An axis aligned room with ``wall`` cells thick walls and nothing inside
    :param width: metres along x
    :param height: metres along y
    :param resolution: metres per cell
    :param wall: wall thickness in cells
    :return: the grid
    """
    occupied = np.zeros((round(height / resolution), round(width / resolution)), dtype=bool)
    occupied[:wall, :] = True
    occupied[-wall:, :] = True
    occupied[:, :wall] = True
    occupied[:, -wall:] = True
    return OccupancyGrid(occupied, resolution)


def divided_room(width: float = 6.0, height: float = 4.0, door: float = 1.2) -> OccupancyGrid:
    """
    Room split by a vertical wall in the middle with one door near the top
    :param width: metres along x
    :param height: metres along y
    :param door: door width in metres
    :return: the grid
    """
    room = empty_room(width, height)
    occupied = room.occupied.copy()
    middle = occupied.shape[1] // 2
    occupied[:, middle - 1 : middle + 1] = True
    door_cells = round(door / room.resolution)
    top = occupied.shape[0] - 2 - round(0.3 / room.resolution)
    occupied[top - door_cells : top, middle - 1 : middle + 1] = False
    return OccupancyGrid(occupied, room.resolution)
