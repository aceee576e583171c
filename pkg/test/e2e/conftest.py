"""
Global fixtures for e2e tests: worlds and evaluation runs shared across the session
"""

from pathlib import Path

import pytest

from kinonav.core.services.worlds import EPISODES_FILE
from kinonav.kinonav import main

ACCEPTANCE_SEED = 7
ACCEPTANCE_WORLDS = 20


def run(*argv: str | Path) -> int:
    """
    Run the command line with stringified arguments
    :param argv: the arguments
    :return: the exit code
    """
    return main([str(arg) for arg in argv])


@pytest.fixture(scope="session")
def worlds_dir(tmp_path_factory) -> Path:
    """
    Three small worlds with depth rasters
    :return: the worlds directory
    """
    output = tmp_path_factory.mktemp("worlds")
    assert run("make-worlds", "--count", 3, "--size", "6x6", "--seed", 1, "--depth", "-o", output) == 0
    return output


@pytest.fixture(scope="session")
def acceptance_episodes(tmp_path_factory) -> Path:
    """
    The acceptance world set, one episode per world
    :return: the episodes file
    """
    output = tmp_path_factory.mktemp("acceptance-worlds")
    argv = ("make-worlds", "--count", ACCEPTANCE_WORLDS, "--size", "8x8", "--seed", ACCEPTANCE_SEED, "-o", output)
    assert run(*argv) == 0
    return output / EPISODES_FILE


@pytest.fixture(scope="session")
def acceptance_run(tmp_path_factory, acceptance_episodes: Path) -> Path:
    """
    Both policies evaluated on the acceptance world set
    :return: the evaluation output directory
    """
    output = tmp_path_factory.mktemp("acceptance-run")
    argv = ("evaluate", "--episodes", acceptance_episodes, "--policy", "mpc,rotate_then_go", "--seed", ACCEPTANCE_SEED)
    assert run(*argv, "-o", output) == 0
    return output
