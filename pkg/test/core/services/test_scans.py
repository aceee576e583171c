"""
Tests for the depth to scan projection service
"""

import csv
from pathlib import Path

import numpy as np
import pytest

from kinonav.core.exceptions import DataError, UsageError
from kinonav.core.model import Pose
from kinonav.core.services.scans import project_scans
from kinonav.navigation.scanfuse import DepthFrame, bin_scan, default_rig, project_frames, render_depth
from test.utils import empty_room

POSES = (Pose(3.0, 3.0, 0.0), Pose(2.0, 4.0, 1.0))


@pytest.fixture
def capture_files(tmp_path: Path) -> tuple[list[Path], Path]:
    grid = empty_room(6.0, 6.0)
    rig = default_rig()
    rig_path = tmp_path / "rig.json"
    rig.write(rig_path)
    paths = []
    for frame_id, pose in enumerate(POSES):
        for index, cam in enumerate(rig.cameras):
            path = tmp_path / f"capture-{frame_id}-cam{index}.depth"
            depth = render_depth(grid, pose, cam)
            DepthFrame(depth, cam.fx, cam.fy, cam.cx, cam.cy, cam.portrait, frame_id).write(path)
            paths.append(path)
    return paths, rig_path


def test_project_scans(capture_files: tuple[list[Path], Path], tmp_path: Path):
    """
    Test each capture becomes one scan row matching the in memory projection
    :return: None
    """
    paths, rig_path = capture_files
    output = tmp_path / "scans.csv"
    scans = project_scans(paths, rig_path, output)

    assert len(scans) == 2
    grid = empty_room(6.0, 6.0)
    rig = default_rig()
    expected = bin_scan(project_frames([render_depth(grid, POSES[1], cam) for cam in rig.cameras], rig))
    np.testing.assert_array_equal(scans[1], expected)
    with output.open(encoding="utf-8", newline="") as fle:
        rows = list(csv.reader(fle))
    assert len(rows) == 2
    assert len(rows[0]) == 180
    np.testing.assert_array_equal(np.array(rows[0], dtype=float), scans[0])


def test_project_scans_custom_bins(capture_files: tuple[list[Path], Path], tmp_path: Path):
    """
    Test the bin count and range limit are honoured
    :return: None
    """
    paths, rig_path = capture_files
    scans = project_scans(paths, rig_path, tmp_path / "scans.csv", n_bins=90, max_range=2.0)
    assert scans[0].shape == (90,)
    assert scans[0].max() <= 2.0


def test_project_scans_requires_rig(capture_files: tuple[list[Path], Path], tmp_path: Path):
    """
    Test a missing camera configuration is a usage error
    :return: None
    """
    paths, _ = capture_files
    with pytest.raises(UsageError):
        project_scans(paths, None, tmp_path / "scans.csv")
    with pytest.raises(UsageError):
        project_scans(paths, tmp_path / "missing.json", tmp_path / "scans.csv")


def test_project_scans_requires_rasters(capture_files: tuple[list[Path], Path], tmp_path: Path):
    """
    Test an empty raster list is a usage error
    :return: None
    """
    _, rig_path = capture_files
    with pytest.raises(UsageError):
        project_scans([], rig_path, tmp_path / "scans.csv")


def test_project_scans_incomplete_capture(capture_files: tuple[list[Path], Path], tmp_path: Path):
    """
    Test a capture missing a camera is rejected
    :return: None
    """
    paths, rig_path = capture_files
    with pytest.raises(DataError):
        project_scans(paths[:3], rig_path, tmp_path / "scans.csv")


def test_project_scans_mismatched_intrinsics(capture_files: tuple[list[Path], Path], tmp_path: Path):
    """
    Test a raster whose header disagrees with its rig camera is rejected
    :return: None
    """
    paths, rig_path = capture_files
    frame = DepthFrame.read(paths[0])
    widened = DepthFrame(frame.depth, frame.fx * 2.0, frame.fy, frame.cx, frame.cy, frame.portrait, frame.frame_id)
    widened.write(paths[0])
    with pytest.raises(DataError):
        project_scans(paths, rig_path, tmp_path / "scans.csv")
