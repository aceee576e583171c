"""
Service layer for projecting depth rasters into planar scans
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from kinonav.core.exceptions import DataError, UsageError
from kinonav.navigation.scanfuse import N_BINS, CameraRig, DepthFrame, bin_scan, project_frames, write_scans
from kinonav.navigation.world import DEFAULT_MAX_RANGE

logger = logging.getLogger(__name__)


def _check_intrinsics(frame: DepthFrame, path: Path, rig: CameraRig, index: int) -> None:
    camera = rig.cameras[index]
    stored = (frame.width, frame.height, frame.fx, frame.fy, frame.cx, frame.cy, frame.portrait)
    expected = (camera.width, camera.height, camera.fx, camera.fy, camera.cx, camera.cy, camera.portrait)
    if not np.allclose(stored[:6], expected[:6]) or stored[6] != expected[6]:
        raise DataError(f"{path}: raster header does not match camera {index} of the rig")


def project_scans(
    depth_paths: Sequence[Path],
    cams_path: Path | None,
    output: Path,
    n_bins: int = N_BINS,
    max_range: float = DEFAULT_MAX_RANGE,
) -> list[NDArray[np.float64]]:
    """
    Turn depth rasters into scans, one per capture. Rasters sharing a frame id form one capture and are matched to the
    rig cameras in the order given.
    :param depth_paths: the rasters
    :param cams_path: the camera rig configuration
    :param output: the scan CSV, one row per capture
    :return: the scans in frame id order of first appearance
    """
    if cams_path is None or not cams_path.exists():
        raise UsageError("scan-project needs an existing camera configuration (--cams)")
    if not depth_paths:
        raise UsageError("scan-project needs at least one depth raster")
    rig = CameraRig.read(cams_path)
    captures: dict[int, list[tuple[Path, DepthFrame]]] = {}
    for path in depth_paths:
        frame = DepthFrame.read(path)
        captures.setdefault(frame.frame_id, []).append((path, frame))
    scans = []
    for frame_id, frames in captures.items():
        if len(frames) != len(rig.cameras):
            raise DataError(f"Capture {frame_id} has {len(frames)} rasters for {len(rig.cameras)} cameras")
        for index, (path, frame) in enumerate(frames):
            _check_intrinsics(frame, path, rig, index)
        cloud = project_frames([frame.depth for _, frame in frames], rig)
        scans.append(bin_scan(cloud, n_bins, max_range))
    write_scans(output, scans)
    logger.info("Wrote %s scans of %s bins to %s", len(scans), n_bins, output)
    return scans
