"""
Depth cameras to planar scan: back-projection of depth frames into the robot base frame, height filtering, azimuth
binning, and registration of older clouds into the current frame through a rolling buffer.

Base frame: x forward, y left, z up. Camera optical frame: x right, y down, z along the optical axis.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, PositiveFloat, PositiveInt, field_validator

from kinonav.core.exceptions import DataError, InvalidParamsError, ParseError
from kinonav.core.model import Pose, PoseDelta
from kinonav.core.utility import format_float
from kinonav.navigation.world import DEFAULT_MAX_RANGE, OccupancyGrid, raycast_many

logger = logging.getLogger(__name__)

N_BINS = 180
HEIGHT_MIN = 0.05
HEIGHT_MAX = 1.2
HEIGHT_AXIS = 2
MOUNT_HEIGHT = 0.25
MOUNT_OFFSET = 0.15
WALL_HEIGHT = 2.0

# optical frame axes expressed in the base frame
OPTICAL_TO_BASE = ((0.0, 0.0, 1.0), (-1.0, 0.0, 0.0), (0.0, -1.0, 0.0))

Matrix3 = tuple[tuple[float, float, float], tuple[float, float, float], tuple[float, float, float]]


class CameraModel(BaseModel):
    """
    Pinhole depth camera and its mounting on the robot. ``portrait`` cameras are rotated 90 degrees about their
    optical axis, so image columns run vertically.
    """

    model_config = ConfigDict(frozen=True)

    width: PositiveInt = 80
    height: PositiveInt = 60
    fx: PositiveFloat = 40.0
    fy: PositiveFloat = 40.0
    cx: float = 40.0
    cy: float = 30.0
    rotation: Matrix3 = OPTICAL_TO_BASE
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    portrait: bool = False

    @field_validator("rotation")
    @classmethod
    def _check_rotation(cls, value: Matrix3) -> Matrix3:
        matrix = np.asarray(value, dtype=float)
        if not np.allclose(matrix.T @ matrix, np.eye(3), atol=1e-6):
            raise ValueError("camera rotation must be orthonormal")
        if np.linalg.det(matrix) < 0:
            raise ValueError("camera rotation must not be a reflection")
        return value

    @property
    def horizontal_fov(self) -> float:
        """Field of view across the image width in radians"""
        return 2.0 * math.atan(self.width / (2.0 * self.fx))

    def pixel_rays(self) -> NDArray[np.float64]:
        """
        Base frame direction of every pixel, scaled so that a depth d lands at translation + d * ray
        :return: array of shape (height, width, 3)
        """
        rows, cols = np.mgrid[0 : self.height, 0 : self.width].astype(float)
        optical = np.stack(((cols - self.cx) / self.fx, (rows - self.cy) / self.fy, np.ones_like(rows)), axis=-1)
        return self._to_mount(optical) @ np.asarray(self.rotation).T

    def _to_mount(self, optical: NDArray[np.float64]) -> NDArray[np.float64]:
        if not self.portrait:
            return optical
        return np.stack((-optical[..., 1], optical[..., 0], optical[..., 2]), axis=-1)


class CameraRig(BaseModel):
    """The cameras of one robot, matched by position to the depth frames of a capture"""

    cameras: list[CameraModel]

    @staticmethod
    def read(path: Path) -> CameraRig:
        if not path.exists():
            raise ParseError(str(path), None, "camera configuration does not exist")
        try:
            return CameraRig.model_validate_json(path.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise ParseError(str(path), None, f"invalid camera configuration: {exc}") from exc

    def write(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2) + "\n", encoding="utf-8")


def _yaw_matrix(yaw: float) -> NDArray[np.float64]:
    cos_y, sin_y = math.cos(yaw), math.sin(yaw)
    return np.array(((cos_y, -sin_y, 0.0), (sin_y, cos_y, 0.0), (0.0, 0.0, 1.0)))


def mounted_camera(
    yaw: float,
    portrait: bool,
    offset: float = MOUNT_OFFSET,
    mount_height: float = MOUNT_HEIGHT,
) -> CameraModel:
    """
    A default intrinsics camera looking horizontally along ``yaw``, placed ``offset`` metres from the base centre
    """
    rotation = _yaw_matrix(yaw) @ np.asarray(OPTICAL_TO_BASE)
    return CameraModel(
        rotation=tuple(tuple(float(value) for value in row) for row in rotation),  # type: ignore[arg-type]
        translation=(offset * math.cos(yaw), offset * math.sin(yaw), mount_height),
        portrait=portrait,
    )


def default_rig() -> CameraRig:
    """Three portrait cameras facing forward, left and right of forward, plus one landscape camera facing back"""
    front = math.radians(70.0)
    return CameraRig(
        cameras=[
            mounted_camera(0.0, portrait=True),
            mounted_camera(front, portrait=True),
            mounted_camera(-front, portrait=True),
            mounted_camera(math.pi, portrait=False),
        ],
    )


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Points in the robot base frame, shape (N, 3); ``height_axis`` designates the vertical coordinate"""

    points: NDArray[np.float64] = field(default_factory=lambda: np.empty((0, 3)))
    height_axis: int = HEIGHT_AXIS

    def __post_init__(self) -> None:
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise DataError(f"points must have shape (N, 3), got {self.points.shape}")
        if not np.isfinite(self.points).all():
            raise DataError("point cloud contains non finite coordinates")

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def heights(self) -> NDArray[np.float64]:
        return self.points[:, self.height_axis]

    @staticmethod
    def concatenate(clouds: Iterable[PointCloud]) -> PointCloud:
        arrays = [cloud.points for cloud in clouds]
        return PointCloud(np.concatenate(arrays) if arrays else np.empty((0, 3)))


@dataclass(frozen=True, eq=False)
class DepthFrame:
    """One depth raster with the header stored alongside it"""

    depth: NDArray[np.float32]
    fx: float
    fy: float
    cx: float
    cy: float
    portrait: bool = False
    frame_id: int = 0

    @property
    def width(self) -> int:
        return int(self.depth.shape[1])

    @property
    def height(self) -> int:
        return int(self.depth.shape[0])

    def write(self, path: Path) -> None:
        """Text header ``W H fx fy cx cy portrait frame_id`` then little endian float32 rows"""
        header = " ".join(
            (
                str(self.width),
                str(self.height),
                format_float(self.fx),
                format_float(self.fy),
                format_float(self.cx),
                format_float(self.cy),
                str(int(self.portrait)),
                str(self.frame_id),
            ),
        )
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(header.encode("ascii") + b"\n" + np.asarray(self.depth, dtype="<f4").tobytes())

    @staticmethod
    def read(path: Path) -> DepthFrame:
        if not path.exists():
            raise ParseError(str(path), None, "depth raster does not exist")
        data = path.read_bytes()
        newline = data.find(b"\n")
        if newline < 0:
            raise ParseError(str(path), 1, "missing raster header")
        fields = data[:newline].split()
        if len(fields) != 8:
            raise ParseError(str(path), 1, "expected header 'W H fx fy cx cy portrait frame_id'")
        try:
            width, height = int(fields[0]), int(fields[1])
            fx, fy, cx, cy = (float(value) for value in fields[2:6])
            portrait, frame_id = bool(int(fields[6])), int(fields[7])
        except ValueError as exc:
            raise ParseError(str(path), 1, "malformed raster header") from exc
        payload = data[newline + 1 :]
        if len(payload) != width * height * 4:
            raise ParseError(str(path), None, f"expected {width * height} float32 values")
        depth = np.frombuffer(payload, dtype="<f4").reshape(height, width)
        return DepthFrame(depth, fx, fy, cx, cy, portrait, frame_id)


def depth_to_points(depth: ArrayLike, cam: CameraModel) -> PointCloud:
    """
    Back-project a depth image into the robot base frame. Pixels with zero, negative or non finite depth carry no
    return and are skipped.
    :param depth: array of shape (cam.height, cam.width) in metres along the optical axis
    :param cam: the camera
    :return: the cloud of valid pixels
    :raises DataError: when the image size does not match the camera
    """
    image = np.asarray(depth, dtype=float)
    if image.shape != (cam.height, cam.width):
        raise DataError(f"Depth image of shape {image.shape} does not match camera {cam.height}x{cam.width}")
    valid = np.isfinite(image) & (image > 0)
    rays = cam.pixel_rays()[valid]
    return PointCloud(np.asarray(cam.translation) + image[valid, None] * rays)


def height_filter(cloud: PointCloud, y_min: float = HEIGHT_MIN, y_max: float = HEIGHT_MAX) -> PointCloud:
    """
    Keep the points whose height lies in [y_min, y_max], the obstacle band; the rest is navigable
    """
    if y_min > y_max:
        raise InvalidParamsError(f"Height band is empty: {y_min} > {y_max}")
    heights = cloud.heights
    return PointCloud(cloud.points[(heights >= y_min) & (heights <= y_max)], cloud.height_axis)


def azimuth_bins(azimuth: ArrayLike, n_bins: int = N_BINS) -> NDArray[np.intp]:
    """
    Half open bins of 360 / n_bins degrees, bin 0 starting at -180 degrees
    """
    degrees = np.degrees(np.asarray(azimuth, dtype=float))
    return np.floor((degrees + 180.0) / (360.0 / n_bins)).astype(np.intp) % n_bins


def bin_scan(cloud: PointCloud, n_bins: int = N_BINS, max_range: float = DEFAULT_MAX_RANGE) -> NDArray[np.float64]:
    """
    Flatten the cloud onto the ground plane and keep the nearest point of every azimuth bin
    :param cloud: points in the base frame
    :param n_bins: number of bins
    :param max_range: value of empty bins, and upper bound of every bin
    :return: n_bins ranges in (0, max_range]
    """
    ground = np.delete(cloud.points, cloud.height_axis, axis=1)
    radius = np.hypot(ground[:, 0], ground[:, 1])
    keep = radius > 1e-9
    ranges = np.full(n_bins, float(max_range))
    np.minimum.at(ranges, azimuth_bins(np.arctan2(ground[keep, 1], ground[keep, 0]), n_bins), radius[keep])
    return ranges


def register(cloud: PointCloud, motion: PoseDelta) -> PointCloud:
    """
    Express a cloud captured earlier in the current base frame
    :param cloud: points in the capture frame
    :param motion: the current pose expressed in the capture frame
    :return: the registered cloud
    """
    cos_t, sin_t = math.cos(motion.dtheta), math.sin(motion.dtheta)
    points = cloud.points.copy()
    dx = cloud.points[:, 0] - motion.forward
    dy = cloud.points[:, 1] - motion.lateral
    points[:, 0] = cos_t * dx + sin_t * dy
    points[:, 1] = -sin_t * dx + cos_t * dy
    return PointCloud(points, cloud.height_axis)


def fuse_rolling(
    history: Sequence[tuple[PointCloud, PoseDelta]],
    n_keep: int,
    n_bins: int = N_BINS,
    max_range: float = DEFAULT_MAX_RANGE,
) -> NDArray[np.float64]:
    """
    Register the n_keep newest clouds into the current frame and bin them together
    :param history: (cloud, motion since capture) pairs, oldest first
    :param n_keep: number of newest clouds to use
    :return: the fused scan
    """
    if n_keep < 1:
        raise InvalidParamsError(f"n_keep must be at least 1, got {n_keep}")
    retained = history[-n_keep:]
    merged = PointCloud.concatenate(register(cloud, motion) for cloud, motion in retained)
    return bin_scan(merged, n_bins, max_range)


class RollingScanBuffer:
    """
    Keeps the last clouds with the robot pose at capture and fuses them from any later pose
    """

    def __init__(self, capacity: int, n_bins: int = N_BINS, max_range: float = DEFAULT_MAX_RANGE) -> None:
        if capacity < 1:
            raise InvalidParamsError(f"capacity must be at least 1, got {capacity}")
        self._clouds: deque[tuple[PointCloud, Pose]] = deque(maxlen=capacity)
        self._n_bins = n_bins
        self._max_range = max_range

    def __len__(self) -> int:
        return len(self._clouds)

    def push(self, cloud: PointCloud, pose: Pose) -> None:
        self._clouds.append((cloud, pose))

    def fuse(self, current: Pose) -> NDArray[np.float64]:
        history = [(cloud, current.relative_to(captured)) for cloud, captured in self._clouds]
        return fuse_rolling(history, max(1, len(history)), self._n_bins, self._max_range)


def project_frames(frames: Sequence[ArrayLike], rig: CameraRig) -> PointCloud:
    """
    Back-project and height filter one synchronized capture of the whole rig
    :raises DataError: when the number of frames does not match the rig
    """
    if len(frames) != len(rig.cameras):
        raise DataError(f"Got {len(frames)} depth frames for {len(rig.cameras)} cameras")
    clouds = (depth_to_points(frame, cam) for frame, cam in zip(frames, rig.cameras, strict=True))
    return height_filter(PointCloud.concatenate(clouds))


def render_depth(
    grid: OccupancyGrid,
    pose: Pose,
    cam: CameraModel,
    wall_height: float = WALL_HEIGHT,
    max_range: float = DEFAULT_MAX_RANGE,
) -> NDArray[np.float32]:
    """
    Synthesize the depth frame a camera would see in a grid world made of an infinitely thin floor at height 0 and
    occupied cells extruded to wall_height. Rays hitting nothing within max_range read 0.
    :param grid: the world
    :param pose: robot pose in the world
    :param cam: the camera
    :param wall_height: height of every occupied cell
    :param max_range: horizontal sensing limit
    :return: array of shape (cam.height, cam.width), float32 metres along the optical axis
    """
    cos_t, sin_t = math.cos(pose.theta), math.sin(pose.theta)
    to_world = np.array(((cos_t, -sin_t, 0.0), (sin_t, cos_t, 0.0), (0.0, 0.0, 1.0)))
    rays = cam.pixel_rays() @ to_world.T
    origin = to_world @ np.asarray(cam.translation) + np.array((pose.x, pose.y, 0.0))
    horizontal = np.hypot(rays[..., 0], rays[..., 1])
    walls = raycast_many(grid, origin[0], origin[1], np.arctan2(rays[..., 1], rays[..., 0]), max_range)
    walls = walls.reshape(horizontal.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        wall_depth = np.where((walls < max_range) & (horizontal > 1e-12), walls / horizontal, np.inf)
        wall_top = origin[2] + wall_depth * rays[..., 2]
        wall_depth = np.where((wall_top >= 0.0) & (wall_top <= wall_height), wall_depth, np.inf)
        floor_depth = np.where(rays[..., 2] < 0, -origin[2] / rays[..., 2], np.inf)
    floor_depth = np.where(floor_depth * horizontal <= max_range, floor_depth, np.inf)
    depth = np.minimum(wall_depth, floor_depth)
    return np.where(np.isfinite(depth), depth, 0.0).astype(np.float32)


def write_scans(path: Path, scans: Iterable[ArrayLike]) -> None:
    """One CSV row of ranges per scan"""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open(encoding="utf-8", mode="w", newline="") as fle:
        writer = csv.writer(fle, lineterminator="\n")
        for scan in scans:
            writer.writerow(format_float(value) for value in np.asarray(scan, dtype=float))
