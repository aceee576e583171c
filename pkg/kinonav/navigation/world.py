"""
Occupancy grid worlds: persistence, procedural room generation, raycasting, collision queries, geodesic distances and
shortest paths.

Cell (row, col) covers x in [ox + col * res, ox + (col + 1) * res) and y in [oy + row * res, oy + (row + 1) * res).
Everything outside the grid counts as occupied for collisions and traversability; rays leaving the grid read
max range.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import ndimage
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import dijkstra

from kinonav.core.exceptions import BlockedPositionError, InfeasibleWorldError, ParseError, UnreachableGoalError
from kinonav.core.model import Episode, Pose
from kinonav.core.utility import derive_rng, format_float

logger = logging.getLogger(__name__)

UNREACHABLE = math.inf
DEFAULT_RESOLUTION = 0.05
DEFAULT_MAX_RANGE = 10.0
DEFAULT_ROBOT_RADIUS = 0.3
MIN_DOOR_WIDTH = 0.9
WALL_THICKNESS_CELLS = 2
MIN_FREE_FRACTION = 0.5
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """
    Immutable binary occupancy grid. ``occupied`` has shape (height, width), row 0 at the lowest y.
    """

    occupied: NDArray[np.bool_]
    resolution: float = DEFAULT_RESOLUTION
    origin: tuple[float, float] = (0.0, 0.0)
    _cache: dict[Any, Any] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.resolution <= 0:
            raise ParseError("grid", None, f"resolution must be positive, got {self.resolution}")
        if self.occupied.ndim != 2:
            raise ParseError("grid", None, "occupancy must be a 2D array")
        self.occupied.setflags(write=False)

    @property
    def height(self) -> int:
        return int(self.occupied.shape[0])

    @property
    def width(self) -> int:
        return int(self.occupied.shape[1])

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(x_min, y_min, x_max, y_max) in metres"""
        ox, oy = self.origin
        return ox, oy, ox + self.width * self.resolution, oy + self.height * self.resolution

    def cell_of(self, x: ArrayLike, y: ArrayLike) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
        """(row, col) of the cells holding the given points, possibly out of bounds"""
        ox, oy = self.origin
        cols = np.floor((np.asarray(x, dtype=float) - ox) / self.resolution).astype(np.intp)
        rows = np.floor((np.asarray(y, dtype=float) - oy) / self.resolution).astype(np.intp)
        return rows, cols

    def cell_center(self, row: ArrayLike, col: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        ox, oy = self.origin
        return (
            ox + (np.asarray(col, dtype=float) + 0.5) * self.resolution,
            oy + (np.asarray(row, dtype=float) + 0.5) * self.resolution,
        )

    def in_bounds(self, rows: ArrayLike, cols: ArrayLike) -> NDArray[np.bool_]:
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        return (rows >= 0) & (rows < self.height) & (cols >= 0) & (cols < self.width)

    def is_occupied_cell(self, rows: ArrayLike, cols: ArrayLike) -> NDArray[np.bool_]:
        """Occupancy lookup treating out of bounds cells as occupied"""
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        inside = self.in_bounds(rows, cols)
        result = np.ones(rows.shape, dtype=bool)
        result[inside] = self.occupied[rows[inside], cols[inside]]
        return result

    def to_text(self) -> str:
        """
        Render in the text format: header ``W H RES OX OY`` then one line per row, top row first, ``#`` occupied
        """
        ox, oy = self.origin
        lines = [f"{self.width} {self.height} {format_float(self.resolution)} {format_float(ox)} {format_float(oy)}"]
        lines.extend("".join("#" if cell else "." for cell in row) for row in self.occupied[::-1])
        return "\n".join(lines) + "\n"

    def write(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_text(), encoding="utf-8")

    @staticmethod
    def from_text(text: str, source: str = "grid") -> OccupancyGrid:
        """
        Parse the text format
        :param text: the document
        :param source: name used in error messages
        :return: the grid
        :raises ParseError: with the offending line number
        """
        lines = text.splitlines()
        if not lines:
            raise ParseError(source, 1, "empty grid file")
        header = lines[0].split()
        if len(header) != 5:
            raise ParseError(source, 1, "expected header 'W H RES OX OY'")
        try:
            width, height = int(header[0]), int(header[1])
            resolution, ox, oy = float(header[2]), float(header[3]), float(header[4])
        except ValueError as exc:
            raise ParseError(source, 1, "malformed header values") from exc
        if width <= 0 or height <= 0 or resolution <= 0:
            raise ParseError(source, 1, "grid dimensions and resolution must be positive")
        if len(lines) - 1 < height:
            raise ParseError(source, len(lines), f"expected {height} rows, got {len(lines) - 1}")
        rows = []
        for number, line in enumerate(lines[1 : height + 1], start=2):
            row = line.rstrip("\r\n")
            if len(row) != width or set(row) - {"#", "."}:
                raise ParseError(source, number, f"expected {width} characters of '#' or '.'")
            rows.append([char == "#" for char in row])
        occupied = np.array(rows[::-1], dtype=bool)
        return OccupancyGrid(occupied, resolution, (ox, oy))

    @staticmethod
    def from_pgm(
        data: bytes,
        resolution: float = DEFAULT_RESOLUTION,
        origin: tuple[float, float] = (0.0, 0.0),
        source: str = "grid",
    ) -> OccupancyGrid:
        """
        Import a binary (P5) PGM map. Dark pixels, below half of the maximum grey value, are occupied.
        """
        tokens: list[bytes] = []
        position = 0
        while len(tokens) < 4:
            while position < len(data) and data[position : position + 1].isspace():
                position += 1
            if data[position : position + 1] == b"#":
                position = data.find(b"\n", position) + 1 or len(data)
                continue
            end = position
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            if end == position:
                raise ParseError(source, None, "truncated PGM header")
            tokens.append(data[position:end])
            position = end
        if tokens[0] != b"P5":
            raise ParseError(source, 1, "only binary P5 PGM files are supported")
        try:
            width, height, max_value = (int(token) for token in tokens[1:])
        except ValueError as exc:
            raise ParseError(source, None, "malformed PGM header") from exc
        dtype = np.dtype(">u2") if max_value > 255 else np.dtype(np.uint8)
        offset = position + 1
        if len(data) - offset < width * height * dtype.itemsize:
            raise ParseError(source, None, "PGM holds fewer pixels than its header declares")
        pixels = np.frombuffer(data, dtype=dtype, count=width * height, offset=offset)
        image = pixels.reshape(height, width)
        return OccupancyGrid(np.ascontiguousarray(image[::-1] < max_value / 2.0), resolution, origin)

    @staticmethod
    def read(path: Path, resolution: float = DEFAULT_RESOLUTION) -> OccupancyGrid:
        if not path.exists():
            raise ParseError(str(path), None, "file does not exist")
        if path.suffix.lower() == ".pgm":
            return OccupancyGrid.from_pgm(path.read_bytes(), resolution=resolution, source=str(path))
        return OccupancyGrid.from_text(path.read_text(encoding="utf-8"), str(path))


def _disc_offsets(radius_cells: float) -> NDArray[np.bool_]:
    """Cells whose rectangle lies closer than radius_cells to the centre of the middle cell"""
    reach = math.ceil(radius_cells + 0.5)
    offsets = np.arange(-reach, reach + 1)
    gap = np.maximum(np.abs(offsets) - 0.5, 0.0)
    return np.hypot(gap[:, None], gap[None, :]) < radius_cells


def inflate(grid: OccupancyGrid, robot_radius: float) -> NDArray[np.bool_]:
    """
    Cells whose centre cannot hold the robot disc, cached per radius
    :param grid: the world
    :param robot_radius: disc radius in metres
    :return: boolean array of the grid's shape
    """
    key = ("inflated", robot_radius)
    if key not in grid._cache:
        structure = _disc_offsets(robot_radius / grid.resolution)
        inflated = ndimage.binary_dilation(grid.occupied, structure=structure, border_value=1)
        inflated.setflags(write=False)
        grid._cache[key] = inflated
    return grid._cache[key]


def raycast_many(
    grid: OccupancyGrid,
    x: ArrayLike,
    y: ArrayLike,
    azimuths: ArrayLike,
    max_range: float = DEFAULT_MAX_RANGE,
) -> NDArray[np.float64]:
    """
    Vectorized grid traversal: distance from each origin to the first occupied cell boundary along its ray.
    :param grid: the world
    :param x: origin x, broadcast against the azimuths
    :param y: origin y
    :param azimuths: world frame ray directions in radians
    :param max_range: returned when nothing is hit in range or the ray leaves the grid
    :return: the ranges
    :raises BlockedPositionError: when an origin lies outside the grid
    """
    xs, ys, az = (np.array(values, dtype=float).ravel() for values in np.broadcast_arrays(x, y, azimuths))
    ox, oy = grid.origin
    gx = (xs - ox) / grid.resolution
    gy = (ys - oy) / grid.resolution
    cols = np.floor(gx).astype(np.intp)
    rows = np.floor(gy).astype(np.intp)
    if not grid.in_bounds(rows, cols).all():
        raise BlockedPositionError("Ray origin outside the grid")
    dx = np.cos(az)
    dy = np.sin(az)
    with np.errstate(divide="ignore"):
        delta_x = np.where(dx != 0, 1.0 / np.abs(dx), np.inf)
        delta_y = np.where(dy != 0, 1.0 / np.abs(dy), np.inf)
    step_x = np.where(dx > 0, 1, -1)
    step_y = np.where(dy > 0, 1, -1)
    next_x = np.where(dx > 0, (cols + 1 - gx) * delta_x, np.where(dx < 0, (gx - cols) * delta_x, np.inf))
    next_y = np.where(dy > 0, (rows + 1 - gy) * delta_y, np.where(dy < 0, (gy - rows) * delta_y, np.inf))

    ranges = np.full(xs.shape, float(max_range))
    start_hit = grid.occupied[rows, cols]
    ranges[start_hit] = 0.0
    active = ~start_hit
    limit = max_range / grid.resolution
    while active.any():
        use_x = next_x < next_y
        travelled = np.where(use_x, next_x, next_y)
        cols = np.where(active & use_x, cols + step_x, cols)
        rows = np.where(active & ~use_x, rows + step_y, rows)
        next_x = np.where(active & use_x, next_x + delta_x, next_x)
        next_y = np.where(active & ~use_x, next_y + delta_y, next_y)
        escaped = active & ((travelled > limit) | ~grid.in_bounds(rows, cols))
        active &= ~escaped
        hit = np.zeros_like(active)
        hit[active] = grid.occupied[rows[active], cols[active]]
        ranges[hit] = travelled[hit] * grid.resolution
        active &= ~hit
    return ranges


def raycast(
    grid: OccupancyGrid,
    origin: tuple[float, float],
    azimuth: float,
    max_range: float = DEFAULT_MAX_RANGE,
) -> float:
    """
    Distance along one ray to the first occupied cell, 0 when the origin cell is occupied
    """
    return float(raycast_many(grid, origin[0], origin[1], azimuth, max_range)[0])


def lidar_azimuths(n_bins: int) -> NDArray[np.float64]:
    """Robot frame centre azimuth of every scan bin, bin 0 starting at -pi"""
    return -np.pi + (np.arange(n_bins) + 0.5) * (2.0 * np.pi / n_bins)


def simulate_lidar(
    grid: OccupancyGrid,
    pose: Pose,
    n_bins: int = 180,
    max_range: float = DEFAULT_MAX_RANGE,
) -> NDArray[np.float64]:
    """
    One raycast per bin centre around the robot
    :return: n_bins ranges in [0, max_range]
    """
    return raycast_many(grid, pose.x, pose.y, pose.theta + lidar_azimuths(n_bins), max_range)


def collides_many(
    grid: OccupancyGrid,
    x: ArrayLike,
    y: ArrayLike,
    robot_radius: float = DEFAULT_ROBOT_RADIUS,
) -> NDArray[np.bool_]:
    """
    Disc versus occupied cell test for many positions. A conservatively inflated grid clears most positions, the
    rest get the exact disc to rectangle distance test.
    """
    xs, ys = (np.array(values, dtype=float).ravel() for values in np.broadcast_arrays(x, y))
    rows, cols = grid.cell_of(xs, ys)
    half_diagonal = _SQRT2 / 2.0
    coarse = inflate(grid, robot_radius + half_diagonal * grid.resolution)
    inside = grid.in_bounds(rows, cols)
    result = ~inside
    candidates = np.flatnonzero(inside)
    candidates = candidates[coarse[rows[candidates], cols[candidates]]]
    if candidates.size == 0:
        return result
    reach = math.ceil(robot_radius / grid.resolution) + 1
    offsets = np.arange(-reach, reach + 1)
    near_rows = rows[candidates, None, None] + offsets[None, :, None]
    near_cols = cols[candidates, None, None] + offsets[None, None, :]
    ox, oy = grid.origin
    # distance from the point to each neighbouring cell rectangle
    left = ox + near_cols * grid.resolution
    bottom = oy + near_rows * grid.resolution
    px = xs[candidates, None, None]
    py = ys[candidates, None, None]
    gap_x = np.maximum(np.maximum(left - px, px - left - grid.resolution), 0.0)
    gap_y = np.maximum(np.maximum(bottom - py, py - bottom - grid.resolution), 0.0)
    touching = np.hypot(gap_x, gap_y) < robot_radius
    occupied = grid.is_occupied_cell(near_rows, near_cols)
    result[candidates] = (touching & occupied).any(axis=(1, 2))
    return result


def collision_check(grid: OccupancyGrid, pose: Pose, robot_radius: float = DEFAULT_ROBOT_RADIUS) -> bool:
    """
    True iff an occupied cell, or the outside of the grid, intersects the robot disc
    """
    return bool(collides_many(grid, pose.x, pose.y, robot_radius)[0])


def _graph(grid: OccupancyGrid, robot_radius: float) -> csr_matrix:
    key = ("graph", robot_radius)
    if key in grid._cache:
        return grid._cache[key]
    free = ~inflate(grid, robot_radius)
    height, width = free.shape
    index = np.arange(height * width).reshape(height, width)
    sources, targets, weights = [], [], []
    for d_row, d_col, cost in ((0, 1, 1.0), (1, 0, 1.0), (1, 1, _SQRT2), (1, -1, _SQRT2)):
        row_slice_a = slice(0, height - d_row)
        row_slice_b = slice(d_row, height)
        col_slice_a = slice(max(0, -d_col), width - max(0, d_col))
        col_slice_b = slice(max(0, d_col), width - max(0, -d_col))
        linked = free[row_slice_a, col_slice_a] & free[row_slice_b, col_slice_b]
        if d_row and d_col:
            # no corner cutting: both orthogonal neighbours must be free as well
            linked &= free[row_slice_b, col_slice_a] & free[row_slice_a, col_slice_b]
        sources.append(index[row_slice_a, col_slice_a][linked])
        targets.append(index[row_slice_b, col_slice_b][linked])
        weights.append(np.full(int(linked.sum()), cost * grid.resolution))
    graph = coo_matrix(
        (np.concatenate(weights), (np.concatenate(sources), np.concatenate(targets))),
        shape=(height * width, height * width),
    ).tocsr()
    grid._cache[key] = graph
    return graph


def _free_cell(grid: OccupancyGrid, point: Sequence[float], robot_radius: float) -> tuple[int, int]:
    rows, cols = grid.cell_of(point[0], point[1])
    row, col = int(rows), int(cols)
    if not grid.in_bounds(row, col) or inflate(grid, robot_radius)[row, col]:
        raise BlockedPositionError(f"Position ({point[0]:.3f}, {point[1]:.3f}) is blocked for radius {robot_radius}")
    return row, col


def distance_field(grid: OccupancyGrid, source: tuple[int, int], robot_radius: float) -> NDArray[np.float64]:
    """
    Shortest 8-connected path length in metres from a source cell to every cell, inf where unreachable
    """
    distances = dijkstra(_graph(grid, robot_radius), directed=False, indices=source[0] * grid.width + source[1])
    return distances.reshape(grid.height, grid.width)


def geodesic_distance(
    grid: OccupancyGrid,
    a: Sequence[float],
    b: Sequence[float],
    robot_radius: float = DEFAULT_ROBOT_RADIUS,
) -> float:
    """
    Obstacle aware distance between two free positions: the 8-connected path length between their cells on the
    inflated grid, and never less than the straight line distance.
    :return: metres, or UNREACHABLE when the positions are not connected
    :raises BlockedPositionError: when a or b is inside an inflated obstacle
    """
    cell_a = _free_cell(grid, a, robot_radius)
    cell_b = _free_cell(grid, b, robot_radius)
    path_length = float(distance_field(grid, cell_a, robot_radius)[cell_b])
    if math.isinf(path_length):
        return UNREACHABLE
    return max(path_length, math.hypot(b[0] - a[0], b[1] - a[1]))


class GeodesicField:
    """
    Geodesic distance to one goal, answered for any position from a single shortest path tree
    """

    def __init__(self, grid: OccupancyGrid, goal: Sequence[float], robot_radius: float = DEFAULT_ROBOT_RADIUS) -> None:
        self._grid = grid
        self._goal = (float(goal[0]), float(goal[1]))
        self._field = distance_field(grid, _free_cell(grid, goal, robot_radius), robot_radius)
        self._reach = 2

    def distance(self, x: float, y: float) -> float:
        """
        Shortest route through one of the nearby cell centres, and never less than the straight line distance
        :return: metres, UNREACHABLE when no nearby cell connects to the goal
        """
        rows, cols = self._grid.cell_of(x, y)
        offsets = np.arange(-self._reach, self._reach + 1)
        near_rows = (int(rows) + offsets[:, None]) * np.ones_like(offsets)[None, :]
        near_cols = (int(cols) + offsets[None, :]) * np.ones_like(offsets)[:, None]
        inside = self._grid.in_bounds(near_rows, near_cols)
        center_x, center_y = self._grid.cell_center(near_rows[inside], near_cols[inside])
        routes = self._field[near_rows[inside], near_cols[inside]] + np.hypot(center_x - x, center_y - y)
        best = float(routes.min()) if routes.size else UNREACHABLE
        if math.isinf(best):
            return UNREACHABLE
        return max(best, math.hypot(self._goal[0] - x, self._goal[1] - y))


def _line_of_sight(
    grid: OccupancyGrid,
    start: tuple[float, float],
    end: tuple[float, float],
    blocked: NDArray[np.bool_],
) -> bool:
    length = math.hypot(end[0] - start[0], end[1] - start[1])
    samples = max(2, math.ceil(length / (grid.resolution / 4.0)) + 1)
    fractions = np.linspace(0.0, 1.0, samples)
    rows, cols = grid.cell_of(start[0] + fractions * (end[0] - start[0]), start[1] + fractions * (end[1] - start[1]))
    inside = grid.in_bounds(rows, cols)
    return bool(inside.all() and not blocked[rows, cols].any())


def shortest_path(
    grid: OccupancyGrid,
    a: Sequence[float],
    b: Sequence[float],
    robot_radius: float = DEFAULT_ROBOT_RADIUS,
) -> list[tuple[float, float]]:
    """
    Shortest cell path from a to b, simplified by greedy line of sight shortcutting on the inflated grid
    :return: waypoints starting at a and ending at b
    :raises UnreachableGoalError: when no path exists
    """
    cell_a = _free_cell(grid, a, robot_radius)
    cell_b = _free_cell(grid, b, robot_radius)
    source = cell_a[0] * grid.width + cell_a[1]
    target = cell_b[0] * grid.width + cell_b[1]
    distances, predecessors = dijkstra(
        _graph(grid, robot_radius),
        directed=False,
        indices=source,
        return_predecessors=True,
    )
    if math.isinf(distances[target]):
        raise UnreachableGoalError(f"No path from ({a[0]:.3f}, {a[1]:.3f}) to ({b[0]:.3f}, {b[1]:.3f})")
    chain = [target]
    while chain[-1] != source:
        chain.append(int(predecessors[chain[-1]]))
    chain.reverse()
    centers_x, centers_y = grid.cell_center(np.array(chain) // grid.width, np.array(chain) % grid.width)
    points = [(float(a[0]), float(a[1]))]
    points.extend(zip(centers_x[1:-1].tolist(), centers_y[1:-1].tolist(), strict=True))
    points.append((float(b[0]), float(b[1])))
    blocked = inflate(grid, robot_radius)
    waypoints = [points[0]]
    anchor = 0
    while anchor < len(points) - 1:
        reach = anchor + 1
        while reach + 1 < len(points) and _line_of_sight(grid, points[anchor], points[reach + 1], blocked):
            reach += 1
        waypoints.append(points[reach])
        anchor = reach
    return waypoints


def path_length(waypoints: Sequence[Sequence[float]]) -> float:
    """Sum of segment lengths"""
    if len(waypoints) < 2:
        return 0.0
    points = np.asarray(waypoints, dtype=float)
    return float(np.hypot(*np.diff(points, axis=0).T).sum())


def main_component(grid: OccupancyGrid, robot_radius: float = DEFAULT_ROBOT_RADIUS) -> NDArray[np.bool_]:
    """
    The largest 4-connected region of free cell centres on the inflated grid
    """
    labels, count = ndimage.label(~inflate(grid, robot_radius))
    if count == 0:
        return np.zeros(grid.occupied.shape, dtype=bool)
    sizes = np.bincount(labels.ravel())[1:]
    return labels == (int(np.argmax(sizes)) + 1)


def _component_stats(occupied: NDArray[np.bool_], structure: NDArray[np.bool_]) -> tuple[int, int]:
    free = ~ndimage.binary_dilation(occupied, structure=structure, border_value=1)
    labels, count = ndimage.label(free)
    if count == 0:
        return 0, 0
    sizes = np.bincount(labels.ravel())[1:]
    return int(sizes.max()), int(free.sum())


def generate_rooms(
    seed: int,
    width: float,
    height: float,
    resolution: float = DEFAULT_RESOLUTION,
    clutter: float = 0.1,
    robot_radius: float = DEFAULT_ROBOT_RADIUS,
) -> OccupancyGrid:
    """
    Procedural indoor world: a 2 cell thick outer wall; when clutter is positive, 1 to 4 parallel internal walls each
    with a door of at least 0.9 m, and rectangular boxes until the requested share of the interior is covered.
    Boxes that would disconnect free space, or shrink the main free region below half the area, are rejected.
    :param seed: world seed
    :param width: metres along x
    :param height: metres along y
    :param resolution: metres per cell
    :param clutter: target share of the interior covered by boxes, 0 for an empty room
    :param robot_radius: radius used for the connectivity guarantee
    :return: the world
    :raises InfeasibleWorldError: when the parameters cannot produce a connected world
    """
    if width <= 0 or height <= 0 or resolution <= 0 or clutter < 0:
        raise InfeasibleWorldError("World dimensions and resolution must be positive and clutter non negative")
    rng = derive_rng(seed, "rooms")
    cols, rows = round(width / resolution), round(height / resolution)
    thickness = WALL_THICKNESS_CELLS
    if min(rows, cols) <= 2 * thickness:
        raise InfeasibleWorldError("World is too small to hold its outer walls")
    occupied = np.zeros((rows, cols), dtype=bool)
    occupied[:thickness] = occupied[-thickness:] = True
    occupied[:, :thickness] = occupied[:, -thickness:] = True
    if clutter > 0:
        _add_internal_walls(occupied, rng, resolution, thickness)
    structure = _disc_offsets(robot_radius / resolution)
    main, free_total = _component_stats(occupied, structure)
    if main < MIN_FREE_FRACTION * occupied.size:
        raise InfeasibleWorldError("World is too small for the robot to move in")
    if clutter > 0:
        _add_clutter(occupied, rng, resolution, thickness, clutter, structure, (main, free_total))
    logger.debug("Generated %sx%s world for seed %s", cols, rows, seed)
    return OccupancyGrid(occupied, resolution, (0.0, 0.0))


def _add_internal_walls(
    occupied: NDArray[np.bool_],
    rng: np.random.Generator,
    resolution: float,
    thickness: int,
) -> None:
    transposed = occupied.shape[0] > occupied.shape[1]
    view = occupied.T if transposed else occupied
    span_rows, span_cols = view.shape
    interior = span_rows - 2 * thickness
    door = math.ceil(rng.uniform(MIN_DOOR_WIDTH, MIN_DOOR_WIDTH + 0.3) / resolution)
    if door > interior:
        raise InfeasibleWorldError(f"Door of {door} cells does not fit a wall of {interior} cells")
    min_room = math.ceil(1.5 / resolution)
    walls = int(rng.integers(1, 4, endpoint=True))
    while walls > 1 and (span_cols - 2 * thickness - walls * thickness) // (walls + 1) < min_room:
        walls -= 1
    room = (span_cols - 2 * thickness - walls * thickness) / (walls + 1)
    if room < min_room:
        return
    for index in range(walls):
        jitter = int(rng.integers(-int(room // 4), int(room // 4), endpoint=True))
        col = thickness + round((index + 1) * room + index * thickness) + jitter
        view[:, col : col + thickness] = True
        start = thickness + int(rng.integers(0, interior - door, endpoint=True))
        view[start : start + door, col : col + thickness] = False


def _add_clutter(
    occupied: NDArray[np.bool_],
    rng: np.random.Generator,
    resolution: float,
    thickness: int,
    clutter: float,
    structure: NDArray[np.bool_],
    stats: tuple[int, int],
) -> None:
    rows, cols = occupied.shape
    target = clutter * (rows - 2 * thickness) * (cols - 2 * thickness)
    covered = 0
    main, free_total = stats
    attempts = 0
    low, high = max(1, round(0.2 / resolution)), max(2, round(0.8 / resolution))
    while covered < target and attempts < 200:
        attempts += 1
        box_rows, box_cols = (int(value) for value in rng.integers(low, high, size=2, endpoint=True))
        top = int(rng.integers(thickness, max(thickness, rows - thickness - box_rows), endpoint=True))
        left = int(rng.integers(thickness, max(thickness, cols - thickness - box_cols), endpoint=True))
        candidate = occupied.copy()
        candidate[top : top + box_rows, left : left + box_cols] = True
        new_main, new_free = _component_stats(candidate, structure)
        # no new pockets: every free cell lost from the main region must be covered by the box itself
        if new_main < MIN_FREE_FRACTION * occupied.size or free_total - new_free != main - new_main:
            continue
        added = int(candidate.sum() - occupied.sum())
        occupied[:] = candidate
        covered += added
        main, free_total = new_main, new_free


def sample_episodes(
    grid: OccupancyGrid,
    count: int,
    rng: np.random.Generator,
    grid_ref: str = "",
    id_prefix: str = "episode",
    min_geodesic: float = 3.0,
    max_geodesic: float = 12.0,
    robot_radius: float = DEFAULT_ROBOT_RADIUS,
) -> list[Episode]:
    """
    Sample start and goal cell centres in the main free region with geodesic distance inside the given range
    :return: the episodes, ids ``<prefix>-000`` ...
    :raises InfeasibleWorldError: when the world holds no pair in range
    """
    region = main_component(grid, robot_radius)
    cells = np.argwhere(region)
    if cells.size == 0:
        raise InfeasibleWorldError("World has no free space")
    episodes = []
    for index in range(count):
        for _ in range(100):
            start_row, start_col = cells[int(rng.integers(len(cells)))]
            distances = distance_field(grid, (int(start_row), int(start_col)), robot_radius)
            start_x, start_y = grid.cell_center(start_row, start_col)
            goal_x, goal_y = grid.cell_center(cells[:, 0], cells[:, 1])
            geodesic = np.maximum(distances[cells[:, 0], cells[:, 1]], np.hypot(goal_x - start_x, goal_y - start_y))
            in_range = np.flatnonzero((geodesic >= min_geodesic) & (geodesic <= max_geodesic))
            if in_range.size:
                break
        else:
            raise InfeasibleWorldError(f"No start and goal pair within [{min_geodesic}, {max_geodesic}] m")
        choice = in_range[int(rng.integers(in_range.size))]
        episodes.append(
            Episode(
                id=f"{id_prefix}-{index:03d}",
                grid=grid_ref,
                start=(float(start_x), float(start_y), float(rng.uniform(-np.pi, np.pi))),
                goal=(float(goal_x[choice]), float(goal_y[choice])),
                geodesic_start_goal=float(geodesic[choice]),
            ),
        )
    return episodes
