"""Costmap inflation, A* global planning and local-goal extraction."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGoal
from .grid import astar_cells, inflate_occupancy
from .simulator import Footprint
from .worldgen import World

FREE = 0
INFLATED = 1
LETHAL = 2

SOFT_BAND = 0.05  # width in meters of the advisory band beyond the lethal zone


def default_inflation_radius(fp: Footprint | None = None) -> float:
    fp = fp or Footprint()
    return fp.circumradius + 0.05


@dataclass
class Costmap:
    resolution: float
    width: int
    height: int
    codes: np.ndarray  # uint8 (height, width) of FREE/INFLATED/LETHAL

    @property
    def lethal(self) -> np.ndarray:
        return self.codes == LETHAL

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return int(math.floor(x / self.resolution)), int(math.floor(y / self.resolution))

    def center_of(self, ix: int, iy: int) -> tuple[float, float]:
        return (ix + 0.5) * self.resolution, (iy + 0.5) * self.resolution


@dataclass
class Path:
    """Ordered world-frame points, consecutive points at most one cell
    diagonal apart, last point at the goal."""
    points: np.ndarray  # (k, 2)
    cost: float = 0.0  # meters

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)


@dataclass(frozen=True)
class LocalGoal:
    point: tuple[float, float]  # robot frame, meters
    unit: tuple[float, float]
    lookahead: float
    fallback: bool = False

    @property
    def distance(self) -> float:
        return math.hypot(*self.point)


def inflate(world: World, radius: float) -> Costmap:
    """Mark a cell lethal iff its center is within `radius` (Euclidean,
    center-to-center) of any occupied cell center."""
    if radius < 0:
        raise ValueError("inflation radius must be >= 0")
    cells = radius / world.resolution
    lethal = inflate_occupancy(world.cells, cells)
    soft = inflate_occupancy(world.cells, (radius + SOFT_BAND) / world.resolution)
    codes = np.zeros(world.cells.shape, dtype=np.uint8)
    codes[soft] = INFLATED
    codes[lethal] = LETHAL
    return Costmap(world.resolution, world.width, world.height, codes)


def plan_astar(costmap: Costmap, start: tuple[int, int], goal: tuple[int, int]) -> Path:
    """Minimum-cost 8-connected path over non-lethal cells, returned as
    world-frame cell-center points. Raises NoPath."""
    cells, cost = astar_cells(costmap.lethal, start, goal)
    pts = np.array([costmap.center_of(ix, iy) for ix, iy in cells])
    return Path(pts, cost * costmap.resolution)


def extract_local_goal(
    path: Path,
    pose: tuple[float, float, float],
    lookahead: float,
) -> LocalGoal:
    """Select the path point closest to the robot among those at least
    `lookahead` away (ties take the earliest path index), expressed in the
    robot frame together with its unit direction. Falls back to the final
    path point when the whole remaining path is nearer than `lookahead`."""
    if lookahead <= 0:
        raise ValueError("lookahead must be positive")
    pts = path.points
    if pts.shape[0] == 0:
        raise ValueError("empty path")
    x, y, theta = pose
    c, s = math.cos(theta), math.sin(theta)
    dx = pts[:, 0] - x
    dy = pts[:, 1] - y
    local = np.stack([c * dx + s * dy, -s * dx + c * dy], axis=1)
    dist = np.hypot(local[:, 0], local[:, 1])

    eligible = dist >= lookahead
    if eligible.any():
        idx_candidates = np.nonzero(eligible)[0]
        best = idx_candidates[int(np.argmin(dist[idx_candidates]))]
        fallback = False
    else:
        best = pts.shape[0] - 1
        fallback = True

    px, py = float(local[best, 0]), float(local[best, 1])
    d = float(dist[best])
    if d < 1e-6:
        raise DegenerateGoal("selected path point coincides with the robot")
    return LocalGoal(point=(px, py), unit=(px / d, py / d),
                     lookahead=lookahead, fallback=fallback)
