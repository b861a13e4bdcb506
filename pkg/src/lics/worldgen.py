"""Procedural generation of BARN-style cluttered occupancy-grid worlds.

Worlds are square rooms enclosed by walls, filled with cellular-automaton
clutter, with a start pose near the bottom edge and a goal point near the
top edge. Generation retries new clutter layouts until the start and goal
are connected through free space after inflating obstacles by the robot's
clearance radius.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConnectivityFailure, InvalidConfig, NoPath, ParseError
from .grid import astar_cells, inflate_occupancy

# Clearance radii in meters, sized for the default 0.50 x 0.43 footprint:
# circumscribed radius hypot(0.25, 0.215) ~= 0.330 m. Generation checks
# connectivity at a slightly larger radius than the planner's default
# inflation (circumradius + 0.05) so generated worlds are always plannable.
CIRCUMSCRIBED_RADIUS = math.hypot(0.25, 0.215)
GENERATION_CLEARANCE = 0.56

RETRY_BUDGET = 100


@dataclass(frozen=True)
class WorldgenConfig:
    seed: int
    fill_probability: float = 0.42
    smoothing_iterations: int = 2
    width: int = 30
    height: int = 30
    resolution: float = 0.15
    corridor_margin: float = 0.45

    def validate(self) -> None:
        if not (0.0 <= self.fill_probability <= 1.0):
            raise InvalidConfig(f"fill_probability {self.fill_probability} not in [0, 1]")
        if self.width < 10 or self.height < 10:
            raise InvalidConfig(f"grid {self.width}x{self.height} smaller than 10x10")
        if self.smoothing_iterations < 0:
            raise InvalidConfig("smoothing_iterations must be >= 0")
        if self.resolution <= 0:
            raise InvalidConfig("resolution must be positive")
        if self.corridor_margin < 0:
            raise InvalidConfig("corridor_margin must be >= 0")


@dataclass
class World:
    id: str
    resolution: float
    width: int
    height: int
    cells: np.ndarray  # bool, shape (height, width), [iy, ix], iy=0 at smallest y
    start_pose: tuple[float, float, float]
    goal_point: tuple[float, float]
    shortest_path_length: float | None = None

    def __post_init__(self) -> None:
        self.cells = np.asarray(self.cells, dtype=bool)
        if self.cells.shape != (self.height, self.width):
            raise InvalidConfig(
                f"cells shape {self.cells.shape} != ({self.height}, {self.width})"
            )

    @property
    def extent(self) -> tuple[float, float]:
        """World size (x_max, y_max) in meters."""
        return self.width * self.resolution, self.height * self.resolution

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        ix = int(math.floor(x / self.resolution))
        iy = int(math.floor(y / self.resolution))
        return ix, iy

    def center_of(self, ix: int, iy: int) -> tuple[float, float]:
        return (ix + 0.5) * self.resolution, (iy + 0.5) * self.resolution

    def in_bounds(self, x: float, y: float) -> bool:
        ex, ey = self.extent
        return 0.0 <= x < ex and 0.0 <= y < ey

    def occupied_at(self, x: float, y: float) -> bool:
        """Occupancy at a world point; everything outside counts occupied."""
        if not self.in_bounds(x, y):
            return True
        ix, iy = self.cell_of(x, y)
        return bool(self.cells[iy, ix])


def _smooth(occ: np.ndarray) -> np.ndarray:
    """One majority-rule pass; cells beyond the border count as occupied."""
    padded = np.pad(occ, 1, constant_values=True).astype(np.int64)
    count = (
        padded[:-2, :-2] + padded[:-2, 1:-1] + padded[:-2, 2:]
        + padded[1:-1, :-2] + padded[1:-1, 2:]
        + padded[2:, :-2] + padded[2:, 1:-1] + padded[2:, 2:]
    )
    return count >= 5


def _clear_disk(occ: np.ndarray, cx: float, cy: float, radius: float, res: float) -> None:
    h, w = occ.shape
    xs = (np.arange(w) + 0.5) * res
    ys = (np.arange(h) + 0.5) * res
    dist2 = (xs[None, :] - cx) ** 2 + (ys[:, None] - cy) ** 2
    inside = dist2 <= radius * radius
    inside[0, :] = inside[-1, :] = False
    inside[:, 0] = inside[:, -1] = False
    occ[inside] = False


def _endpoint_cells(cfg: WorldgenConfig) -> tuple[tuple[int, int], tuple[int, int]]:
    # keep the endpoints outside the inflated border walls
    wall_margin = int(math.floor(GENERATION_CLEARANCE / cfg.resolution)) + 1
    margin_cells = max(3, wall_margin, int(math.ceil(cfg.corridor_margin / cfg.resolution)))
    sx = cfg.width // 2
    sy = margin_cells
    gy = cfg.height - 1 - margin_cells
    return (sx, sy), (sx, gy)


def generate_world(cfg: WorldgenConfig) -> World:
    """Generate one world; identical cfg (seed included) gives identical output.

    Clutter layouts are redrawn internally (up to RETRY_BUDGET times) until
    the inflated start-goal connectivity check passes; an over-dense config
    raises ConnectivityFailure once the budget is exhausted.
    """
    cfg.validate()
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(cfg.seed, 0x77C0)))
    res = cfg.resolution
    (scx, scy), (gcx, gcy) = _endpoint_cells(cfg)
    start_xy = ((scx + 0.5) * res, (scy + 0.5) * res)
    goal_xy = ((gcx + 0.5) * res, (gcy + 0.5) * res)

    clearance_cells = GENERATION_CLEARANCE / res
    for _ in range(RETRY_BUDGET):
        occ = rng.random((cfg.height, cfg.width)) < cfg.fill_probability
        for _ in range(cfg.smoothing_iterations):
            occ = _smooth(occ)
        occ[0, :] = occ[-1, :] = True
        occ[:, 0] = occ[:, -1] = True
        _clear_disk(occ, *start_xy, cfg.corridor_margin, res)
        _clear_disk(occ, *goal_xy, cfg.corridor_margin, res)

        blocked = inflate_occupancy(occ, clearance_cells)
        if blocked[scy, scx] or blocked[gcy, gcx]:
            continue
        try:
            path, cost = astar_cells(blocked, (scx, scy), (gcx, gcy))
        except NoPath:
            continue
        world = World(
            id=f"w{cfg.seed:05d}",
            resolution=res,
            width=cfg.width,
            height=cfg.height,
            cells=occ,
            start_pose=(start_xy[0], start_xy[1], math.pi / 2),
            goal_point=goal_xy,
        )
        world.shortest_path_length = shortest_path_length(world, CIRCUMSCRIBED_RADIUS)
        return world
    raise ConnectivityFailure(
        f"no connected layout after {RETRY_BUDGET} attempts (seed={cfg.seed},"
        f" fill={cfg.fill_probability})"
    )


def shortest_path_length(world: World, footprint_radius: float) -> float:
    """Length in meters of the cheapest 8-connected start-goal path on the
    grid inflated by footprint_radius. Stores the value on the world."""
    blocked = inflate_occupancy(world.cells, footprint_radius / world.resolution)
    start = world.cell_of(world.start_pose[0], world.start_pose[1])
    goal = world.cell_of(*world.goal_point)
    _, cost = astar_cells(blocked, start, goal)
    length = cost * world.resolution
    world.shortest_path_length = length
    return length


def split_worlds(
    worlds: list[World], train_fraction: float = 234.0 / 300.0, seed: int = 0
) -> tuple[list[World], list[World]]:
    """Disjoint, exhaustive, seed-deterministic train/test partition."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, 0x5917)))
    order = rng.permutation(len(worlds))
    n_train = int(math.ceil(len(worlds) * train_fraction - 1e-9))
    train_idx = sorted(order[:n_train].tolist())
    test_idx = sorted(order[n_train:].tolist())
    return [worlds[i] for i in train_idx], [worlds[i] for i in test_idx]


# --- text codec -------------------------------------------------------------
#
# UTF-8 text: `key: value` header lines (id, resolution, width, height,
# start "x y theta", goal "x y", lstar), one blank line, then `height` rows
# of `width` chars, '#' occupied and '.' free, first row = smallest y.

def world_to_text(world: World) -> str:
    lines = [
        f"id: {world.id}",
        f"resolution: {world.resolution!r}",
        f"width: {world.width}",
        f"height: {world.height}",
        f"start: {world.start_pose[0]!r} {world.start_pose[1]!r} {world.start_pose[2]!r}",
        f"goal: {world.goal_point[0]!r} {world.goal_point[1]!r}",
        f"lstar: {world.shortest_path_length!r}",
        "",
    ]
    for iy in range(world.height):
        row = world.cells[iy]
        lines.append("".join("#" if c else "." for c in row))
    return "\n".join(lines) + "\n"


def world_from_text(text: str) -> World:
    lines = text.splitlines()
    header: dict[str, str] = {}
    i = 0
    for i, line in enumerate(lines):
        if line.strip() == "":
            break
        if ":" not in line:
            raise ParseError(f"line {i + 1}: expected 'key: value', got {line!r}")
        key, value = line.split(":", 1)
        header[key.strip()] = value.strip()
    else:
        raise ParseError("missing blank line between header and grid")

    def need(key: str) -> str:
        if key not in header:
            raise ParseError(f"missing header field {key!r}")
        return header[key]

    try:
        width = int(need("width"))
        height = int(need("height"))
        resolution = float(need("resolution"))
        start = tuple(float(v) for v in need("start").split())
        goal = tuple(float(v) for v in need("goal").split())
        lstar_raw = need("lstar")
        lstar = None if lstar_raw == "None" else float(lstar_raw)
    except ValueError as exc:
        raise ParseError(f"bad header value: {exc}") from exc
    if len(start) != 3:
        raise ParseError(f"start must be 'x y theta', got {header['start']!r}")
    if len(goal) != 2:
        raise ParseError(f"goal must be 'x y', got {header['goal']!r}")

    grid_rows = [r for r in lines[i + 1:] if r.strip() != ""]
    if len(grid_rows) != height:
        raise ParseError(f"expected {height} grid rows, found {len(grid_rows)}")
    cells = np.zeros((height, width), dtype=bool)
    for iy, row in enumerate(grid_rows):
        if len(row) != width:
            raise ParseError(
                f"grid row {iy}: expected {width} chars, found {len(row)}"
            )
        for ix, ch in enumerate(row):
            if ch == "#":
                cells[iy, ix] = True
            elif ch != ".":
                raise ParseError(f"grid row {iy}: bad char {ch!r}")
    return World(
        id=need("id"),
        resolution=resolution,
        width=width,
        height=height,
        cells=cells,
        start_pose=(start[0], start[1], start[2]),
        goal_point=(goal[0], goal[1]),
        shortest_path_length=lstar,
    )


def save_world(world: World, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(world_to_text(world))


def load_world(path) -> World:
    with open(path, "r", encoding="utf-8") as f:
        return world_from_text(f.read())
