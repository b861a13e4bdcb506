"""Low-level occupancy-grid operations shared by world generation and planning.

Grids are boolean numpy arrays of shape (height, width), indexed [iy, ix],
with iy = 0 at the smallest y. A cell (ix, iy) spans
[ix*res, (ix+1)*res) x [iy*res, (iy+1)*res) in world coordinates.
"""
from __future__ import annotations

import heapq
import math

import numpy as np

from .errors import NoPath

SQRT2 = math.sqrt(2.0)

# 8-connected moves as (dx, dy, cost)
_MOVES = (
    (1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
    (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2),
)


def disk_offsets(radius_cells: float) -> np.ndarray:
    """Integer offsets (di, dj) whose Euclidean length is <= radius_cells."""
    r = int(math.floor(radius_cells + 1e-9))
    offs = []
    for di in range(-r, r + 1):
        for dj in range(-r, r + 1):
            if di * di + dj * dj <= radius_cells * radius_cells + 1e-12:
                offs.append((di, dj))
    return np.asarray(offs, dtype=np.int64)


def inflate_occupancy(occ: np.ndarray, radius_cells: float) -> np.ndarray:
    """Dilate occupied cells by a Euclidean disk measured center-to-center."""
    if radius_cells <= 0:
        return occ.copy()
    h, w = occ.shape
    out = occ.copy()
    iy, ix = np.nonzero(occ)
    for di, dj in disk_offsets(radius_cells):
        ny = iy + di
        nx = ix + dj
        keep = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
        out[ny[keep], nx[keep]] = True
    return out


def _octile(ax: int, ay: int, bx: int, by: int) -> float:
    dx = abs(ax - bx)
    dy = abs(ay - by)
    return (dx + dy) + (SQRT2 - 2.0) * min(dx, dy)


def astar_cells(
    blocked: np.ndarray,
    start: tuple[int, int],
    goal: tuple[int, int],
) -> tuple[list[tuple[int, int]], float]:
    """Minimum-cost 8-connected path over non-blocked cells.

    Straight moves cost 1, diagonal moves sqrt(2); a diagonal step is
    forbidden when both neighbouring straight cells are blocked (no corner
    cutting). Ties are broken by heap-insertion order, which makes the
    returned path deterministic.

    Returns (path as [(ix, iy), ...], cost in cell units). Raises NoPath.
    """
    h, w = blocked.shape
    sx, sy = start
    gx, gy = goal
    if not (0 <= sx < w and 0 <= sy < h and 0 <= gx < w and 0 <= gy < h):
        raise NoPath(f"start {start} or goal {goal} outside {w}x{h} grid")
    if blocked[sy, sx] or blocked[gy, gx]:
        raise NoPath(f"start {start} or goal {goal} is blocked")

    g_cost = np.full((h, w), np.inf)
    g_cost[sy, sx] = 0.0
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    counter = 0
    open_heap: list[tuple[float, int, int, int]] = []
    heapq.heappush(open_heap, (_octile(sx, sy, gx, gy), counter, sx, sy))

    while open_heap:
        f, _, cx, cy = heapq.heappop(open_heap)
        if (cx, cy) == (gx, gy):
            path = [(cx, cy)]
            while (cx, cy) != (sx, sy):
                cx, cy = parent[(cx, cy)]
                path.append((cx, cy))
            path.reverse()
            return path, float(g_cost[gy, gx])
        if f - _octile(cx, cy, gx, gy) > g_cost[cy, cx] + 1e-12:
            continue  # stale heap entry
        for dx, dy, cost in _MOVES:
            nx, ny = cx + dx, cy + dy
            if not (0 <= nx < w and 0 <= ny < h) or blocked[ny, nx]:
                continue
            if dx != 0 and dy != 0 and blocked[cy, nx] and blocked[ny, cx]:
                continue
            tentative = g_cost[cy, cx] + cost
            if tentative < g_cost[ny, nx] - 1e-12:
                g_cost[ny, nx] = tentative
                parent[(nx, ny)] = (cx, cy)
                counter += 1
                heapq.heappush(
                    open_heap,
                    (tentative + _octile(nx, ny, gx, gy), counter, nx, ny),
                )
    raise NoPath(f"no route from {start} to {goal}")


def has_path(blocked: np.ndarray, start: tuple[int, int], goal: tuple[int, int]) -> bool:
    try:
        astar_cells(blocked, start, goal)
        return True
    except NoPath:
        return False
