"""Differential-drive kinematics, 2D LiDAR raycasting, collision checks and
drifting odometry over an occupancy-grid world.

All functions are pure: a simulation session owns its state objects and may
run alongside any number of other sessions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

import numpy as np

from .errors import OutOfBounds

if TYPE_CHECKING:
    from .worldgen import World

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    elif a > math.pi:
        a -= TWO_PI
    return a


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    theta: float
    v: float = 0.0
    w: float = 0.0
    t: float = 0.0

    @property
    def pose(self) -> tuple[float, float, float]:
        return self.x, self.y, self.theta


@dataclass(frozen=True)
class Footprint:
    """Rectangular body centered on the axle midpoint; length along robot x."""
    length: float = 0.50
    width: float = 0.43

    def __post_init__(self) -> None:
        if self.length <= 0 or self.width <= 0:
            raise ValueError("footprint dimensions must be positive")

    @property
    def circumradius(self) -> float:
        return math.hypot(self.length / 2.0, self.width / 2.0)


@dataclass(frozen=True)
class VelocityLimits:
    v_max: float = 2.0
    w_max: float = 3.14
    a_max: float = 2.0
    alpha_max: float = 6.0

    def clamp(self, v: float, w: float) -> tuple[float, float]:
        return (
            min(max(v, -self.v_max), self.v_max),
            min(max(w, -self.w_max), self.w_max),
        )


@dataclass(frozen=True)
class LidarConfig:
    beam_count: int = 720
    angle_min: float = -math.pi
    angle_max: float = math.pi
    max_range: float = 20.0
    mount_offset: tuple[float, float] = (0.0, 0.0)

    def angles(self) -> np.ndarray:
        """Beam angles in the robot frame, endpoints inclusive."""
        return np.linspace(self.angle_min, self.angle_max, self.beam_count)


@dataclass(frozen=True)
class LidarScan:
    ranges: np.ndarray
    max_range: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "ranges", np.asarray(self.ranges, dtype=float))


def step_dynamics(
    state: RobotState,
    cmd: tuple[float, float],
    dt: float,
    limits: VelocityLimits,
) -> RobotState:
    """Advance one step: clamp the command to velocity and acceleration
    limits, then integrate the pose along the exact constant-twist arc."""
    v_cmd, w_cmd = limits.clamp(cmd[0], cmd[1])
    dv = limits.a_max * dt
    dw = limits.alpha_max * dt
    v = min(max(v_cmd, state.v - dv), state.v + dv)
    w = min(max(w_cmd, state.w - dw), state.w + dw)

    if abs(w) < 1e-9:
        x = state.x + v * dt * math.cos(state.theta)
        y = state.y + v * dt * math.sin(state.theta)
        theta = state.theta
    else:
        r = v / w
        theta1 = state.theta + w * dt
        x = state.x + r * (math.sin(theta1) - math.sin(state.theta))
        y = state.y - r * (math.cos(theta1) - math.cos(state.theta))
        theta = wrap_angle(theta1)
    return RobotState(x=x, y=y, theta=theta, v=v, w=w, t=state.t + dt)


def render_scan(world: World, pose: tuple[float, float, float], cfg: LidarConfig) -> LidarScan:
    """Raycast every beam through the occupancy grid (DDA traversal).

    Beam i leaves the sensor mount at angle_min + i*step in the robot frame;
    its range is the distance to the first occupied cell, clipped to
    max_range when nothing is hit before the ray leaves the grid.
    """
    x, y, theta = pose
    mx, my = cfg.mount_offset
    ox = x + mx * math.cos(theta) - my * math.sin(theta)
    oy = y + mx * math.sin(theta) + my * math.cos(theta)
    if not world.in_bounds(ox, oy):
        raise OutOfBounds(f"sensor origin ({ox:.3f}, {oy:.3f}) outside world")

    res = world.resolution
    h, w = world.cells.shape
    n = cfg.beam_count
    ang = cfg.angles() + theta
    dirx = np.cos(ang)
    diry = np.sin(ang)

    # grid coordinates in cell units
    cx = ox / res
    cy = oy / res
    ix = np.full(n, int(cx), dtype=np.int64)
    iy = np.full(n, int(cy), dtype=np.int64)

    hit_t = np.full(n, np.inf)
    if world.cells[int(cy), int(cx)]:
        # sensor starts inside an obstacle; report near-zero ranges
        return LidarScan(np.full(n, 1e-6), cfg.max_range)

    with np.errstate(divide="ignore", invalid="ignore"):
        inv_dx = 1.0 / dirx
        inv_dy = 1.0 / diry
        step_x = np.where(dirx > 0, 1, -1)
        step_y = np.where(diry > 0, 1, -1)
        t_delta_x = np.abs(inv_dx)
        t_delta_y = np.abs(inv_dy)
        next_vx = np.where(dirx > 0, ix + 1.0, ix * 1.0)
        next_vy = np.where(diry > 0, iy + 1.0, iy * 1.0)
        t_max_x = np.where(dirx != 0, (next_vx - cx) * inv_dx, np.inf)
        t_max_y = np.where(diry != 0, (next_vy - cy) * inv_dy, np.inf)

    active = np.ones(n, dtype=bool)
    max_t_cells = cfg.max_range / res
    for _ in range(w + h + 2):
        if not active.any():
            break
        go_x = active & (t_max_x <= t_max_y)
        go_y = active & ~go_x
        t_enter = np.where(go_x, t_max_x, t_max_y)
        ix = ix + np.where(go_x, step_x, 0)
        iy = iy + np.where(go_y, step_y, 0)
        t_max_x = t_max_x + np.where(go_x, t_delta_x, 0.0)
        t_max_y = t_max_y + np.where(go_y, t_delta_y, 0.0)

        inside = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
        active = active & inside & (t_enter < max_t_cells)
        occ = np.zeros(n, dtype=bool)
        occ[active] = world.cells[iy[active], ix[active]]
        newly_hit = active & occ
        hit_t[newly_hit] = t_enter[newly_hit]
        active = active & ~occ

    ranges = np.where(np.isfinite(hit_t), hit_t * res, cfg.max_range)
    ranges = np.clip(ranges, 1e-6, cfg.max_range)
    return LidarScan(ranges, cfg.max_range)


def resample_scan(scan: LidarScan, beam_count: int) -> LidarScan:
    """Linearly resample a scan over normalized beam index; endpoints are
    preserved exactly."""
    n_in = scan.ranges.shape[0]
    if n_in < 2 or beam_count < 2:
        raise ValueError("resampling needs at least 2 beams on both sides")
    if beam_count == n_in:
        return LidarScan(scan.ranges.copy(), scan.max_range)
    src = np.arange(n_in, dtype=float)
    dst = np.linspace(0.0, n_in - 1.0, beam_count)
    return LidarScan(np.interp(dst, src, scan.ranges), scan.max_range)


def footprint_corners(pose: tuple[float, float, float], fp: Footprint) -> np.ndarray:
    x, y, theta = pose
    c, s = math.cos(theta), math.sin(theta)
    hl, hw = fp.length / 2.0, fp.width / 2.0
    local = np.array([[hl, hw], [hl, -hw], [-hl, -hw], [-hl, hw]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([x, y])


def footprint_collides(world: World, pose: tuple[float, float, float], fp: Footprint) -> bool:
    """True iff the oriented body rectangle overlaps an occupied cell.

    Area outside the grid counts as occupied. Exact separating-axis test
    between the rectangle and each candidate cell square.
    """
    corners = footprint_corners(pose, fp)
    ex, ey = world.extent
    if (corners[:, 0] < 0).any() or (corners[:, 0] > ex).any() \
            or (corners[:, 1] < 0).any() or (corners[:, 1] > ey).any():
        return True

    res = world.resolution
    x0 = int(math.floor(corners[:, 0].min() / res))
    x1 = int(math.floor(corners[:, 0].max() / res))
    y0 = int(math.floor(corners[:, 1].min() / res))
    y1 = int(math.floor(corners[:, 1].max() / res))
    x0 = max(x0, 0)
    y0 = max(y0, 0)
    x1 = min(x1, world.width - 1)
    y1 = min(y1, world.height - 1)

    block = world.cells[y0:y1 + 1, x0:x1 + 1]
    if not block.any():
        return False
    byy, bxx = np.nonzero(block)
    cxs = (bxx + x0 + 0.5) * res
    cys = (byy + y0 + 0.5) * res

    x, y, theta = pose
    c, s = math.cos(theta), math.sin(theta)
    hl, hw = fp.length / 2.0, fp.width / 2.0
    half = res / 2.0
    dx = cxs - x
    dy = cys - y
    # separating axes: grid x, grid y, robot x, robot y
    rot_extent_x = hl * abs(c) + hw * abs(s)
    rot_extent_y = hl * abs(s) + hw * abs(c)
    cell_extent_r = half * (abs(c) + abs(s))
    overlap = (
        (np.abs(dx) <= rot_extent_x + half)
        & (np.abs(dy) <= rot_extent_y + half)
        & (np.abs(dx * c + dy * s) <= hl + cell_extent_r)
        & (np.abs(-dx * s + dy * c) <= hw + cell_extent_r)
    )
    return bool(overlap.any())


# --- drifting odometry -------------------------------------------------------

@dataclass(frozen=True)
class OdomDriftState:
    """Pose estimate accumulated from noise-corrupted wheel motion."""
    sigma_v: float
    sigma_w: float
    estimate: tuple[float, float, float] | None = None
    last_true: tuple[float, float, float] | None = None


def _compose(pose: tuple[float, float, float], delta: tuple[float, float, float]):
    x, y, th = pose
    dx, dy, dth = delta
    c, s = math.cos(th), math.sin(th)
    return (x + c * dx - s * dy, y + s * dx + c * dy, wrap_angle(th + dth))


def _relative(a: tuple[float, float, float], b: tuple[float, float, float]):
    """Delta taking pose a to pose b, expressed in a's frame."""
    ax, ay, ath = a
    bx, by, bth = b
    c, s = math.cos(ath), math.sin(ath)
    dx, dy = bx - ax, by - ay
    return (c * dx + s * dy, -s * dx + c * dy, wrap_angle(bth - ath))


def _twist_delta(v: float, w: float, dt: float) -> tuple[float, float, float]:
    if abs(w) < 1e-9:
        return (v * dt, 0.0, w * dt)
    r = v / w
    return (r * math.sin(w * dt), r * (1.0 - math.cos(w * dt)), w * dt)


def read_odometry(
    true_state: RobotState,
    drift: OdomDriftState,
    rng: np.random.Generator,
    dt: float,
) -> tuple[tuple[float, float, float], OdomDriftState]:
    """Advance the odometry estimate by the true motion since the last call,
    corrupted by a zero-mean Gaussian twist on (v, w). With zero noise scale
    the estimate reproduces the ground-truth trajectory exactly."""
    true_pose = true_state.pose
    if drift.estimate is None or drift.last_true is None:
        new = replace(drift, estimate=true_pose, last_true=true_pose)
        return true_pose, new
    if drift.sigma_v == 0.0 and drift.sigma_w == 0.0:
        new = replace(drift, estimate=true_pose, last_true=true_pose)
        return true_pose, new

    delta = _relative(drift.last_true, true_pose)
    est = _compose(drift.estimate, delta)
    nv = drift.sigma_v * rng.standard_normal()
    nw = drift.sigma_w * rng.standard_normal()
    est = _compose(est, _twist_delta(nv, nw, dt))
    new = replace(drift, estimate=est, last_true=true_pose)
    return est, new
