"""Closed-loop navigation session shared by demonstration recording, the
benchmark runner, and the teleop bridge.

Each tick: render a scan from the true pose, extract the local goal from the
global path using the drifting odometry estimate, let the caller pick an
action, then integrate the dynamics in fine substeps with collision checks.
The global path is replanned at a fixed cadence from the odometry estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateGoal, NoPath
from .expert import Observation
from .planning import LocalGoal, Path, extract_local_goal, inflate, plan_astar
from .simulator import (
    Footprint,
    LidarConfig,
    OdomDriftState,
    RobotState,
    VelocityLimits,
    footprint_collides,
    read_odometry,
    render_scan,
)
from .worldgen import World

RUNNING = "running"
SUCCESS = "success"
COLLISION = "collision"
TIMEOUT = "timeout"


@dataclass(frozen=True)
class SessionConfig:
    footprint: Footprint = Footprint()
    lidar: LidarConfig = LidarConfig()
    limits: VelocityLimits = VelocityLimits()
    control_rate: float = 10.0
    physics_substep: float = 0.002
    lookahead: float = 2.0
    pursuit_lookahead: float = 0.6  # expert steering reference on the path
    inflation_radius: float | None = None  # None: footprint circumradius + 0.05
    replan_period: float = 1.0
    goal_tolerance: float = 0.3
    timeout: float = 60.0
    odom_sigma_v: float = 0.05
    odom_sigma_w: float = 0.05
    collision_stride: int = 10  # substeps between collision checks

    @property
    def tick_dt(self) -> float:
        return 1.0 / self.control_rate

    def inflation(self) -> float:
        if self.inflation_radius is not None:
            return self.inflation_radius
        return self.footprint.circumradius + 0.05


class NavigationSession:
    def __init__(self, world: World, cfg: SessionConfig, rng: np.random.Generator):
        self.world = world
        self.cfg = cfg
        self.rng = rng
        sx, sy, sth = world.start_pose
        self.state = RobotState(sx, sy, sth)
        self.status = RUNNING
        self.costmap = inflate(world, cfg.inflation())
        self.path: Path | None = None
        self._drift = OdomDriftState(cfg.odom_sigma_v, cfg.odom_sigma_w)
        self.odom_pose, self._drift = read_odometry(self.state, self._drift, rng, 0.0)
        self._next_replan = 0.0
        self._replan()
        if footprint_collides(world, self.state.pose, cfg.footprint):
            self.status = COLLISION

    # -- planning ---------------------------------------------------------

    def _free_cell_near(self, ix: int, iy: int, max_ring: int = 4):
        lethal = self.costmap.lethal
        h, w = lethal.shape
        for ring in range(max_ring + 1):
            best = None
            for dy in range(-ring, ring + 1):
                for dx in range(-ring, ring + 1):
                    if max(abs(dx), abs(dy)) != ring:
                        continue
                    nx, ny = ix + dx, iy + dy
                    if 0 <= nx < w and 0 <= ny < h and not lethal[ny, nx]:
                        d = dx * dx + dy * dy
                        if best is None or d < best[0]:
                            best = (d, nx, ny)
            if best is not None:
                return best[1], best[2]
        return None

    def _replan(self) -> None:
        start = self.costmap.cell_of(self.odom_pose[0], self.odom_pose[1])
        goal = self.costmap.cell_of(*self.world.goal_point)
        start = self._free_cell_near(*start)
        goal_free = self._free_cell_near(*goal)
        if start is None or goal_free is None:
            return
        try:
            path = plan_astar(self.costmap, start, goal_free)
        except NoPath:
            return
        pts = path.points
        gx, gy = self.world.goal_point
        if math.hypot(pts[-1, 0] - gx, pts[-1, 1] - gy) > 1e-9:
            pts = np.vstack([pts, [gx, gy]])
        self.path = Path(pts, path.cost)

    # -- per-tick interface -------------------------------------------------

    def local_goal(self, lookahead: float | None = None) -> LocalGoal:
        lookahead = self.cfg.lookahead if lookahead is None else lookahead
        if self.path is None:
            # no plan: aim straight at the world goal from the estimated pose
            gx, gy = self.world.goal_point
            x, y, th = self.odom_pose
            dx, dy = gx - x, gy - y
            c, s = math.cos(th), math.sin(th)
            px, py = c * dx + s * dy, -s * dx + c * dy
            d = max(math.hypot(px, py), 1e-9)
            return LocalGoal((px, py), (px / d, py / d), lookahead, True)
        try:
            return extract_local_goal(self.path, self.odom_pose, lookahead)
        except DegenerateGoal:
            return LocalGoal((1e-6, 0.0), (1.0, 0.0), lookahead, True)

    def pursuit_goal(self) -> LocalGoal:
        """Path point a fixed arc length ahead of the nearest path point,
        in the robot frame. Unlike the straight-line local goal this never
        cuts corners, so it is the expert's steering reference."""
        ahead = self.cfg.pursuit_lookahead
        if self.path is None or self.path.points.shape[0] == 0:
            return self.local_goal(ahead)
        pts = self.path.points
        x, y, th = self.odom_pose
        d2 = (pts[:, 0] - x) ** 2 + (pts[:, 1] - y) ** 2
        i = int(np.argmin(d2))
        walked = 0.0
        while i + 1 < pts.shape[0] and walked < ahead:
            walked += math.hypot(pts[i + 1, 0] - pts[i, 0], pts[i + 1, 1] - pts[i, 1])
            i += 1
        gx, gy = pts[i]
        c, s = math.cos(th), math.sin(th)
        dx, dy = gx - x, gy - y
        px, py = c * dx + s * dy, -s * dx + c * dy
        d = max(math.hypot(px, py), 1e-9)
        return LocalGoal((px, py), (px / d, py / d), ahead,
                         fallback=i == pts.shape[0] - 1)

    def observe(self) -> Observation:
        scan = render_scan(self.world, self.state.pose, self.cfg.lidar)
        return Observation(
            scan=scan,
            lidar=self.cfg.lidar,
            local_goal=self.local_goal(),
            v=self.state.v,
            w=self.state.w,
            footprint=self.cfg.footprint,
            limits=self.cfg.limits,
            pursuit=self.pursuit_goal(),
        )

    def apply(self, v: float, w: float) -> None:
        """Execute one control tick of the commanded velocities."""
        from .simulator import step_dynamics  # local import keeps module load light

        if self.status != RUNNING:
            return
        cfg = self.cfg
        n_sub = max(1, int(round(cfg.tick_dt / cfg.physics_substep)))
        for i in range(n_sub):
            self.state = step_dynamics(self.state, (v, w), cfg.physics_substep, cfg.limits)
            if (i + 1) % cfg.collision_stride == 0 or i == n_sub - 1:
                if footprint_collides(self.world, self.state.pose, cfg.footprint):
                    self.status = COLLISION
                    return
        self.odom_pose, self._drift = read_odometry(
            self.state, self._drift, self.rng, cfg.tick_dt
        )
        gx, gy = self.world.goal_point
        if math.hypot(self.state.x - gx, self.state.y - gy) <= cfg.goal_tolerance:
            self.status = SUCCESS
            return
        if self.state.t >= cfg.timeout - 1e-9:
            self.status = TIMEOUT
            return
        if self.state.t >= self._next_replan + cfg.replan_period - 1e-9:
            self._next_replan = self.state.t
            self._replan()

    @property
    def running(self) -> bool:
        return self.status == RUNNING

    @property
    def elapsed(self) -> float:
        return self.state.t
