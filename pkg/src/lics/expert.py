"""Expert-policy interface and the velocity-space reference expert.

The reference expert samples the dynamic window (velocities reachable
within one control period), simulates each pair as a constant arc out to
the travel-plus-braking distance, discards pairs that collide with the
scan, and scores the rest by goal alignment, clearance, and speed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .planning import LocalGoal
from .safety import scan_to_points
from .simulator import Footprint, LidarConfig, LidarScan, VelocityLimits


@dataclass(frozen=True)
class Action:
    v: float
    w: float

    def as_tuple(self) -> tuple[float, float]:
        return self.v, self.w


@dataclass(frozen=True)
class Observation:
    scan: LidarScan
    lidar: LidarConfig
    local_goal: LocalGoal
    v: float
    w: float
    footprint: Footprint
    limits: VelocityLimits
    # privileged short-lookahead path point for expert steering; the learned
    # policy never sees it (its goal input is local_goal at the full
    # lookahead, as recorded)
    pursuit: LocalGoal | None = None

    def steering_goal(self) -> LocalGoal:
        return self.pursuit if self.pursuit is not None else self.local_goal


class ExpertPolicy:
    """Deterministic mapping from an observation to an action."""

    name: str = "expert"

    def act(self, obs: Observation) -> Action:
        raise NotImplementedError


@dataclass(frozen=True)
class DwaConfig:
    n_v: int = 11
    n_w: int = 21
    horizon: float = 1.5
    control_period: float = 0.1
    heading_weight: float = 0.8
    clearance_weight: float = 0.5
    speed_weight: float = 0.2
    clearance_cap: float = 0.5
    recovery_omega: float = 1.0
    arc_samples: int = 15
    beam_stride: int = 2  # evaluate every k-th beam, kept mirror-symmetric
    lateral_pad: float = 0.01  # covers the skipped-beam gap at close range
    stop_buffer: float = 0.06  # stopped nose-to-obstacle distance to keep
    full_window: bool = False  # sample the full velocity space, not the
    # one-period reachable window; reachability is enforced by the simulator


def _sym_linspace(lo: float, hi: float, n: int) -> np.ndarray:
    """Evenly spaced samples built so the grid of the mirrored window
    (-hi, -lo) is the exact bitwise negation of this one, reversed."""
    if n == 1:
        return np.array([(lo + hi) / 2.0])
    mid = (lo + hi) / 2.0
    half = (hi - lo) / 2.0
    j = np.arange(n, dtype=np.int64)
    unit = (2 * j - (n - 1)).astype(float) / float(n - 1)
    return np.clip(mid + unit * half, lo, hi)


def _wrap_sym(a: np.ndarray) -> np.ndarray:
    """Wrap to (-pi, pi] with exact odd symmetry: wrap(-a) == -wrap(a)."""
    return np.arctan2(np.sin(a), np.cos(a))


def _decimated_points(obs: Observation, stride: int) -> np.ndarray:
    """Scan points from every `stride`-th beam. The kept index set is
    symmetric under beam reversal so mirrored observations see mirrored
    points exactly."""
    ranges = obs.scan.ranges
    n = ranges.shape[0]
    if stride > 1:
        idx = np.arange(n)
        keep = (np.minimum(idx, n - 1 - idx) % stride) == 0
        ranges = ranges[keep]
        angles = obs.lidar.angles()[keep]
    else:
        angles = obs.lidar.angles()
    hit = ranges < obs.scan.max_range - 1e-9
    r = ranges[hit]
    a = angles[hit]
    mx, my = obs.lidar.mount_offset
    return np.stack([mx + r * np.cos(a), my + r * np.sin(a)], axis=1)


def _sweep_arcs(vv, ww, points, fp: Footprint, horizon, a_max, arc_samples, lateral_pad):
    """Swept-rectangle collision and clearance for constant-twist arcs.

    Returns (first_hit_time, min_dist, xs, ys, tau): the arc time of the
    first sample whose (padded) body rectangle contains a point (inf when
    clean), the minimum body-frame clearance over the window, and the
    sampled positions/times, shape (n_cand, arc_samples)."""
    n_cand = vv.shape[0]
    half_l = fp.length / 2.0
    half_w = fp.width / 2.0
    brake_time = np.abs(vv) / (2.0 * a_max)
    total_time = horizon + brake_time
    k = np.arange(1, arc_samples + 1, dtype=float) / arc_samples
    tau = total_time[:, None] * k[None, :]
    ang = ww[:, None] * tau
    straight = np.abs(ww) < 1e-12
    safe_w = np.where(straight, 1.0, ww)
    r_turn = vv / safe_w
    xs = np.where(straight[:, None], vv[:, None] * tau, r_turn[:, None] * np.sin(ang))
    ys = np.where(straight[:, None], 0.0, r_turn[:, None] * (1.0 - np.cos(ang)))

    # pads bridge the arc sampling stride (translation and corner rotation)
    # and the skipped beams
    step_len = (np.abs(vv) * total_time) / arc_samples
    spin = 0.5 * (np.abs(ww) * total_time / arc_samples) * math.hypot(half_l, half_w)
    pad_x = half_l + 0.5 * step_len + spin + lateral_pad
    pad_y = half_w + spin + lateral_pad
    min_dist = np.full(n_cand, np.inf)
    first_hit = np.full(n_cand, np.inf)
    if points.shape[0]:
        px = points[:, 0]
        py = points[:, 1]
        for s in range(arc_samples):
            c = np.cos(ang[:, s])[:, None]
            sn = np.sin(ang[:, s])[:, None]
            dx = px[None, :] - xs[:, s, None]
            dy = py[None, :] - ys[:, s, None]
            bx = np.abs(c * dx + sn * dy)
            by = np.abs(-sn * dx + c * dy)
            hit = ((bx <= pad_x[:, None]) & (by <= pad_y[:, None])).any(axis=1)
            first_hit = np.where(np.isinf(first_hit) & hit, tau[:, s], first_hit)
            ex = np.maximum(bx - half_l, 0.0)
            ey = np.maximum(by - half_w, 0.0)
            d = np.sqrt(ex * ex + ey * ey).min(axis=1)
            min_dist = np.minimum(min_dist, d)
    return first_hit, min_dist, xs, ys, tau


def _recovery_action(obs: Observation, cfg: DwaConfig, points) -> Action:
    """Escape cascade when no moving window candidate is admissible.

    While still rolling the only sound response is a straight emergency stop:
    the executed trajectory follows the current velocity, not the command,
    so rotating or reversing would sweep an unchecked path. From standstill:
    rotate toward the goal, rotate away, back up slowly; each vetted against
    the scan with the same swept-body test."""
    if abs(obs.v) > 0.05 or abs(obs.w) > 0.3:
        return Action(0.0, 0.0)
    side = obs.steering_goal().point[1]
    sgn = math.copysign(1.0, side if side != 0 else 1.0)
    w_rec = cfg.recovery_omega * sgn
    # rotate free if possible; otherwise back away, preferring the reverse
    # arc that swings the nose toward the goal side
    candidates = ((0.0, w_rec), (0.0, -w_rec),
                  (-0.15, 0.3 * sgn), (-0.15, -0.3 * sgn), (-0.15, 0.0))
    vv = np.array([c[0] for c in candidates])
    ww = np.array([c[1] for c in candidates])
    first_hit, _, _, _, _ = _sweep_arcs(
        vv, ww, points, obs.footprint, cfg.horizon / 2.0,
        obs.limits.a_max, cfg.arc_samples, cfg.lateral_pad)
    for (v, w), hit in zip(candidates, first_hit):
        if math.isinf(hit):
            return Action(v, w)
    return Action(0.0, w_rec)


def dwa_expert_action(obs: Observation, cfg: DwaConfig = DwaConfig()) -> Action:
    limits = obs.limits
    dt = cfg.control_period
    if cfg.full_window:
        # sample the whole admissible velocity space: the command is a
        # target the simulator ramps toward, and a velocity-independent
        # expert is far easier to behavior-clone
        v_lo, v_hi = 0.0, limits.v_max
        w_lo, w_hi = -limits.w_max, limits.w_max
    else:
        v_lo = max(0.0, obs.v - limits.a_max * dt)
        v_hi = min(limits.v_max, obs.v + limits.a_max * dt)
        w_lo = max(-limits.w_max, obs.w - limits.alpha_max * dt)
        w_hi = min(limits.w_max, obs.w + limits.alpha_max * dt)
    v_grid = _sym_linspace(v_lo, v_hi, cfg.n_v)
    w_grid = _sym_linspace(w_lo, w_hi, cfg.n_w)

    goal = np.asarray(obs.steering_goal().point, dtype=float)
    fp = obs.footprint
    points = _decimated_points(obs, cfg.beam_stride)
    reach = v_hi * cfg.horizon + v_hi * v_hi / (2.0 * limits.a_max)
    cull = reach + fp.circumradius + cfg.clearance_cap + 0.5
    if points.shape[0]:
        points = points[np.hypot(points[:, 0], points[:, 1]) <= cull]

    vv, ww = np.meshgrid(v_grid, w_grid, indexing="ij")
    vv = vv.ravel()
    ww = ww.ravel()
    n_cand = vv.shape[0]

    first_hit, min_dist, xs, ys, tau = _sweep_arcs(
        vv, ww, points, fp, cfg.horizon, limits.a_max,
        cfg.arc_samples, cfg.lateral_pad)
    total_time = cfg.horizon + np.abs(vv) / (2.0 * limits.a_max)
    # admissible: the robot can run this velocity for one control period and
    # still stop a buffer short of the first obstacle on the arc; the buffer
    # converts to time through the effective body speed (linear or corner)
    stop_time = dt + np.maximum(np.abs(vv) / (2.0 * limits.a_max),
                                np.abs(ww) / (2.0 * limits.alpha_max))
    eff_speed = np.maximum.reduce([np.abs(vv), np.abs(ww) * fp.circumradius,
                                   np.full_like(vv, 0.05)])
    buffer_time = cfg.stop_buffer / eff_speed
    admissible = first_hit > stop_time + buffer_time

    # crawling or spinning in place cannot make progress: escape (rotate
    # clear or back away) once everything above walking pace is blocked
    if not (admissible & (vv > 0.08)).any():
        return _recovery_action(obs, cfg, points)

    # heading: mix of (a) how the end-of-arc heading aligns with the current
    # goal bearing and (b) how close the arc passes to the goal. Plain
    # alignment rewards spinning in place; end-point distance throttles arcs
    # that overshoot a near goal, so the pass distance is what counts.
    rows = np.arange(n_cand)
    frac = np.clip(cfg.horizon / total_time, 0.0, 1.0)
    end_col = np.clip(np.ceil(frac * cfg.arc_samples).astype(int) - 1, 0, cfg.arc_samples - 1)
    eth = ww * tau[rows, end_col]
    bearing = math.atan2(goal[1], goal[0])
    err = np.abs(_wrap_sym(bearing - eth))
    align = 1.0 - err / math.pi
    d_now = math.hypot(goal[0], goal[1])
    d_pass = np.hypot(goal[0] - xs, goal[1] - ys).min(axis=1)
    d_pass = np.minimum(d_pass, d_now)
    gain = (d_now - d_pass) / max(v_hi * float(total_time.max()), 1e-9)
    approach = np.clip(0.5 + 0.5 * gain, 0.0, 1.0)
    heading = 0.5 * align + 0.5 * approach

    clearance = np.clip(min_dist, 0.0, cfg.clearance_cap) / cfg.clearance_cap
    # normalized over the reachable window so accelerating from rest is not
    # drowned out by the clearance term (the classic window normalization)
    speed = vv / max(v_hi, 1e-9)

    score = (cfg.heading_weight * heading
             + cfg.clearance_weight * clearance
             + cfg.speed_weight * speed)
    score[~admissible] = -np.inf

    side = obs.steering_goal().point[1]
    side_sign = 1.0 if side > 0 else (-1.0 if side < 0 else 0.0)
    # selection keys, best first: score, then v, then |w|, then goal-side w
    order = np.lexsort((-ww * side_sign, np.abs(ww), -vv, -score))
    best = order[0]
    return Action(float(vv[best]), float(ww[best]))


class DwaExpert(ExpertPolicy):
    name = "dwa"

    def __init__(self, cfg: DwaConfig = DwaConfig()):
        self.cfg = cfg

    def act(self, obs: Observation) -> Action:
        return dwa_expert_action(obs, self.cfg)
