"""Geometric safety layer vetting velocity commands against LiDAR points.

A command sweeps the rectangular footprint along a straight segment or a
circular arc over a fixed horizon plus the braking distance. A command is
unsafe when any observed point lies inside that swept region (grown by a
safety margin). Unsafe commands are replaced by the recovery cascade:
half speed at the same curvature, rotate in place toward the goal, stop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .simulator import Footprint, LidarConfig, LidarScan

STATIONARY = "stationary"
LINEAR = "linear"
RADIAL = "radial"
ROTATION = "rotation_in_place"

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SafetyConfig:
    footprint: Footprint = Footprint()
    eps_omega: float = 1e-3  # |w| at or below this counts as straight motion
    horizon: float = 1.0  # seconds of travel covered by the check
    a_max: float = 2.0  # braking deceleration used for the stopping distance
    margin: float = 0.05  # meters added around the swept footprint
    recovery_omega: float = 1.0

    def __post_init__(self) -> None:
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.margin < 0:
            raise ValueError("margin must be >= 0")


@dataclass
class SafetyVerdict:
    safe: bool
    motion_class: str
    offending: np.ndarray  # (k, 2) robot-frame points inside the region
    roi_polygon: np.ndarray  # (m, 2) robot-frame outline for display
    inner_radius: float | None = None
    outer_radius: float | None = None

    def to_json_dict(self) -> dict:
        d = {
            "safe": bool(self.safe),
            "class": self.motion_class,
            "offending": [[float(x), float(y)] for x, y in self.offending],
            "roi": [[float(x), float(y)] for x, y in self.roi_polygon],
        }
        if self.inner_radius is not None:
            d["inner_radius"] = self.inner_radius
            d["outer_radius"] = self.outer_radius
        return d


def scan_to_points(scan: LidarScan, cfg: LidarConfig) -> np.ndarray:
    """Project beams to robot-frame points; beams at max range carry no
    return and are dropped."""
    ranges = scan.ranges
    angles = cfg.angles()
    hit = ranges < cfg.max_range - 1e-9
    r = ranges[hit]
    a = angles[hit]
    mx, my = cfg.mount_offset
    return np.stack([mx + r * np.cos(a), my + r * np.sin(a)], axis=1)


def classify_motion(v: float, w: float, eps_omega: float = 1e-3) -> str:
    if abs(v) <= 1e-6 and abs(w) <= eps_omega:
        return STATIONARY
    if abs(w) <= eps_omega:
        return LINEAR
    if abs(v) <= 1e-6:
        return ROTATION
    return RADIAL


def _travel_distance(v: float, cfg: SafetyConfig) -> float:
    """Horizon travel plus stopping distance at deceleration a_max."""
    return abs(v) * cfg.horizon + v * v / (2.0 * cfg.a_max)


def _empty_verdict(motion_class: str, roi: np.ndarray) -> SafetyVerdict:
    return SafetyVerdict(True, motion_class, np.zeros((0, 2)), roi)


def check_linear(points: np.ndarray, v: float, cfg: SafetyConfig) -> SafetyVerdict:
    fp = cfg.footprint
    reach = fp.length / 2.0 + _travel_distance(v, cfg)
    half_w = fp.width / 2.0 + cfg.margin
    roi = _linear_roi(v, cfg)
    if points.shape[0] == 0:
        return _empty_verdict(LINEAR, roi)
    x = points[:, 0]
    y = points[:, 1]
    bad = (x * v > 0) & (np.abs(y) <= half_w) & (np.abs(x) <= reach)
    return SafetyVerdict(not bad.any(), LINEAR, points[bad], roi)


def _linear_roi(v: float, cfg: SafetyConfig) -> np.ndarray:
    fp = cfg.footprint
    reach = fp.length / 2.0 + _travel_distance(v, cfg)
    x0, x1 = (-fp.length / 2.0, reach) if v >= 0 else (-reach, fp.length / 2.0)
    hw = fp.width / 2.0
    return np.array([[x0, -hw], [x1, -hw], [x1, hw], [x0, hw]])


def check_radial(points: np.ndarray, v: float, w: float, cfg: SafetyConfig) -> SafetyVerdict:
    """Exact test against the footprint swept along the commanded arc.

    The turn center sits at (0, v/w) in the robot frame; the body (inflated
    by the margin) sweeps around it by the horizon rotation plus the braking
    rotation. A point is inside the swept region iff it lies in the start or
    end rectangle, or its backward-rotated arc crosses a rectangle edge.
    """
    fp = cfg.footprint
    yc = v / w
    radius = abs(yc)
    half_l = fp.length / 2.0 + cfg.margin
    half_h = fp.width / 2.0 + cfg.margin
    r_inner = max(radius - fp.width / 2.0, 0.0)
    r_outer = math.hypot(radius + fp.width / 2.0, fp.length / 2.0)
    sweep = abs(w) * cfg.horizon + abs(w) * abs(v) / (2.0 * cfg.a_max)
    sweep = min(sweep, TWO_PI)
    sgn = 1.0 if w > 0 else -1.0
    roi = _radial_roi(yc, sgn, sweep, fp)

    if points.shape[0] == 0:
        return SafetyVerdict(True, RADIAL, np.zeros((0, 2)), roi, r_inner, r_outer)

    ux = points[:, 0]
    uy = points[:, 1] - yc
    rho = np.hypot(ux, uy)
    r_in_m = max(radius - half_h, 0.0)
    r_out_m = math.hypot(radius + half_h, half_l)
    candidate = (rho >= r_in_m) & (rho <= r_out_m)
    bad = np.zeros(points.shape[0], dtype=bool)
    if candidate.any() and sweep >= TWO_PI - 1e-12:
        bad = candidate.copy()
    elif candidate.any():
        idx = np.nonzero(candidate)[0]
        px = points[idx, 0]
        py = points[idx, 1]
        cux = ux[idx]
        cuy = uy[idx]
        crho = rho[idx]
        phi_p = np.arctan2(cuy, cux)

        # start rectangle
        inside = (np.abs(px) <= half_l) & (np.abs(py) <= half_h)
        # end rectangle: rotate the point backward by the full sweep
        ca = math.cos(sgn * sweep)
        sa = math.sin(sgn * sweep)
        qx = ca * cux + sa * cuy
        qy = -sa * cux + ca * cuy
        inside |= (np.abs(qx) <= half_l) & (np.abs(qy + yc) <= half_h)

        # arc-edge crossings
        for edge_kind, e in (("v", -half_l), ("v", half_l), ("h", -half_h), ("h", half_h)):
            if edge_kind == "v":
                disc = crho * crho - e * e
                ok = disc >= 0.0
                root = np.sqrt(np.where(ok, disc, 0.0))
                for sign_root in (1.0, -1.0):
                    wy = yc + sign_root * root
                    valid = ok & (np.abs(wy) <= half_h)
                    phi_w = np.arctan2(sign_root * root, e)
                    delta = np.mod(sgn * (phi_p - phi_w), TWO_PI)
                    inside |= valid & (delta <= sweep)
            else:
                dy_c = e - yc
                disc = crho * crho - dy_c * dy_c
                ok = disc >= 0.0
                root = np.sqrt(np.where(ok, disc, 0.0))
                for sign_root in (1.0, -1.0):
                    wx = sign_root * root
                    valid = ok & (np.abs(wx) <= half_l)
                    phi_w = np.arctan2(dy_c, wx)
                    delta = np.mod(sgn * (phi_p - phi_w), TWO_PI)
                    inside |= valid & (delta <= sweep)
        bad[idx] = inside
    return SafetyVerdict(not bad.any(), RADIAL, points[bad], roi, r_inner, r_outer)


def _radial_roi(yc: float, sgn: float, sweep: float, fp: Footprint, arc_steps: int = 24) -> np.ndarray:
    """Polygon outline of the swept region for display."""
    half_l, half_h = fp.length / 2.0, fp.width / 2.0
    corners = np.array([[half_l, -half_h], [half_l, half_h],
                        [-half_l, half_h], [-half_l, -half_h]])
    center = np.array([0.0, yc])
    gammas = np.linspace(0.0, sgn * sweep, arc_steps)
    outer_pts = []
    inner_pts = []
    rel = corners - center
    radii = np.hypot(rel[:, 0], rel[:, 1])
    i_far = int(np.argmax(radii))
    for g in gammas:
        c, s = math.cos(g), math.sin(g)
        rot = np.array([[c, -s], [s, c]])
        pts = rel @ rot.T + center
        outer_pts.append(pts[i_far])
    # inner boundary follows the near side of the body
    near = np.array([0.0, math.copysign(half_h, yc) if abs(yc) > half_h else yc])
    rel_n = near - center
    for g in gammas[::-1]:
        c, s = math.cos(g), math.sin(g)
        rot = np.array([[c, -s], [s, c]])
        inner_pts.append(rel_n @ rot.T + center)
    return np.array(outer_pts + inner_pts)


def check_rotation(points: np.ndarray, cfg: SafetyConfig) -> SafetyVerdict:
    """Rotating in place sweeps at most the circumscribed disk."""
    r = cfg.footprint.circumradius + cfg.margin
    angles = np.linspace(0.0, TWO_PI, 25)
    roi = np.stack([cfg.footprint.circumradius * np.cos(angles),
                    cfg.footprint.circumradius * np.sin(angles)], axis=1)
    if points.shape[0] == 0:
        return _empty_verdict(ROTATION, roi)
    bad = np.hypot(points[:, 0], points[:, 1]) <= r
    return SafetyVerdict(not bad.any(), ROTATION, points[bad], roi)


def check_action(points: np.ndarray, v: float, w: float, cfg: SafetyConfig) -> SafetyVerdict:
    cls = classify_motion(v, w, cfg.eps_omega)
    if cls == STATIONARY:
        return _empty_verdict(STATIONARY, np.zeros((0, 2)))
    if cls == LINEAR:
        return check_linear(points, v, cfg)
    if cls == ROTATION:
        return check_rotation(points, cfg)
    return check_radial(points, v, w, cfg)


def filter_action(
    points: np.ndarray,
    v: float,
    w: float,
    cfg: SafetyConfig,
    goal_side: float = 1.0,
) -> tuple[tuple[float, float], SafetyVerdict]:
    """Return the proposed command when safe, otherwise the first safe
    recovery: same curvature at half speed, rotate in place toward the goal
    side, emergency stop. The verdict describes the returned command."""
    verdict = check_action(points, v, w, cfg)
    if verdict.safe:
        return (v, w), verdict

    half = (v / 2.0, w / 2.0)
    verdict_half = check_action(points, half[0], half[1], cfg)
    if verdict_half.safe:
        return half, verdict_half

    w_rec = math.copysign(cfg.recovery_omega, goal_side if goal_side != 0 else 1.0)
    verdict_rot = check_action(points, 0.0, w_rec, cfg)
    if verdict_rot.safe:
        return (0.0, w_rec), verdict_rot

    return (0.0, 0.0), check_action(points, 0.0, 0.0, cfg)
