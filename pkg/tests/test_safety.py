import math

import numpy as np
import pytest

from lics.safety import (
    LINEAR,
    RADIAL,
    ROTATION,
    STATIONARY,
    SafetyConfig,
    check_action,
    check_linear,
    check_radial,
    check_rotation,
    classify_motion,
    filter_action,
    scan_to_points,
)
from lics.simulator import Footprint, LidarConfig, LidarScan

from oracles import swept_footprint_unsafe

CFG = SafetyConfig()


# --- scan projection ------------------------------------------------------------

def test_point_straight_ahead():
    cfg = LidarConfig(beam_count=3, angle_min=-1.0, angle_max=1.0, max_range=20.0)
    scan = LidarScan(np.array([20.0, 2.0, 20.0]), 20.0)
    pts = scan_to_points(scan, cfg)
    assert pts.shape == (1, 2)
    assert pts[0] == pytest.approx((2.0, 0.0), abs=1e-12)


def test_all_beams_max_range_empty():
    cfg = LidarConfig(beam_count=16)
    scan = LidarScan(np.full(16, cfg.max_range), cfg.max_range)
    assert scan_to_points(scan, cfg).shape == (0, 2)


def test_beam_at_plus_90():
    cfg = LidarConfig(beam_count=3, angle_min=0.0, angle_max=math.pi / 2, max_range=10.0)
    scan = LidarScan(np.array([10.0, 10.0, 1.0]), 10.0)
    pts = scan_to_points(scan, cfg)
    assert pts[0] == pytest.approx((0.0, 1.0), abs=1e-12)


# --- motion classes --------------------------------------------------------------

@pytest.mark.parametrize("v,w,expect", [
    (1.0, 0.0, LINEAR),
    (1.0, 0.5, RADIAL),
    (0.0, 1.0, ROTATION),
    (0.0, 0.0, STATIONARY),
    (1.0, 1e-4, LINEAR),       # below eps_omega
    (-0.5, -2.0, RADIAL),
])
def test_classify_motion(v, w, expect):
    assert classify_motion(v, w, 1e-3) == expect


# --- linear check -----------------------------------------------------------------

LIN_CFG = SafetyConfig(footprint=Footprint(0.5, 0.4), horizon=2.0, a_max=2.0, margin=0.0)


def test_linear_point_in_corridor_unsafe():
    v = check_linear(np.array([[1.0, 0.1]]), 0.5, LIN_CFG)
    assert not v.safe
    assert v.offending.shape == (1, 2)


def test_linear_lateral_clearance_safe():
    v = check_linear(np.array([[1.0, 0.5]]), 0.5, LIN_CFG)
    assert v.safe and v.offending.shape == (0, 2)


def test_linear_point_behind_safe():
    v = check_linear(np.array([[-0.5, 0.0]]), 0.5, LIN_CFG)
    assert v.safe


def test_linear_reverse_motion():
    v = check_linear(np.array([[-0.5, 0.0]]), -0.5, LIN_CFG)
    assert not v.safe
    assert check_linear(np.array([[0.5, 0.0]]), -0.5, LIN_CFG).safe


def test_linear_range_bound_travel_plus_braking():
    # v=1, horizon 1 s, braking 1/4 m: reach = l/2 + 1.25
    cfg = SafetyConfig(footprint=Footprint(0.5, 0.4), horizon=1.0, a_max=2.0, margin=0.0)
    assert not check_linear(np.array([[0.25 + 1.25 - 0.01, 0.0]]), 1.0, cfg).safe
    assert check_linear(np.array([[0.25 + 1.25 + 0.01, 0.0]]), 1.0, cfg).safe


# --- radial check -----------------------------------------------------------------

def test_radial_radii_match_hand_computation():
    cfg = SafetyConfig(footprint=Footprint(0.5, 0.4), margin=0.0)
    v = check_radial(np.zeros((0, 2)), 1.0, 1.0, cfg)
    assert v.inner_radius == pytest.approx(0.8)
    assert v.outer_radius == pytest.approx(math.sqrt(1.5025), abs=1e-12)


def test_radial_point_opposite_sweep_safe():
    cfg = SafetyConfig(footprint=Footprint(0.5, 0.4), horizon=0.2, a_max=2.0, margin=0.0)
    # center (0, 1); point diametrically opposite the robot, inside the annulus
    v = check_radial(np.array([[0.0, 2.0]]), 1.0, 1.0, cfg)
    assert v.safe


def test_radial_tight_turn_clamps_inner_radius():
    cfg = SafetyConfig(footprint=Footprint(0.5, 0.4), margin=0.0)
    v = check_radial(np.zeros((0, 2)), 0.1, 1.0, cfg)
    assert v.inner_radius == 0.0


def test_radial_point_on_path_unsafe():
    cfg = SafetyConfig(footprint=Footprint(0.5, 0.43))
    # left turn at 1 m/s around center (0, 1); the body passes through the
    # arc point at sweep angle 0.6 rad
    p = np.array([[math.sin(0.6), 1.0 - math.cos(0.6)]])
    v = check_radial(p, 1.0, 1.0, cfg)
    assert not v.safe
    assert swept_footprint_unsafe(p, 1.0, 1.0, 0.5, 0.43, cfg.horizon, cfg.a_max)


# --- rotation in place -------------------------------------------------------------

def test_rotation_disk():
    r = CFG.footprint.circumradius
    assert not check_rotation(np.array([[r - 0.01, 0.0]]), CFG).safe
    assert check_rotation(np.array([[r + CFG.margin + 0.01, 0.0]]), CFG).safe


# --- randomized oracle equivalence --------------------------------------------------


def random_case(rng, cfg):
    fp = cfg.footprint
    v = rng.uniform(0.05, 2.0) * (1.0 if rng.random() < 0.8 else -1.0)
    kind = rng.random()
    if kind < 0.25:
        w = 0.0
    else:
        w = rng.uniform(0.01, 3.14) * (1.0 if rng.random() < 0.5 else -1.0)
    n_pts = rng.integers(1, 40)
    pts = []
    while len(pts) < n_pts:
        p = rng.uniform(-4.0, 4.0, size=2)
        # the sensor never reports returns inside the robot body
        if abs(p[0]) <= fp.length / 2 + 1e-3 and abs(p[1]) <= fp.width / 2 + 1e-3:
            continue
        pts.append(p)
    return np.asarray(pts), v, w


def oracle_band_case(points, v, w, cfg, around: float):
    """True if the oracle verdict flips when the checked region grows or
    shrinks by the margin width: the case sits on the region boundary."""
    fp = cfg.footprint
    grown = swept_footprint_unsafe(points, v, w, fp.length, fp.width,
                                   cfg.horizon, cfg.a_max,
                                   inflate=around + cfg.margin)
    shrunk = swept_footprint_unsafe(points, v, w, fp.length, fp.width,
                                    cfg.horizon, cfg.a_max,
                                    inflate=around - cfg.margin)
    return grown != shrunk


def run_equivalence(n_cases, seed):
    """Compare the closed-form check against the swept-footprint oracle
    computing the same margin-grown region; also require the check to be
    conservative against the bare (margin-less) oracle."""
    cfg = SafetyConfig()
    rng = np.random.default_rng(seed)
    fp = cfg.footprint
    disagreements = 0
    out_of_band = 0
    false_safe = 0
    for _ in range(n_cases):
        points, v, w = random_case(rng, cfg)
        got = check_action(points, v, w, cfg)
        want = swept_footprint_unsafe(points, v, w, fp.length, fp.width,
                                      cfg.horizon, cfg.a_max, inflate=cfg.margin)
        bare = swept_footprint_unsafe(points, v, w, fp.length, fp.width,
                                      cfg.horizon, cfg.a_max)
        if got.safe and bare:
            false_safe += 1
        if got.safe == (not want):
            continue
        disagreements += 1
        if not oracle_band_case(points, v, w, cfg, around=cfg.margin):
            out_of_band += 1
    return disagreements, out_of_band, false_safe


def test_oracle_equivalence_2000_cases():
    disagreements, out_of_band, false_safe = run_equivalence(2000, seed=77)
    assert disagreements <= 20  # >= 99% agreement
    assert out_of_band == 0
    assert false_safe == 0  # never safe when the bare swept region is hit


def test_mirror_symmetry():
    cfg = SafetyConfig()
    rng = np.random.default_rng(5)
    for _ in range(500):
        points, v, w = random_case(rng, cfg)
        mirrored = points * np.array([1.0, -1.0])
        a = check_action(points, v, w, cfg)
        b = check_action(mirrored, v, -w, cfg)
        assert a.safe == b.safe
        assert a.motion_class == b.motion_class


def test_linear_radial_boundary_continuity():
    cfg = SafetyConfig()
    rng = np.random.default_rng(9)
    fp = cfg.footprint
    for _ in range(400):
        points, v, _ = random_case(rng, cfg)
        lin = check_linear(points, v, cfg)
        rad = check_radial(points, v, math.copysign(cfg.eps_omega, rng.uniform(-1, 1)), cfg)
        if lin.safe != rad.safe:
            # any disagreement at the class boundary must be a band case
            assert oracle_band_case(points, v, 0.0, cfg, around=cfg.margin)


# --- recovery cascade ----------------------------------------------------------------

def test_filter_passes_safe_action_through():
    pts = np.array([[3.9, 3.9]])
    (v, w), verdict = filter_action(pts, 0.5, 0.1, CFG)
    assert (v, w) == (0.5, 0.1)
    assert verdict.safe


def test_filter_wall_dead_ahead_cascades():
    pts = np.array([[0.3 + CFG.footprint.length / 2, 0.0]])
    (v, w), verdict = filter_action(pts, 1.0, 0.0, CFG, goal_side=1.0)
    assert verdict.safe
    # half speed cannot clear a 0.3 m gap with braking 1/16 m + travel: still unsafe,
    # so the cascade must have fallen through to rotation or stop
    assert (v, w) != (1.0, 0.0)
    if (v, w) == (0.5, 0.0):
        assert check_linear(pts, 0.5, CFG).safe
    else:
        assert (v, w) in ((0.0, CFG.recovery_omega), (0.0, 0.0))


def test_filter_terminal_stop():
    # points hug the body inside the rotation disk: only a stop is safe
    ring = []
    for ang in np.linspace(0, 2 * math.pi, 24, endpoint=False):
        ring.append([0.35 * math.cos(ang), 0.35 * math.sin(ang)])
    pts = np.asarray(ring)
    (v, w), verdict = filter_action(pts, 1.5, 0.5, CFG)
    assert (v, w) == (0.0, 0.0)
    assert verdict.safe and verdict.motion_class == STATIONARY


def test_verdict_offending_consistency():
    rng = np.random.default_rng(13)
    for _ in range(200):
        points, v, w = random_case(rng, CFG)
        verdict = check_action(points, v, w, CFG)
        assert verdict.safe == (verdict.offending.shape[0] == 0)
