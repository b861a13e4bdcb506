import math

import numpy as np
import pytest

from lics.errors import DegenerateGoal, NoPath
from lics.planning import (
    LETHAL,
    Costmap,
    Path,
    extract_local_goal,
    inflate,
    plan_astar,
)
from lics.worldgen import World, WorldgenConfig, generate_world

from oracles import dijkstra_cost, inflate_bruteforce


def world_from(cells, res=1.0) -> World:
    cells = np.asarray(cells, dtype=bool)
    h, w = cells.shape
    return World("t", res, w, h, cells, (0.5, 0.5, 0.0), (w - 0.5, h - 0.5))


# --- inflation ----------------------------------------------------------------

def test_inflate_radius_zero_equals_occupancy():
    rng = np.random.default_rng(0)
    cells = rng.random((12, 12)) < 0.2
    cm = inflate(world_from(cells), 0.0)
    assert (cm.lethal == cells).all()


def test_inflate_single_cell_plus_shape():
    cells = np.zeros((9, 9), dtype=bool)
    cells[4, 4] = True
    cm = inflate(world_from(cells), 1.0)  # radius == resolution
    lethal = cm.lethal
    expect = np.zeros((9, 9), dtype=bool)
    for dx, dy in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
        expect[4 + dy, 4 + dx] = True  # diagonals at 1.414 res excluded
    assert (lethal == expect).all()


def test_inflate_huge_radius_all_lethal():
    cells = np.zeros((8, 8), dtype=bool)
    cells[0, 0] = True
    cm = inflate(world_from(cells), 8 * math.sqrt(2.0))
    assert cm.lethal.all()


def test_inflate_matches_bruteforce_in_meters():
    rng = np.random.default_rng(4)
    cells = rng.random((14, 14)) < 0.12
    world = world_from(cells, res=0.15)
    radius = 0.4
    cm = inflate(world, radius)
    assert (cm.lethal == inflate_bruteforce(cells, radius / 0.15)).all()
    assert (cm.codes[cells] == LETHAL).all()  # lethal superset of occupied


# --- A* -----------------------------------------------------------------------

def test_astar_empty_diagonal():
    cm = inflate(world_from(np.zeros((3, 3), dtype=bool)), 0.0)
    path = plan_astar(cm, (0, 0), (2, 2))
    assert path.cost == pytest.approx(2 * math.sqrt(2.0))
    assert path.points.shape == (3, 2)
    assert tuple(path.points[0]) == (0.5, 0.5)
    assert tuple(path.points[-1]) == (2.5, 2.5)


def test_astar_start_equals_goal():
    cm = inflate(world_from(np.zeros((4, 4), dtype=bool)), 0.0)
    path = plan_astar(cm, (1, 1), (1, 1))
    assert path.cost == 0.0
    assert path.points.shape == (1, 2)


def test_astar_no_path():
    cells = np.zeros((5, 5), dtype=bool)
    cells[:, 2] = True
    cm = inflate(world_from(cells), 0.0)
    with pytest.raises(NoPath):
        plan_astar(cm, (0, 0), (4, 4))


def test_astar_matches_dijkstra_on_100_random_maps():
    rng = np.random.default_rng(11)
    solved = 0
    for _ in range(100):
        cells = rng.random((30, 30)) < 0.22
        cells[0, 0] = cells[-1, -1] = False
        cm = inflate(world_from(cells), 0.0)
        want = dijkstra_cost(cells, (0, 0), (29, 29))
        try:
            path = plan_astar(cm, (0, 0), (29, 29))
        except NoPath:
            assert math.isinf(want)
            continue
        assert path.cost == pytest.approx(want, abs=1e-9)
        solved += 1
        steps = np.diff(path.points, axis=0)
        assert (np.hypot(steps[:, 0], steps[:, 1]) <= math.sqrt(2.0) + 1e-9).all()
    assert solved >= 50


# --- local goal ---------------------------------------------------------------

def test_local_goal_picks_first_beyond_lookahead():
    # robot at origin facing +x; candidates at 0.5, 1.5, 2.5 m
    path = Path(np.array([[0.5, 0.0], [1.5, 0.0], [2.5, 0.0]]))
    lg = extract_local_goal(path, (0.0, 0.0, 0.0), 2.0)
    assert lg.point == pytest.approx((2.5, 0.0))
    assert lg.unit == pytest.approx((1.0, 0.0))
    assert not lg.fallback


def test_local_goal_single_point_sideways():
    path = Path(np.array([[0.0, 3.0]]))
    lg = extract_local_goal(path, (0.0, 0.0, 0.0), 2.0)
    assert lg.point == pytest.approx((0.0, 3.0))
    assert lg.unit == pytest.approx((0.0, 1.0))
    assert not lg.fallback


def test_local_goal_fallback_when_path_short():
    path = Path(np.array([[0.2, 0.0], [0.5, 0.1], [0.9, -0.2]]))
    lg = extract_local_goal(path, (0.0, 0.0, 0.0), 2.0)
    assert lg.fallback
    assert lg.point == pytest.approx((0.9, -0.2))


def test_local_goal_degenerate():
    path = Path(np.array([[1.0, 1.0]]))
    with pytest.raises(DegenerateGoal):
        extract_local_goal(path, (1.0, 1.0, 0.3), 2.0)


def test_local_goal_respects_robot_frame():
    # robot at (1, 1) facing +y: a world point ahead should appear at +x
    path = Path(np.array([[1.0, 4.0]]))
    lg = extract_local_goal(path, (1.0, 1.0, math.pi / 2), 2.0)
    assert lg.point == pytest.approx((3.0, 0.0), abs=1e-12)
    assert lg.unit == pytest.approx((1.0, 0.0), abs=1e-12)


def _random_case(rng):
    k = rng.integers(2, 20)
    pts = rng.uniform(-8.0, 8.0, size=(k, 2))
    pose = (rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-math.pi, math.pi))
    return Path(pts), pose


def test_local_goal_invariants_1000_random_cases():
    rng = np.random.default_rng(123)
    checked = 0
    for _ in range(1000):
        path, pose = _random_case(rng)
        try:
            lg = extract_local_goal(path, pose, 2.0)
        except DegenerateGoal:
            continue
        assert math.hypot(*lg.unit) == pytest.approx(1.0, abs=1e-9)
        if not lg.fallback:
            assert lg.distance >= 2.0 - 1e-12
        checked += 1
    assert checked > 950


def test_local_goal_rigid_transform_equivariance():
    rng = np.random.default_rng(321)
    for _ in range(1000):
        path, pose = _random_case(rng)
        try:
            base = extract_local_goal(path, pose, 2.0)
        except DegenerateGoal:
            continue
        ang = rng.uniform(-math.pi, math.pi)
        tx, ty = rng.uniform(-5, 5, size=2)
        c, s = math.cos(ang), math.sin(ang)
        pts = path.points
        moved = np.stack([c * pts[:, 0] - s * pts[:, 1] + tx,
                          s * pts[:, 0] + c * pts[:, 1] + ty], axis=1)
        moved_pose = (
            c * pose[0] - s * pose[1] + tx,
            s * pose[0] + c * pose[1] + ty,
            pose[2] + ang,
        )
        lg = extract_local_goal(Path(moved), moved_pose, 2.0)
        assert lg.point == pytest.approx(base.point, abs=1e-9)
        assert lg.unit == pytest.approx(base.unit, abs=1e-9)
        assert lg.fallback == base.fallback


def test_local_goal_tie_prefers_smallest_index():
    # two candidates at exactly the same distance
    path = Path(np.array([[0.0, 2.5], [2.5, 0.0]]))
    lg = extract_local_goal(path, (0.0, 0.0, 0.0), 2.0)
    assert lg.point == pytest.approx((0.0, 2.5))


def test_planner_on_generated_world():
    world = generate_world(WorldgenConfig(seed=5))
    cm = inflate(world, 0.38)
    start = cm.cell_of(world.start_pose[0], world.start_pose[1])
    goal = cm.cell_of(*world.goal_point)
    path = plan_astar(cm, start, goal)
    assert path.cost > 0
    assert tuple(path.points[-1]) == pytest.approx(cm.center_of(*goal))
