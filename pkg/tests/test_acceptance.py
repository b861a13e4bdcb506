"""Acceptance criteria, one test per criterion, each printing a PASS line.

The desk-scale pipeline (worlds -> demonstrations -> training -> closed-loop
benchmark) runs once as a module fixture and several criteria read from it.
Run with `pytest tests/test_acceptance.py -v -s`.
"""
import math
import time

import numpy as np
import pytest

from lics.bench import TrialResult, score_trial
from lics.demo import build_dataset, perturb_action
from lics.expert import Action, DwaExpert
from lics.grid import astar_cells
from lics.loop import SessionConfig
from lics.model import MLP, ModelConfig, backward, forward, grad_check, init_params
from lics.planning import Path, extract_local_goal, inflate, plan_astar
from lics.simulator import VelocityLimits
from lics.trainer import TrainConfig, train
from lics.worldgen import WorldgenConfig, generate_world, world_to_text
from lics.errors import DegenerateGoal, NoPath

from oracles import dijkstra_cost
from pipeline import run_pipeline
from test_safety import run_equivalence, random_case, oracle_band_case


def criterion(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def pipeline_summary(tmp_path_factory):
    workdir = tmp_path_factory.mktemp("desk_pipeline")
    return run_pipeline(str(workdir))


# --- score metric exactness ---------------------------------------------------------

def test_score_metric_exactness():
    t0 = time.monotonic()
    t_star = 5.0
    cases = [
        (TrialResult("w", "p", "success", 1.9 * t_star, 1.0), 0.5),
        (TrialResult("w", "p", "success", 3.0 * t_star, 1.0), t_star / (3.0 * t_star)),
        (TrialResult("w", "p", "collision", 2.0, 1.0), 0.0),
        (TrialResult("w", "p", "success", 100.0 * t_star, 1.0), 0.125),
    ]
    worst = max(abs(score_trial(r, t_star) - want) for r, want in cases)
    elapsed = time.monotonic() - t0
    criterion("score metric exactness", worst <= 1e-9 and elapsed < 1.0,
              f"max error {worst:.2e}, runtime {elapsed:.3f}s")


# --- gradient correctness -----------------------------------------------------------

def test_gradient_correctness():
    t0 = time.monotonic()
    results = {}
    for label, cfg in (
        ("transformer", ModelConfig(scan_len=24, patches=4, d_model=8, heads=2, d_ff=16)),
        ("mlp", ModelConfig(scan_len=24, patches=4, d_model=8, heads=2, d_ff=16,
                            variant=MLP, mlp_hidden=(16, 16, 16))),
    ):
        rng = np.random.default_rng(1)
        params = init_params(cfg, rng)
        scans = rng.uniform(0, 1, (4, cfg.scan_len))
        ang = rng.uniform(-np.pi, np.pi, 4)
        goals = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        targets = rng.uniform(-1, 1, (4, 2))
        results[label] = grad_check(cfg, params, scans, goals, targets,
                                    rng=np.random.default_rng(0))
        # fault-injection sensitivity
        _, grads = backward(cfg, params, scans, goals, targets)
        grads["head.w"] = grads["head.w"] * 2.0
        corrupted = grad_check(cfg, params, scans, goals, targets,
                               rng=np.random.default_rng(0), grads=grads)
        assert corrupted > 0.1, f"{label}: checker blind to corruption"
    elapsed = time.monotonic() - t0
    ok = max(results.values()) <= 1e-4 and elapsed < 60
    criterion("gradient correctness",
              ok, f"max rel err {results} (fault injection detected), "
                  f"runtime {elapsed:.1f}s")


# --- safety oracle equivalence -------------------------------------------------------

def test_safety_oracle_equivalence():
    t0 = time.monotonic()
    n_cases = 10_000
    disagreements, out_of_band, false_safe = run_equivalence(n_cases, seed=20240)

    # mirror symmetry over random cases
    from lics.safety import SafetyConfig, check_action, check_linear, check_radial
    cfg = SafetyConfig()
    rng = np.random.default_rng(77)
    mirror_ok = True
    for _ in range(300):
        points, v, w = random_case(rng, cfg)
        a = check_action(points, v, w, cfg)
        b = check_action(points * np.array([1.0, -1.0]), v, -w, cfg)
        mirror_ok &= (a.safe == b.safe)

    # continuity at the linear/radial class boundary
    continuity_ok = True
    for _ in range(200):
        points, v, _ = random_case(rng, cfg)
        lin = check_linear(points, v, cfg)
        rad = check_radial(points, v, cfg.eps_omega, cfg)
        if lin.safe != rad.safe:
            continuity_ok &= oracle_band_case(points, v, 0.0, cfg, around=cfg.margin)

    elapsed = time.monotonic() - t0
    agree = 100.0 * (n_cases - disagreements) / n_cases
    ok = (agree >= 99.0 and out_of_band == 0 and false_safe == 0
          and mirror_ok and continuity_ok and elapsed < 120)
    criterion("safety oracle equivalence", ok,
              f"agreement {agree:.2f}%, {out_of_band} out-of-band, "
              f"{false_safe} false-safe, mirror={mirror_ok}, "
              f"continuity={continuity_ok}, runtime {elapsed:.1f}s")


# --- planner exactness ----------------------------------------------------------------

def test_planner_exactness():
    t0 = time.monotonic()
    rng = np.random.default_rng(99)
    exact = 0
    total = 0
    for _ in range(100):
        blocked = rng.random((30, 30)) < 0.25
        blocked[0, 0] = blocked[-1, -1] = False
        want = dijkstra_cost(blocked, (0, 0), (29, 29))
        try:
            _, cost = astar_cells(blocked, (0, 0), (29, 29))
        except NoPath:
            cost = math.inf
        total += 1
        if (math.isinf(want) and math.isinf(cost)) or abs(cost - want) < 1e-9:
            exact += 1
    elapsed = time.monotonic() - t0
    criterion("planner exactness", exact == total and elapsed < 10,
              f"{exact}/{total} maps exact, runtime {elapsed:.1f}s")


# --- noise statistics -------------------------------------------------------------------

def test_noise_statistics():
    rng = np.random.default_rng(4242)
    wide = VelocityLimits(v_max=1e9, w_max=1e9, a_max=1e9, alpha_max=1e9)
    draws = np.array([perturb_action(Action(0.0, 0.0), 0.25, rng, wide).as_tuple()
                      for _ in range(10_000)])
    mean_ok = np.all(np.abs(draws.mean(axis=0)) <= 0.01)
    std_ok = np.all(np.abs(draws.std(axis=0) - 0.25) <= 0.01)
    criterion("noise statistics", bool(mean_ok and std_ok),
              f"mean {draws.mean(axis=0).round(4)}, std {draws.std(axis=0).round(4)}")


# --- local goal invariants -------------------------------------------------------------

def test_local_goal_invariants():
    rng = np.random.default_rng(515)
    lookahead = 2.0
    checked = 0
    worst_norm = 0.0
    worst_equiv = 0.0
    fallback_violations = 0
    for _ in range(1000):
        k = rng.integers(2, 20)
        pts = rng.uniform(-8, 8, size=(k, 2))
        pose = (rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-np.pi, np.pi))
        try:
            lg = extract_local_goal(Path(pts), pose, lookahead)
        except DegenerateGoal:
            continue
        checked += 1
        worst_norm = max(worst_norm, abs(math.hypot(*lg.unit) - 1.0))
        if not lg.fallback and lg.distance < lookahead - 1e-9:
            fallback_violations += 1
        ang = rng.uniform(-np.pi, np.pi)
        tx, ty = rng.uniform(-5, 5, size=2)
        c, s = math.cos(ang), math.sin(ang)
        moved = np.stack([c * pts[:, 0] - s * pts[:, 1] + tx,
                          s * pts[:, 0] + c * pts[:, 1] + ty], axis=1)
        moved_pose = (c * pose[0] - s * pose[1] + tx,
                      s * pose[0] + c * pose[1] + ty, pose[2] + ang)
        lg2 = extract_local_goal(Path(moved), moved_pose, lookahead)
        worst_equiv = max(worst_equiv,
                          abs(lg2.point[0] - lg.point[0]),
                          abs(lg2.point[1] - lg.point[1]),
                          abs(lg2.unit[0] - lg.unit[0]),
                          abs(lg2.unit[1] - lg.unit[1]))
    ok = (checked >= 900 and worst_norm <= 1e-9 and fallback_violations == 0
          and worst_equiv <= 1e-9)
    criterion("local goal invariants", ok,
              f"{checked} cases, unit-norm err {worst_norm:.2e}, "
              f"equivariance err {worst_equiv:.2e}, "
              f"{fallback_violations} lookahead violations")


# --- desk-scale pipeline -----------------------------------------------------------------

def test_pipeline_end_to_end(pipeline_summary):
    s = pipeline_summary
    expert_ok = s["expert_success"] >= 80.0
    learner_ok = s["tf_success"] >= s["expert_success"] - 20.0
    mse_ok = s["tf_train_mse"] <= 0.10 * s["const_mse"]
    runtime_ok = s["elapsed"] <= 45 * 60
    ok = expert_ok and learner_ok and mse_ok and runtime_ok
    criterion("pipeline end-to-end", ok,
              f"expert {s['expert_success']:.1f}%, learner {s['tf_success']:.1f}%, "
              f"train MSE {s['tf_train_mse']:.4f} vs 10% of {s['const_mse']:.4f}, "
              f"runtime {s['elapsed']:.0f}s")


def test_ablation_direction(pipeline_summary):
    s = pipeline_summary
    ok = s["mlp_success"] <= s["tf_success"] + 5.0
    criterion("ablation direction", ok,
              f"mlp {s['mlp_success']:.1f}% vs transformer {s['tf_success']:.1f}% "
              f"(mlp must not exceed by more than 5 points)")


# --- determinism ---------------------------------------------------------------------------

def test_determinism_byte_identical(tmp_path):
    def one_run(tag: str):
        worlds = [generate_world(WorldgenConfig(seed=900 + k, fill_probability=0.2))
                  for k in range(3)]
        world_bytes = b"".join(world_to_text(w).encode() for w in worlds)
        out = tmp_path / f"ds_{tag}"
        manifest = build_dataset(worlds, DwaExpert(), out,
                                 cfg=SessionConfig(timeout=20.0))
        records = (out / "records.ndjson").read_bytes()
        from lics.demo import load_dataset
        ds = load_dataset(manifest)
        ckpt = tmp_path / f"ckpt_{tag}.bin"
        cfg = ModelConfig(scan_len=ds.scans.shape[1], patches=20, d_model=16,
                          heads=2, d_ff=32)
        train(ds, cfg, TrainConfig(epochs=2, lr=1e-3, batch_size=64, seed=0),
              checkpoint_path=ckpt)
        return world_bytes, records, ckpt.read_bytes()

    a = one_run("a")
    b = one_run("b")
    same = [x == y for x, y in zip(a, b)]
    criterion("determinism", all(same),
              f"worlds identical={same[0]}, dataset identical={same[1]}, "
              f"checkpoint identical={same[2]}")
