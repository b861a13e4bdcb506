"""Closed-loop trial runner and metric aggregation.

A trial drives one policy through one world until goal, collision, or
timeout. Scores combine success with clipped traversal time against the
world's optimal time (shortest path length over the 2 m/s velocity cap).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import MissingPathLength
from .expert import Action, Observation
from .loop import SUCCESS, NavigationSession, SessionConfig
from .model import ModelConfig, load_checkpoint, predict_action
from .safety import SafetyConfig, filter_action, scan_to_points
from .worldgen import World

REFERENCE_V_MAX = 2.0  # divisor for the optimal traversal time, by protocol


@dataclass
class TrialResult:
    world_id: str
    policy: str
    outcome: str
    elapsed: float  # traversal seconds
    max_v: float
    trace: list | None = None
    policy_failed: bool = False

    @property
    def success(self) -> bool:
        return self.outcome == SUCCESS


def optimal_time(world: World) -> float:
    """Shortest-path length divided by the 2 m/s cap, regardless of the
    velocity limit a trial actually uses."""
    if world.shortest_path_length is None or world.shortest_path_length <= 0:
        raise MissingPathLength(f"world {world.id} has no shortest-path metadata")
    return world.shortest_path_length / REFERENCE_V_MAX


def score_trial(result: TrialResult, t_star: float) -> float:
    """Zero on failure; on success t_star over the traversal time clipped
    to [2 t_star, 8 t_star]."""
    if not result.success:
        return 0.0
    clipped = max(2.0 * t_star, min(8.0 * t_star, result.elapsed))
    return t_star / clipped


class ModelPolicy:
    """Checkpoint-backed policy: normalized scan + unit goal -> (v, w)."""

    def __init__(self, cfg: ModelConfig, params: dict, name: str = "model"):
        self.cfg = cfg
        self.params = params
        self.name = name

    @classmethod
    def from_checkpoint(cls, path, name: str | None = None) -> "ModelPolicy":
        cfg, params = load_checkpoint(path)
        return cls(cfg, params, name or f"ckpt:{path}")

    def act(self, obs: Observation) -> Action:
        scan_norm = obs.scan.ranges / obs.scan.max_range
        v, w = predict_action(self.cfg, self.params, scan_norm, obs.local_goal.unit)
        return Action(v, w)


class ScriptedPolicy:
    def __init__(self, fn, name: str = "scripted"):
        self.fn = fn
        self.name = name

    def act(self, obs: Observation) -> Action:
        return self.fn(obs)


def run_trial(
    world: World,
    policy,
    cfg: SessionConfig = SessionConfig(),
    seed: int = 0,
    use_safety: bool = False,
    safety_cfg: SafetyConfig | None = None,
    max_v: float | None = None,
    keep_trace: bool = False,
) -> TrialResult:
    """One closed loop run; the session seed depends only on (seed, world,
    trial), never on the policy, so policy comparisons are paired."""
    if max_v is not None:
        cfg = replace(cfg, limits=replace(cfg.limits, v_max=max_v))
    t_star = optimal_time(world)
    cfg = replace(cfg, timeout=max(cfg.timeout, 10.0 * t_star))
    if use_safety and safety_cfg is None:
        safety_cfg = SafetyConfig(footprint=cfg.footprint, a_max=cfg.limits.a_max)

    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, _stable_id(world.id))))
    session = NavigationSession(world, cfg, rng)
    trace: list | None = [] if keep_trace else None
    policy_failed = False
    while session.running:
        obs = session.observe()
        try:
            action = policy.act(obs)
        except Exception:  # noqa: BLE001 - a broken policy ends the trial
            policy_failed = True
            break
        v, w = action.v, action.w
        verdict = None
        if use_safety:
            points = scan_to_points(obs.scan, cfg.lidar)
            (v, w), verdict = filter_action(
                points, v, w, safety_cfg, goal_side=obs.local_goal.point[1]
            )
        if trace is not None:
            trace.append({
                "t": session.state.t,
                "pose": [session.state.x, session.state.y, session.state.theta],
                "action": [v, w],
                "verdict": verdict.to_json_dict() if verdict is not None else None,
            })
        session.apply(v, w)
    outcome = session.status if not policy_failed else "timeout"
    return TrialResult(
        world_id=world.id,
        policy=getattr(policy, "name", "policy"),
        outcome=outcome,
        elapsed=session.elapsed,
        max_v=cfg.limits.v_max,
        trace=trace,
        policy_failed=policy_failed,
    )


def _stable_id(world_id: str) -> int:
    # deterministic across processes, unlike hash()
    return int.from_bytes(world_id.encode("utf-8")[-8:].rjust(8, b"\0"), "big")


def aggregate(results: list[TrialResult], t_star_by_world: dict[str, float]) -> dict:
    """Success rate over all trials, average time over successes only,
    average score over all trials; per-world groups plus overall."""
    if not results:
        raise ValueError("no trial results to aggregate")
    rows = []
    counters: dict[str, int] = {}
    for r in results:
        key = f"{r.world_id}/{r.policy}"
        counters[key] = counters.get(key, 0) + 1
        score = score_trial(r, t_star_by_world[r.world_id])
        rows.append({
            "world_id": r.world_id,
            "trial": counters[key] - 1,
            "policy": r.policy,
            "outcome": r.outcome,
            "T": r.elapsed,
            "score": score,
        })

    def summarize(group: list[dict]) -> dict:
        succ = [g for g in group if g["outcome"] == SUCCESS]
        return {
            "trials": len(group),
            "success_rate": 100.0 * len(succ) / len(group),
            "avg_time": (sum(g["T"] for g in succ) / len(succ)) if succ else None,
            "avg_score": sum(g["score"] for g in group) / len(group),
        }

    per_world: dict[str, dict] = {}
    for row in rows:
        per_world.setdefault(row["world_id"], []).append(row)
    report = {
        "per_world": {wid: summarize(group) for wid, group in sorted(per_world.items())},
        "overall": summarize(rows),
        "trials": rows,
    }
    return report


def write_report_json(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=1)
        f.write("\n")


def write_report_csv(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["world_id", "trial", "policy", "outcome", "T", "score"])
        for row in report["trials"]:
            writer.writerow([row["world_id"], row["trial"], row["policy"],
                             row["outcome"], row["T"], row["score"]])


def write_trace_jsonl(result: TrialResult, path) -> None:
    if result.trace is None:
        raise ValueError("trial was run without keep_trace")
    with open(path, "w", encoding="utf-8") as f:
        for row in result.trace:
            f.write(json.dumps(row) + "\n")
