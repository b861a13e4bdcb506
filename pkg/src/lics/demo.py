"""Demonstration recording: run an expert in the simulator with Gaussian
exploration noise injected into the executed action, keep only clean runs,
and persist datasets as a JSON manifest plus newline-delimited records."""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ExpertFailure, ParseError
from .expert import Action, ExpertPolicy
from .loop import SUCCESS, NavigationSession, SessionConfig
from .simulator import VelocityLimits
from .worldgen import World

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class NoiseConfig:
    sigma: float = 0.25  # std of the Gaussian added to both v and w
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


@dataclass
class DemoRecord:
    t: float
    scan: np.ndarray  # raw ranges in meters
    goal_unit: tuple[float, float]
    optimal: Action  # exactly the expert output
    executed: Action  # noise-injected, clamped command sent to the simulator
    world_id: str
    episode_id: str


@dataclass
class EpisodeResult:
    records: list[DemoRecord]
    outcome: str
    duration: float


def perturb_action(
    action: Action,
    sigma: float,
    rng: np.random.Generator,
    limits: VelocityLimits,
) -> Action:
    """Add independent N(0, sigma^2) draws to v and w, then clamp to the
    velocity limits. The recorded optimal action stays untouched."""
    nv, nw = rng.standard_normal(2)
    v, w = limits.clamp(action.v + sigma * nv, action.w + sigma * nw)
    return Action(v, w)


def record_episode(
    world: World,
    expert: ExpertPolicy,
    sigma: float,
    cfg: SessionConfig,
    rng_session: np.random.Generator,
    rng_noise: np.random.Generator,
    episode_id: str = "0",
) -> EpisodeResult:
    """One closed-loop episode at the control rate: observe, query the
    expert, perturb, step; one record per tick."""
    session = NavigationSession(world, cfg, rng_session)
    records: list[DemoRecord] = []
    while session.running:
        obs = session.observe()
        try:
            a_star = expert.act(obs)
        except Exception as exc:  # noqa: BLE001 - propagate with context
            raise ExpertFailure(f"expert {expert.name!r} failed: {exc}") from exc
        a_exec = perturb_action(a_star, sigma, rng_noise, cfg.limits)
        records.append(
            DemoRecord(
                t=session.state.t,
                scan=obs.scan.ranges.copy(),
                goal_unit=obs.local_goal.unit,
                optimal=a_star,
                executed=a_exec,
                world_id=world.id,
                episode_id=episode_id,
            )
        )
        session.apply(a_exec.v, a_exec.w)
    return EpisodeResult(records, session.status, session.elapsed)


def build_dataset(
    worlds: list[World],
    expert: ExpertPolicy,
    out_dir,
    noise: NoiseConfig = NoiseConfig(),
    cfg: SessionConfig = SessionConfig(),
    episodes_per_world: int = 2,
    retry_budget: int = 20,
) -> str:
    """Collect `episodes_per_world` collision-free successful episodes per
    world (skipping worlds that exhaust the retry budget) and write the
    dataset; returns the manifest path."""
    if not worlds:
        raise ValueError("empty world list")
    os.makedirs(out_dir, exist_ok=True)
    records_path = os.path.join(out_dir, "records.ndjson")
    manifest_path = os.path.join(out_dir, "manifest.json")

    episodes = []
    skipped = []
    with open(records_path, "w", encoding="utf-8") as rec_file:
        for wi, world in enumerate(worlds):
            got = 0
            for attempt in range(retry_budget):
                if got >= episodes_per_world:
                    break
                seed = np.random.SeedSequence(entropy=(noise.seed, wi, attempt))
                child_session, child_noise = seed.spawn(2)
                episode_id = f"{world.id}:{attempt}"
                result = record_episode(
                    world, expert, noise.sigma, cfg,
                    np.random.default_rng(child_session),
                    np.random.default_rng(child_noise),
                    episode_id,
                )
                if result.outcome != SUCCESS:
                    continue
                got += 1
                for r in result.records:
                    rec_file.write(_record_line(r))
                episodes.append({
                    "world_id": world.id,
                    "episode_id": episode_id,
                    "records": len(result.records),
                    "duration": result.duration,
                    "outcome": result.outcome,
                })
            if got < episodes_per_world:
                skipped.append({
                    "world_id": world.id,
                    "collected": got,
                    "warning": f"only {got}/{episodes_per_world} clean episodes "
                               f"within {retry_budget} attempts",
                })

    manifest = {
        "schema": SCHEMA_VERSION,
        "scan_beams": cfg.lidar.beam_count,
        "sigma": noise.sigma,
        "limits": {
            "v_max": cfg.limits.v_max,
            "w_max": cfg.limits.w_max,
            "a_max": cfg.limits.a_max,
            "alpha_max": cfg.limits.alpha_max,
        },
        "lidar": {
            "beam_count": cfg.lidar.beam_count,
            "angle_min": cfg.lidar.angle_min,
            "angle_max": cfg.lidar.angle_max,
            "max_range": cfg.lidar.max_range,
        },
        "worlds": [w.id for w in worlds],
        "episodes": episodes,
        "skipped": skipped,
        "records_file": "records.ndjson",
    }
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=1)
        f.write("\n")
    return manifest_path


def _record_line(r: DemoRecord) -> str:
    obj = {
        "t": r.t,
        "world_id": r.world_id,
        "episode_id": r.episode_id,
        "scan": [float(x) for x in r.scan],
        "goal": [float(r.goal_unit[0]), float(r.goal_unit[1])],
        "a_star": [r.optimal.v, r.optimal.w],
        "a_exec": [r.executed.v, r.executed.w],
    }
    return json.dumps(obj) + "\n"


@dataclass
class Dataset:
    scans: np.ndarray  # (n, H) raw meters
    goals: np.ndarray  # (n, 2)
    optimal_actions: np.ndarray  # (n, 2), the a_star training targets
    executed_actions: np.ndarray  # (n, 2)
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.scans.shape[0]

    @property
    def max_range(self) -> float:
        return float(self.meta.get("lidar", {}).get("max_range", 20.0))

    def scans_normalized(self) -> np.ndarray:
        return self.scans / self.max_range


def load_dataset(manifest_path) -> Dataset:
    with open(manifest_path, "r", encoding="utf-8") as f:
        try:
            meta = json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad manifest: {exc}") from exc
    records_path = os.path.join(os.path.dirname(manifest_path), meta["records_file"])
    scans, goals, a_star, a_exec = [], [], [], []
    beams = meta["scan_beams"]
    with open(records_path, "r", encoding="utf-8") as f:
        for ln, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"records line {ln}: {exc}") from exc
            if len(obj["scan"]) != beams:
                raise ParseError(
                    f"records line {ln}: scan has {len(obj['scan'])} beams, "
                    f"manifest says {beams}"
                )
            scans.append(obj["scan"])
            goals.append(obj["goal"])
            a_star.append(obj["a_star"])
            a_exec.append(obj["a_exec"])
    n = len(scans)
    return Dataset(
        scans=np.asarray(scans, dtype=float).reshape(n, beams),
        goals=np.asarray(goals, dtype=float).reshape(n, 2),
        optimal_actions=np.asarray(a_star, dtype=float).reshape(n, 2),
        executed_actions=np.asarray(a_exec, dtype=float).reshape(n, 2),
        meta=meta,
    )
