"""Miniature of the whole pipeline: record noisy expert demonstrations on a
few worlds, behavior-clone a small transformer, and benchmark it against
the expert on a held-out world. Takes a few minutes on a laptop CPU.

Run:  python3 demos/05_record_train_evaluate.py
"""
import tempfile
from dataclasses import replace

from lics.bench import ModelPolicy, optimal_time, run_trial, score_trial
from lics.demo import NoiseConfig, build_dataset, load_dataset
from lics.expert import DwaExpert
from lics.loop import SessionConfig
from lics.model import ModelConfig
from lics.trainer import TrainConfig, train
from lics.worldgen import WorldgenConfig, generate_world

cfg = SessionConfig()
cfg = replace(cfg, limits=replace(cfg.limits, v_max=1.0))

train_worlds = [generate_world(WorldgenConfig(seed=s)) for s in range(4)]
test_world = generate_world(WorldgenConfig(seed=10))

workdir = tempfile.mkdtemp(prefix="lics_demo_")
manifest = build_dataset(train_worlds, DwaExpert(), workdir,
                         noise=NoiseConfig(sigma=0.25, seed=0), cfg=cfg)
dataset = load_dataset(manifest)
print(f"dataset: {len(dataset)} records from {len(train_worlds)} worlds")

model_cfg = ModelConfig()
params, report = train(dataset, model_cfg,
                       TrainConfig(epochs=30, lr=1e-3, batch_size=64,
                                   seed=0, dtype="float32"))
print(f"train MSE {report.train_mse[0]:.4f} -> {report.train_mse[-1]:.4f} "
      f"(best val {min(report.val_mse):.4f})")

for policy in (DwaExpert(), ModelPolicy(model_cfg, params, "clone")):
    r = run_trial(test_world, policy, cfg, seed=0, max_v=1.0)
    print(f"{policy.name:6s} on {test_world.id}: {r.outcome} in {r.elapsed:.1f}s, "
          f"score {score_trial(r, optimal_time(test_world)):.3f}")
