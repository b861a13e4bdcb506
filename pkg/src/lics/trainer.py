"""Offline behavior-cloning loop: mini-batch MSE regression of recorded
expert actions with adaptive moment estimation."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteParams, SchemaMismatch
from .model import ModelConfig, backward, forward, init_params, mse_loss, save_checkpoint


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    epochs: int = 50
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    val_fraction: float = 0.1
    dtype: str = "float64"  # float32 roughly halves the step time

    def __post_init__(self) -> None:
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")


@dataclass
class TrainReport:
    train_mse: list[float] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)
    best_epoch: int = -1
    wall_time: float = 0.0
    aborted: bool = False
    checkpoint_path: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "train_mse": self.train_mse,
            "val_mse": self.val_mse,
            "best_epoch": self.best_epoch,
            "wall_time": self.wall_time,
            "aborted": self.aborted,
            "checkpoint_path": self.checkpoint_path,
        }


class Adam:
    def __init__(self, params: dict, cfg: TrainConfig):
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        c = self.cfg
        self.t += 1
        b1c = 1.0 - c.beta1 ** self.t
        b2c = 1.0 - c.beta2 ** self.t
        for k in params:
            g = grads[k]
            self.m[k] = c.beta1 * self.m[k] + (1.0 - c.beta1) * g
            self.v[k] = c.beta2 * self.v[k] + (1.0 - c.beta2) * (g * g)
            m_hat = self.m[k] / b1c
            v_hat = self.v[k] / b2c
            params[k] = params[k] - c.lr * m_hat / (np.sqrt(v_hat) + c.adam_eps)


def _as_arrays(dataset) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Accept either a demo.Dataset or a (scans, goals, targets) triple.
    Targets are always the recorded optimal actions, never the executed ones."""
    if hasattr(dataset, "scans_normalized"):
        return dataset.scans_normalized(), dataset.goals, dataset.optimal_actions
    scans, goals, targets = dataset
    return np.asarray(scans, float), np.asarray(goals, float), np.asarray(targets, float)


def initial_params(model_cfg: ModelConfig, train_cfg: TrainConfig) -> dict:
    """The exact initialization train() starts from for these configs."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(train_cfg.seed, 0x7A11)))
    return init_params(model_cfg, rng)


def train(
    dataset,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig = TrainConfig(),
    checkpoint_path=None,
) -> tuple[dict, TrainReport]:
    """Minimize the action MSE over the dataset; deterministic given seeds.
    Keeps the parameters of the best validation epoch (the final epoch when
    no validation split is possible)."""
    scans, goals, targets = _as_arrays(dataset)
    n = scans.shape[0]
    if n == 0:
        raise SchemaMismatch("empty dataset")
    if scans.shape[1] != model_cfg.scan_len:
        raise SchemaMismatch(
            f"dataset scan length {scans.shape[1]} != model {model_cfg.scan_len}"
        )

    rng = np.random.default_rng(np.random.SeedSequence(entropy=(train_cfg.seed, 0x7A11)))
    params = init_params(model_cfg, rng)
    if train_cfg.dtype != "float64":
        params = {k: v.astype(train_cfg.dtype) for k, v in params.items()}
        scans = scans.astype(train_cfg.dtype)
        goals = goals.astype(train_cfg.dtype)
        targets = targets.astype(train_cfg.dtype)
    opt = Adam(params, train_cfg)
    report = TrainReport()
    start = time.monotonic()

    order = rng.permutation(n)
    n_val = int(round(n * train_cfg.val_fraction))
    n_val = min(max(n_val, 0), n - 1)
    val_idx = order[:n_val]
    train_idx = order[n_val:]

    best_val = np.inf
    best_params = {k: v.copy() for k, v in params.items()}
    for epoch in range(train_cfg.epochs):
        perm = train_idx[rng.permutation(train_idx.shape[0])]
        epoch_losses = []
        for s in range(0, perm.shape[0], train_cfg.batch_size):
            idx = perm[s:s + train_cfg.batch_size]
            try:
                loss, grads = backward(model_cfg, params, scans[idx], goals[idx], targets[idx])
            except NonFiniteParams:
                loss = float("inf")
            if not np.isfinite(loss):
                report.aborted = True
                report.wall_time = time.monotonic() - start
                return best_params, report
            epoch_losses.append(loss)
            opt.step(params, grads)
        train_mse = float(np.mean(epoch_losses)) if epoch_losses else float("nan")
        if n_val > 0:
            val = evaluate_mse(model_cfg, params,
                               scans[val_idx], goals[val_idx], targets[val_idx])
        else:
            val = train_mse
        report.train_mse.append(train_mse)
        report.val_mse.append(val)
        if val <= best_val:
            best_val = val
            best_params = {k: v.copy() for k, v in params.items()}
            report.best_epoch = epoch

    report.wall_time = time.monotonic() - start
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, model_cfg, best_params)
        report.checkpoint_path = str(checkpoint_path)
    return best_params, report


def evaluate_mse(model_cfg: ModelConfig, params: dict, scans, goals, targets,
                 batch_size: int = 256) -> float:
    """Mean squared action error over a dataset slice; no parameter mutation."""
    scans = np.asarray(scans, float)
    goals = np.asarray(goals, float)
    targets = np.asarray(targets, float)
    if scans.shape[1] != model_cfg.scan_len:
        raise SchemaMismatch(
            f"dataset scan length {scans.shape[1]} != model {model_cfg.scan_len}"
        )
    total = 0.0
    n = scans.shape[0]
    for s in range(0, n, batch_size):
        pred = forward(model_cfg, params, scans[s:s + batch_size], goals[s:s + batch_size])
        diff = pred - targets[s:s + batch_size]
        total += float((diff * diff).sum())
    return total / (2.0 * n)
