import numpy as np
import pytest

from lics.errors import SchemaMismatch
from lics.model import MLP, ModelConfig, forward, load_checkpoint
from lics.trainer import TrainConfig, evaluate_mse, initial_params, train

TINY = ModelConfig(scan_len=24, patches=4, d_model=8, heads=2, d_ff=16)


def toy_dataset(n=32, seed=0, scan_len=24):
    rng = np.random.default_rng(seed)
    scans = rng.uniform(0, 1, size=(n, scan_len))
    ang = rng.uniform(-np.pi, np.pi, size=n)
    goals = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    targets = np.stack([0.5 + 0.3 * goals[:, 0], 0.8 * goals[:, 1]], axis=1)
    return scans, goals, targets


def test_lr_zero_keeps_initialization():
    cfg = TrainConfig(epochs=1, lr=0.0, batch_size=8, seed=3)
    params, report = train(toy_dataset(), TINY, cfg)
    init = initial_params(TINY, cfg)
    assert set(params) == set(init)
    for k in params:
        assert np.array_equal(params[k], init[k]), k
    assert not report.aborted


def test_overfit_tiny_dataset():
    scans, goals, targets = toy_dataset(n=10, seed=1)
    cfg = TrainConfig(epochs=150, lr=3e-3, batch_size=10, seed=0, val_fraction=0.0)
    params, report = train((scans, goals, targets), TINY, cfg)
    final = evaluate_mse(TINY, params, scans, goals, targets)
    assert final < 1e-3
    assert len(report.train_mse) == 150


def test_determinism_byte_identical_checkpoints(tmp_path):
    data = toy_dataset(n=24, seed=2)
    cfg = TrainConfig(epochs=3, lr=1e-3, batch_size=8, seed=11)
    a = tmp_path / "a.bin"
    b = tmp_path / "b.bin"
    train(data, TINY, cfg, checkpoint_path=a)
    train(data, TINY, cfg, checkpoint_path=b)
    assert a.read_bytes() == b.read_bytes()


def test_schema_mismatch_on_wrong_scan_length():
    with pytest.raises(SchemaMismatch):
        train(toy_dataset(scan_len=48), TINY, TrainConfig(epochs=1))
    with pytest.raises(SchemaMismatch):
        evaluate_mse(TINY, initial_params(TINY, TrainConfig()), *toy_dataset(scan_len=48))


def test_retained_checkpoint_is_best_validation():
    data = toy_dataset(n=40, seed=5)
    cfg = TrainConfig(epochs=20, lr=3e-3, batch_size=8, seed=7, val_fraction=0.25)
    params, report = train(data, TINY, cfg)
    assert min(report.val_mse) == report.val_mse[report.best_epoch]
    assert report.val_mse[report.best_epoch] <= report.val_mse[-1] + 1e-15


def test_targets_are_optimal_actions_not_executed():
    """The trainer must fit a_star; a dataset whose executed actions are
    garbage trains exactly as if they were absent."""
    from lics.demo import Dataset
    scans, goals, targets = toy_dataset(n=16, seed=6)
    meta = {"lidar": {"max_range": 1.0}}
    clean = Dataset(scans.copy(), goals, targets.copy(), targets.copy(), meta)
    garbage = Dataset(scans.copy(), goals, targets.copy(),
                      np.full_like(targets, 999.0), meta)
    cfg = TrainConfig(epochs=3, lr=1e-3, batch_size=8, seed=1)
    pa, _ = train(clean, TINY, cfg)
    pb, _ = train(garbage, TINY, cfg)
    for k in pa:
        assert np.array_equal(pa[k], pb[k]), k


def test_evaluate_constant_predictor_equals_target_variance():
    scans, goals, targets = toy_dataset(n=64, seed=8)
    mean = targets.mean(axis=0)
    # a zero network with head bias = mean action predicts the mean everywhere
    params = initial_params(TINY, TrainConfig(seed=0))
    params = {k: np.zeros_like(v) for k, v in params.items()}
    params["head.b"] = mean.copy()
    got = evaluate_mse(TINY, params, scans, goals, targets)
    want = float(((targets - mean) ** 2).mean())
    assert got == pytest.approx(want, abs=1e-12)


def test_evaluate_slice_of_identical_records():
    scans, goals, targets = toy_dataset(n=1, seed=9)
    reps = (np.repeat(scans, 5, axis=0), np.repeat(goals, 5, axis=0),
            np.repeat(targets, 5, axis=0))
    params = initial_params(TINY, TrainConfig(seed=2))
    single = evaluate_mse(TINY, params, scans, goals, targets)
    many = evaluate_mse(TINY, params, *reps)
    assert many == pytest.approx(single, abs=1e-12)
    assert evaluate_mse(TINY, params, *reps) == many  # repeatable


def test_nonfinite_loss_aborts_with_last_good_params():
    scans, goals, targets = toy_dataset(n=8, seed=10)
    targets = targets.copy()
    targets[0, 0] = np.inf  # first batch loss becomes non-finite
    cfg = TrainConfig(epochs=2, lr=1e-3, batch_size=8, seed=0, val_fraction=0.0)
    params, report = train((scans, goals, targets), TINY, cfg)
    assert report.aborted
    init = initial_params(TINY, cfg)
    for k in params:
        assert np.array_equal(params[k], init[k])


def test_mlp_trains_through_same_loop(tmp_path):
    cfg_model = ModelConfig(scan_len=24, patches=4, d_model=8, heads=2,
                            d_ff=16, variant=MLP, mlp_hidden=(16, 16, 16))
    data = toy_dataset(n=20, seed=12)
    path = tmp_path / "mlp.bin"
    params, report = train(data, cfg_model,
                           TrainConfig(epochs=30, lr=3e-3, batch_size=10, seed=0),
                           checkpoint_path=path)
    cfg2, loaded = load_checkpoint(path)
    assert cfg2.variant == MLP
    out = forward(cfg2, loaded, data[0][:2], data[1][:2])
    assert out.shape == (2, 2)
    assert report.train_mse[-1] < report.train_mse[0]
