"""Command-line surface tying the pipeline together.

Subcommands: worldgen | record | train | eval | safety-check | teleop.
`LICS_DATA_DIR` roots all default paths (current directory otherwise).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import bench, demo, model, safety, trainer, worldgen
from .errors import LicsError
from .expert import DwaExpert
from .loop import SessionConfig
from .simulator import LidarConfig, LidarScan


def data_dir() -> str:
    return os.environ.get("LICS_DATA_DIR", ".")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lics", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("worldgen", help="generate cluttered worlds")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output directory (default: LICS_DATA_DIR/worlds)")
    p.add_argument("--fill", type=float, default=None)
    p.add_argument("--smoothing", type=int, default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)

    p = sub.add_parser("record", help="record expert demonstrations")
    p.add_argument("--worlds", default=None, help="directory of .world files")
    p.add_argument("--out", default=None, help="dataset directory")
    p.add_argument("--expert", choices=["dwa", "human"], default="dwa")
    p.add_argument("--sigma", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episodes", type=int, default=2)

    p = sub.add_parser("train", help="behavior-clone a policy from a dataset")
    p.add_argument("--data", default=None, help="dataset manifest path")
    p.add_argument("--out", default=None, help="checkpoint path")
    p.add_argument("--report", default=None, help="training report JSON path")
    p.add_argument("--variant", choices=[model.TRANSFORMER, model.MLP],
                   default=model.TRANSFORMER)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("eval", help="closed-loop benchmark of a policy")
    p.add_argument("--policy", required=True,
                   help="checkpoint path, or 'expert:dwa', or 'scripted:stop'")
    p.add_argument("--worlds", default=None)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--max-v", type=float, default=None)
    p.add_argument("--safety", action="store_true", help="run the safety filter")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default=None, help="report JSON path")
    p.add_argument("--csv", default=None, help="report CSV path")

    p = sub.add_parser("safety-check",
                       help="read {scan, lidar, action, config} JSON on stdin, "
                            "write the verdict JSON on stdout")

    p = sub.add_parser("teleop", help="serve the live teleoperation bridge")
    p.add_argument("--worlds", default=None)
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--record-to", default=None, help="dataset directory for recordings")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _load_worlds(path: str | None) -> list[worldgen.World]:
    root = path or os.path.join(data_dir(), "worlds")
    if not os.path.isdir(root):
        raise LicsError(f"world directory {root!r} does not exist")
    files = sorted(f for f in os.listdir(root) if f.endswith(".world"))
    if not files:
        raise LicsError(f"no .world files in {root!r}")
    return [worldgen.load_world(os.path.join(root, f)) for f in files]


def _cmd_worldgen(args) -> int:
    out = args.out or os.path.join(data_dir(), "worlds")
    os.makedirs(out, exist_ok=True)
    overrides = {}
    if args.fill is not None:
        overrides["fill_probability"] = args.fill
    if args.smoothing is not None:
        overrides["smoothing_iterations"] = args.smoothing
    if args.width is not None:
        overrides["width"] = args.width
    if args.height is not None:
        overrides["height"] = args.height
    for k in range(args.count):
        cfg = worldgen.WorldgenConfig(seed=args.seed + k, **overrides)
        world = worldgen.generate_world(cfg)
        worldgen.save_world(world, os.path.join(out, f"{world.id}.world"))
    print(f"wrote {args.count} worlds to {out}")
    return 0


def _cmd_record(args) -> int:
    if args.expert == "human":
        raise LicsError("human demonstrations are recorded live: run `lics teleop` "
                        "and arm recording from the browser UI")
    worlds = _load_worlds(args.worlds)
    out = args.out or os.path.join(data_dir(), "dataset")
    manifest = demo.build_dataset(
        worlds, DwaExpert(), out,
        noise=demo.NoiseConfig(sigma=args.sigma, seed=args.seed),
        episodes_per_world=args.episodes,
    )
    print(f"dataset manifest: {manifest}")
    return 0


def _cmd_train(args) -> int:
    data = args.data or os.path.join(data_dir(), "dataset", "manifest.json")
    if not os.path.exists(data):
        raise LicsError(f"dataset manifest {data!r} does not exist")
    ds = demo.load_dataset(data)
    model_cfg = model.ModelConfig(
        scan_len=ds.scans.shape[1], variant=args.variant)
    overrides = {}
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.lr is not None:
        overrides["lr"] = args.lr
    if args.batch is not None:
        overrides["batch_size"] = args.batch
    train_cfg = trainer.TrainConfig(seed=args.seed, **overrides)
    ckpt = args.out or os.path.join(data_dir(), f"policy_{args.variant}.ckpt")
    params, report = trainer.train(ds, model_cfg, train_cfg, checkpoint_path=ckpt)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            json.dump(report.to_json_dict(), f, indent=1)
            f.write("\n")
    status = "aborted" if report.aborted else "done"
    print(f"training {status}: checkpoint {ckpt}, "
          f"final train MSE {report.train_mse[-1] if report.train_mse else float('nan'):.6f}")
    return 0


def _make_policy(spec: str):
    if spec == "expert:dwa":
        return DwaExpert()
    if spec == "scripted:stop":
        from .bench import ScriptedPolicy
        from .expert import Action
        return ScriptedPolicy(lambda obs: Action(0.0, 0.0), name="stop")
    if not os.path.exists(spec):
        raise LicsError(f"policy {spec!r}: no such checkpoint")
    return bench.ModelPolicy.from_checkpoint(spec)


def _cmd_eval(args) -> int:
    worlds = _load_worlds(args.worlds)
    policy = _make_policy(args.policy)
    cfg = SessionConfig()
    results = []
    t_star = {}
    for world in worlds:
        t_star[world.id] = bench.optimal_time(world)
        for trial in range(args.trials):
            results.append(bench.run_trial(
                world, policy, cfg, seed=args.seed + trial,
                use_safety=args.safety, max_v=args.max_v))
    report = bench.aggregate(results, t_star)
    overall = report["overall"]
    print(f"policy {policy.name}: success {overall['success_rate']:.2f}%  "
          f"avg time {overall['avg_time']}  avg score {overall['avg_score']:.4f}")
    if args.report:
        bench.write_report_json(report, args.report)
    if args.csv:
        bench.write_report_csv(report, args.csv)
    return 0


def _cmd_safety_check(_args) -> int:
    payload = json.load(sys.stdin)
    lidar_in = payload.get("lidar", {})
    lidar = LidarConfig(
        beam_count=int(lidar_in.get("beam_count", len(payload["scan"]))),
        angle_min=float(lidar_in.get("angle_min", -np.pi)),
        angle_max=float(lidar_in.get("angle_max", np.pi)),
        max_range=float(lidar_in.get("max_range", 20.0)),
    )
    cfg_in = payload.get("config", {})
    cfg = safety.SafetyConfig(
        eps_omega=float(cfg_in.get("eps_omega", 1e-3)),
        horizon=float(cfg_in.get("horizon", 1.0)),
        a_max=float(cfg_in.get("a_max", 2.0)),
        margin=float(cfg_in.get("margin", 0.05)),
    )
    scan = LidarScan(np.asarray(payload["scan"], dtype=float), lidar.max_range)
    points = safety.scan_to_points(scan, lidar)
    v, w = payload["action"]
    verdict = safety.check_action(points, float(v), float(w), cfg)
    json.dump(verdict.to_json_dict(), sys.stdout)
    sys.stdout.write("\n")
    return 0


def _cmd_teleop(args) -> int:
    from .teleop import serve_teleop
    worlds = _load_worlds(args.worlds)
    record_to = args.record_to or os.path.join(data_dir(), "teleop_dataset")
    serve_teleop(worlds, port=args.port, record_dir=record_to, seed=args.seed)
    return 0


_COMMANDS = {
    "worldgen": _cmd_worldgen,
    "record": _cmd_record,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "safety-check": _cmd_safety_check,
    "teleop": _cmd_teleop,
}


def dispatch(argv: list[str]) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (LicsError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
