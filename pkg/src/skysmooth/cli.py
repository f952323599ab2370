"""Batch command line: ``train``, ``eval``, ``metrics``, ``plot``, ``scene``, ``gradcheck``.

Exit codes: 0 success, 1 input/config error, 2 training divergence or a failed
gradient check.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

from . import config as config_mod
from . import ddpg, gradcheck, metrics, plot
from . import scene as scene_mod

SEED_ENV = "SKYSMOOTH_SEED"


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def _fail(msg: str, code: int = 1) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def resolve_config(args) -> config_mod.RunConfig:
    cfg = config_mod.load(args.config) if args.config else config_mod.RunConfig()
    seed = args.seed if args.seed is not None else (
        cfg.train.seed if args.config else _default_seed())
    cfg = replace(cfg, train=replace(cfg.train, seed=seed))
    if args.scene:
        cfg = replace(cfg, scene=args.scene)
    if args.out:
        cfg = replace(cfg, out=args.out)
    if args.smooth is not None:
        cfg = replace(cfg, train=replace(cfg.train, smooth_enabled=args.smooth == "on"))
    if args.episodes is not None:
        cfg = replace(cfg, train=replace(cfg.train, episodes=args.episodes))
    for assignment in args.set or []:
        cfg = config_mod.apply_override(cfg, assignment)
    return cfg


def cmd_train(args) -> int:
    try:
        cfg = resolve_config(args)
        sc = scene_mod.resolve(cfg.scene)
    except (config_mod.ConfigError, scene_mod.SceneError, ValueError) as exc:
        return _fail(str(exc))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    resolved = cfg.to_dict()
    (out / "config.json").write_text(json.dumps(resolved, indent=2) + "\n")

    def progress(row):
        if not args.quiet:
            ep, ret, steps, outcome, sr = row
            extra = "" if sr is None else f" eval_sr={sr:.0f}"
            print(f"episode {ep} return {ret:.1f} steps {steps} {outcome}{extra}", flush=True)

    try:
        policy, log = ddpg.train(sc, cfg.sim, cfg.rewards, cfg.train, progress=progress)
    except FloatingPointError as exc:
        return _fail(f"training diverged: {exc}", 2)
    ddpg.write_train_log(out / "train_log.csv", log)
    ddpg.save_policy(policy, out / "policy.ckpt", config=resolved)
    print(f"wrote {out / 'policy.ckpt'}")
    return 0


def cmd_eval(args) -> int:
    try:
        policy = ddpg.load_policy(args.policy)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        return _fail(f"cannot load policy: {exc}")
    try:
        header = json.loads(Path(args.policy).read_bytes().split(b"\n", 1)[0])
        run = config_mod.from_dict(header.get("config") or {})
        sc = scene_mod.resolve(args.scene)
    except (config_mod.ConfigError, scene_mod.SceneError, ValueError) as exc:
        return _fail(str(exc))
    seed = args.seed if args.seed is not None else _default_seed()
    jitter = run.train.start_jitter if args.jitter is None else args.jitter
    sim_params = replace(run.sim, start_jitter=jitter)
    rewards = ddpg.training_rewards(run.rewards, run.train)
    trajs = ddpg.evaluate(policy, sc, sim_params, rewards, args.episodes, seed, out_dir=args.out)
    rep = metrics.report(trajs, sc.route_length)
    rep.write(args.out)
    print(rep.to_json())
    return 0


def cmd_metrics(args) -> int:
    try:
        rep = metrics.aggregate_report(args.dir, args.route_length)
    except ValueError as exc:
        return _fail(str(exc))
    if args.meters:
        files = sorted(p for p in Path(args.dir).glob("*.csv") if p.stem != "report")
        cac_m = metrics.cac_meters([metrics.read_trajectory_csv(f) for f in files])
        print(json.dumps({**asdict(rep), "cac_m": cac_m}, indent=2))
    else:
        print(rep.to_json())
    return 0


def cmd_plot(args) -> int:
    try:
        sc = scene_mod.resolve(args.scene)
        src = Path(args.traj)
        if src.is_dir():
            files = sorted(p for p in src.glob("*.csv") if p.stem != "report")
        elif src.exists():
            files = [src]
        else:
            return _fail(f"trajectory not found: {src}")
        trajs = [metrics.read_trajectory_csv(f).points for f in files]
    except (scene_mod.SceneError, ValueError) as exc:
        return _fail(str(exc))
    plot.write_svg(args.out, sc, trajs)
    print(f"wrote {args.out}")
    return 0


def cmd_scene(args) -> int:
    try:
        sc = scene_mod.builtin(args.name)
    except scene_mod.SceneError as exc:
        return _fail(str(exc))
    scene_mod.save(sc, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_gradcheck(args) -> int:
    results = gradcheck.run_suite(args.seed if args.seed is not None else 0)
    for name, err in results.items():
        print(f"{name:18s} {err:.3e}")
    worst = max(results.values())
    print(f"worst relative error {worst:.3e}")
    return 0 if worst < 1e-4 else 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skysmooth", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a policy")
    t.add_argument("--config", help="run config JSON")
    t.add_argument("--scene", help="builtin scene name or scene file")
    t.add_argument("--seed", type=int)
    t.add_argument("--out", help="output directory")
    t.add_argument("--smooth", choices=["on", "off"])
    t.add_argument("--episodes", type=int)
    t.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="dotted override, e.g. rewards.C3=1.0 (repeatable)")
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="greedy evaluation of a trained policy")
    e.add_argument("--policy", required=True)
    e.add_argument("--scene", required=True)
    e.add_argument("--episodes", type=int, default=100)
    e.add_argument("--seed", type=int)
    e.add_argument("--jitter", type=float, help="start-position jitter radius in metres")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval)

    m = sub.add_parser("metrics", help="metrics of a directory of trajectory CSVs")
    m.add_argument("dir")
    m.add_argument("--route-length", type=float)
    m.add_argument("--meters", action="store_true", help="also print CAC in metres")
    m.set_defaults(func=cmd_metrics)

    pl = sub.add_parser("plot", help="top-down SVG of trajectories")
    pl.add_argument("traj", help="trajectory CSV or directory of them")
    pl.add_argument("--scene", required=True)
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plot)

    s = sub.add_parser("scene", help="write a builtin scene to a file")
    s.add_argument("name")
    s.add_argument("out")
    s.set_defaults(func=cmd_scene)

    g = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
