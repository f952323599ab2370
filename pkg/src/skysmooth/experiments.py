"""Multi-seed training/evaluation runs behind the ablation studies.

Trained policies are cached on disk keyed by their full configuration, so a
variant shared by two studies (shallow depth + unit vector without the
smoothness term is also the "without smoothness" model) is trained once.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import ddpg, metrics
from .rewards import RewardParams
from .scene import Scene, builtin
from .sim import SimParams

GENERALIZATION_VARIANTS = {
    "deep+dist": ("deep", "distance"),
    "shallow+dist": ("shallow", "distance"),
    "deep+vec": ("deep", "unit_vector"),
    "shallow+vec": ("shallow", "unit_vector"),
}


@dataclass
class RunResult:
    label: str
    seed: int
    report: metrics.MetricsReport
    train_episodes: int


def _key(scene: Scene, sim: SimParams, rewards: RewardParams, cfg: ddpg.TrainConfig) -> str:
    doc = json.dumps({"scene": scene.name, "sim": asdict(sim), "rewards": asdict(rewards),
                      "train": asdict(cfg)}, sort_keys=True)
    return hashlib.sha256(doc.encode()).hexdigest()[:16]


def trained_policy(scene: Scene, sim: SimParams, rewards: RewardParams, cfg: ddpg.TrainConfig,
                   cache_dir=None) -> tuple[ddpg.Policy, int]:
    """Train (or reload from ``cache_dir``); returns the policy and its episode count."""
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"{_key(scene, sim, rewards, cfg)}.ckpt"
        if path.exists():
            meta = json.loads(path.with_suffix(".json").read_text())
            return ddpg.load_policy(path), meta["episodes"]
    policy, log = ddpg.train(scene, sim, rewards, cfg)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        ddpg.save_policy(policy, path)
        path.with_suffix(".json").write_text(json.dumps({"episodes": len(log)}))
    return policy, len(log)


def evaluate_report(policy: ddpg.Policy, scene: Scene, sim: SimParams, rewards: RewardParams,
                    cfg: ddpg.TrainConfig, episodes: int, seed: int) -> metrics.MetricsReport:
    sim = replace(sim, start_jitter=cfg.start_jitter)
    trajs = ddpg.evaluate(policy, scene, sim, ddpg.training_rewards(rewards, cfg), episodes, seed)
    return metrics.report(trajs, scene.route_length)


def run_variant(label: str, cfg: ddpg.TrainConfig, seeds, train_scene: str, test_scene: str,
                eval_episodes: int, sim: SimParams | None = None,
                rewards: RewardParams | None = None, cache_dir=None,
                log=print) -> list[RunResult]:
    sim = sim or SimParams()
    rewards = rewards or RewardParams()
    tr, te = builtin(train_scene), builtin(test_scene)
    out = []
    for seed in seeds:
        c = replace(cfg, seed=seed)
        policy, n = trained_policy(tr, sim, rewards, c, cache_dir)
        rep = evaluate_report(policy, te, sim, rewards, c, eval_episodes, seed=1000 + seed)
        out.append(RunResult(label, seed, rep, n))
        if log:
            log(f"{label} seed={seed} episodes={n} sr={rep.sr:.1f} cac={rep.cac:.1f} "
                f"acc={rep.avg_acc:.4f} cur={rep.avg_cur:.4f}")
    return out


def seed_mean(results: list[RunResult], attr: str) -> float:
    """Mean over seeds of one report field; ``nan`` entries are skipped, all-``nan`` gives ``nan``."""
    vals = [getattr(r.report, attr) for r in results]
    vals = [v for v in vals if not math.isnan(v)]
    return float(np.mean(vals)) if vals else math.nan


def smoothness_ablation(seeds=(0, 1, 2), episodes: int = 400, eval_episodes: int = 50,
                        test_scene: str = "ts1", cache_dir=None, log=print) -> dict:
    base = ddpg.TrainConfig(episodes=episodes, eval_every=0)
    res = {}
    for label, smooth in (("W_smooth", True), ("WO_smooth", False)):
        res[label] = run_variant(label, replace(base, smooth_enabled=smooth), seeds, "train",
                                 test_scene, eval_episodes, cache_dir=cache_dir, log=log)
    return res


def generalization_ablation(seeds=(0, 1, 2), episodes: int = 400, eval_episodes: int = 50,
                            test_scene: str = "ts2", cache_dir=None, log=print) -> dict:
    base = ddpg.TrainConfig(episodes=episodes, eval_every=0, smooth_enabled=False)
    res = {}
    for label, (depth, goal) in GENERALIZATION_VARIANTS.items():
        cfg = replace(base, depth_mode=depth, goal_signal=goal)
        res[label] = run_variant(label, cfg, seeds, "train", test_scene, eval_episodes,
                                 cache_dir=cache_dir, log=log)
    return res
