"""Acceptance criteria, one test per criterion, each printing a pass/fail line.

Criteria 6 and 7 train fifteen policies and are skipped unless
``SKYSMOOTH_EXTENDED=1``.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from skysmooth import ddpg, experiments, gradcheck, metrics
from skysmooth import rewards as R
from skysmooth.cli import main
from skysmooth.rewards import RewardParams
from skysmooth.scene import builtin
from skysmooth.sim import GOAL, SimParams


@pytest.fixture(scope="session")
def ablation_cache(tmp_path_factory):
    return tmp_path_factory.mktemp("ablation_cache")


def test_criterion_1_reward_units(record):
    t0 = time.perf_counter()
    p = RewardParams(C1=1.0, d_soft=2.0, d_hard=0.5)
    got = {
        "margin(2.0)": (R.margin_reward(2.0, p), 0.0),
        "margin(1.25)": (R.margin_reward(1.25, p), -0.5),
        "margin(0.25)": (R.margin_reward(0.25, p), -2.0),
        "towards same": (R.towards_reward((1, 0), (3, 0)), 1.0),
        "towards perpendicular": (R.towards_reward((1, 0), (0, 2)), 0.0),
        "towards opposite": (R.towards_reward((1, 0), (-2, 0)), -1.0),
        "smooth straight": (R.smooth_reward((0, 0), (1, 0), (2, 0), 1, 1), 0.0),
        "smooth right angle": (R.smooth_reward((0, 0), (1, 0), (1, 1), 1, 1), -2.0),
        "smooth uneven": (R.smooth_reward((0, 0), (1, 0), (3, 0), 1, 1), -1.0),
    }
    bad = [k for k, (v, e) in got.items() if abs(v - e) > 1e-9]
    tr = R.Transition(d_obs=0.8, v_d=(1, 0), vel=(1.5, 0.5),
                      positions=((0, 0), (0.2, 0), (0.35, 0.1)), progress_delta=0.15,
                      deviation=0.1, goal_distance=9.0)
    for status in ("running", "goal", "collision"):
        b = R.total_reward(tr, status, RewardParams())
        if abs(b.total - (b.margin + b.towards + b.smooth + b.terminal_or_flight)) > 1e-9:
            bad.append(f"breakdown sum ({status})")
    dt = time.perf_counter() - t0
    ok = not bad and dt < 1.0
    record(1, "reward unit suite", ok, f"{len(got) + 3} checks, {dt * 1e3:.1f} ms"
           + (f", failing: {bad}" if bad else ""))
    assert ok


def test_criterion_2_gradients(record):
    t0 = time.perf_counter()
    results = gradcheck.run_suite(seed=0)
    dt = time.perf_counter() - t0
    worst = max(results.values())
    ok = worst < 1e-4 and dt < 60
    record(2, "gradient checks", ok, f"worst rel err {worst:.2e} over {sorted(results)}, "
           f"{dt:.1f} s")
    assert ok


def test_criterion_3_snake_descent(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    n, L = 21, 20.0
    pts = np.column_stack([np.linspace(0, L, n), rng.normal(0, 0.5, n)])
    pts[0, 1] = pts[-1, 1] = 0.0
    out, hist = R.snake_smooth(pts, R.SnakeEnergyParams(alpha=1.0, beta=1.0), step_size=0.02,
                               iterations=20000, return_history=True)
    monotone = all(b <= a for a, b in zip(hist, hist[1:]))
    pinned = np.array_equal(out[[0, -1]], pts[[0, -1]])
    # chord runs along the x axis, so perpendicular deviation is |y|
    dev = np.abs(out[:, 1]).max() / L
    dt = time.perf_counter() - t0
    ok = monotone and pinned and dev < 0.01 and dt < 10
    record(3, "snake descent", ok, f"energy {hist[0]:.3f} -> {hist[-1]:.3f}, monotone={monotone}, "
           f"max deviation {100 * dev:.4f}% of chord, {dt:.2f} s")
    assert ok


def test_criterion_4_metrics(record):
    t0 = time.perf_counter()
    errs = {}
    for radius in (1.0, 5.0):
        th = np.linspace(0, 1.5 * math.pi, 60)
        pts = np.column_stack([radius * np.cos(th), radius * np.sin(th)])
        traj = metrics.Trajectory(pts, np.zeros_like(pts), 0.1, "goal")
        errs[f"R={radius:g}"] = abs(metrics.avg_curvature(traj) - 1 / radius)
    line = np.column_stack([np.linspace(0, 10, 30), np.linspace(0, 4, 30)])
    straight = metrics.avg_curvature(metrics.Trajectory(line, np.zeros_like(line), 0.1, "goal"))
    route = builtin("train").route_length
    half = np.column_stack([np.linspace(1, 1 + route / 2, 25), np.full(25, 7.5)])
    c = metrics.cac([metrics.Trajectory(half, np.zeros_like(half), 0.1, "collision")], route)
    dt = time.perf_counter() - t0
    ok = max(errs.values()) < 1e-6 and abs(straight) < 1e-12 and abs(c - 50.0) < 1e-9 and dt < 1
    record(4, "metric correctness", ok, f"circle errors {errs}, straight {straight}, "
           f"half-route CAC {c:.6f}%, {dt * 1e3:.1f} ms")
    assert ok


@pytest.mark.slow
def test_criterion_5_learning_sanity(record):
    t0 = time.perf_counter()
    sc = builtin("empty")
    sim = SimParams()
    passed = []
    notes = []
    for seed in (0, 1, 2):
        cfg = ddpg.TrainConfig(seed=seed, episodes=2000, eval_every=25, eval_episodes=100,
                               stop_at_sr=90.0)
        policy, log = ddpg.train(sc, sim, RewardParams(), cfg)
        trajs = ddpg.evaluate(policy, sc, replace(sim, start_jitter=cfg.start_jitter),
                              ddpg.training_rewards(RewardParams(), cfg), 100, seed=1000 + seed)
        sr = 100.0 * sum(t.outcome == GOAL for t in trajs) / len(trajs)
        passed.append(sr >= 90.0)
        notes.append(f"seed {seed}: {len(log)} episodes, held-out SR {sr:.0f}%")
    dt = time.perf_counter() - t0
    ok = sum(passed) >= 2 and dt < 1800
    record(5, "learning sanity (empty scene)", ok, "; ".join(notes) + f"; {dt:.0f} s")
    assert ok


@pytest.mark.extended
def test_criterion_6_smoothness_ablation(record, ablation_cache):
    res = experiments.smoothness_ablation(seeds=(0, 1, 2), eval_episodes=50, test_scene="ts1",
                                          cache_dir=ablation_cache, log=print)
    w, wo = res["W_smooth"], res["WO_smooth"]
    cur = (experiments.seed_mean(w, "avg_cur"), experiments.seed_mean(wo, "avg_cur"))
    acc = (experiments.seed_mean(w, "avg_acc"), experiments.seed_mean(wo, "avg_acc"))
    ok = cur[0] <= cur[1] and acc[0] <= acc[1]
    record(6, "smoothness ablation on ts1", ok,
           f"avg_cur W={cur[0]:.4f} WO={cur[1]:.4f}; avg_acc W={acc[0]:.4f} WO={acc[1]:.4f}; "
           f"SR W={experiments.seed_mean(w, 'sr'):.0f} WO={experiments.seed_mean(wo, 'sr'):.0f}")
    assert ok


@pytest.mark.extended
def test_criterion_7_generalization_ablation(record, ablation_cache):
    res = experiments.generalization_ablation(seeds=(0, 1, 2), eval_episodes=50,
                                              test_scene="ts2", cache_dir=ablation_cache,
                                              log=print)
    sr = {k: experiments.seed_mean(v, "sr") for k, v in res.items()}
    cac = {k: experiments.seed_mean(v, "cac") for k, v in res.items()}
    best = "shallow+vec"
    ok = all(sr[best] >= v for v in sr.values()) and all(cac[best] >= v for v in cac.values())
    detail = ", ".join(f"{k}: SR {sr[k]:.1f} CAC {cac[k]:.1f}" for k in res)
    record(7, "depth/goal-signal ablation on ts2", ok, detail)
    assert ok


def test_criterion_8_determinism(record, tmp_path, monkeypatch):
    args = ["train", "--scene", "train", "--seed", "7", "--episodes", "4", "--out", "run",
            "--quiet", "--set", "train.warmup_steps=200", "--set", "train.eval_every=2",
            "--set", "train.eval_episodes=2"]
    files = {}
    for tag in ("a", "b"):
        d = tmp_path / tag
        d.mkdir()
        monkeypatch.chdir(d)
        assert main(args) == 0
        assert main(["eval", "--policy", "run/policy.ckpt", "--scene", "ts1", "--episodes", "5",
                     "--seed", "3", "--out", "ev"]) == 0
        files[tag] = {p.relative_to(d).as_posix(): p.read_bytes()
                      for p in sorted(d.rglob("*")) if p.is_file()}
    same = files["a"] == files["b"]
    diff = [k for k in files["a"] if files["a"][k] != files["b"].get(k)]
    ok = same and "run/train_log.csv" in files["a"]
    record(8, "determinism (train + eval)", ok,
           f"{len(files['a'])} output files byte-identical" if ok else f"differing: {diff}")
    assert ok
