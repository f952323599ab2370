"""
Training a policy, evaluating it and reading the metrics
========================================================

A short run on the obstacle-free scene converges in a few dozen episodes.
Swap in ``"train"`` and a few hundred episodes for the obstacle course.
"""

# %%
from pathlib import Path

from skysmooth import ddpg, metrics, plot, scene
from skysmooth.rewards import RewardParams
from skysmooth.sim import SimParams

out = Path("demo_run")
out.mkdir(exist_ok=True)
sc = scene.builtin("empty")
sim_params = SimParams()
cfg = ddpg.TrainConfig(episodes=150, eval_every=25, eval_episodes=20, stop_at_sr=95, seed=0)


def show(row):
    ep, ret, steps, outcome, sr = row
    if sr is not None:
        print(f"episode {ep:4d}  return {ret:8.1f}  steps {steps:3d}  {outcome:13s} eval SR {sr:.0f}%")


policy, log = ddpg.train(sc, sim_params, RewardParams(), cfg, progress=show)
ddpg.save_policy(policy, out / "policy.ckpt", config={"train": ddpg.config_dict(cfg)})

# %%
# Greedy evaluation on the same scene, logged one CSV per episode.
trajs = ddpg.evaluate(policy, sc, sim_params, RewardParams(), episodes=20, seed=1000,
                      out_dir=out / "eval")
rep = metrics.report(trajs, sc.route_length)
print(rep.to_json())

# %%
# The CSV logs carry everything needed to recompute the report later.
print(metrics.aggregate_report(out / "eval").to_json())
plot.write_svg(out / "eval.svg", sc, [t.points for t in trajs])
print("wrote", out / "eval.svg")
