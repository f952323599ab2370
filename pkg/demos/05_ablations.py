"""
Ablation studies: smoothness reward and observation variants
============================================================

Each study trains three seeds per variant on the ``train`` scene and
evaluates greedily on a held-out scene.  Expect roughly five minutes per
trained policy on one CPU core; trained policies are cached in
``ablation_cache/`` so a rerun only evaluates.
"""

# %%
from skysmooth import experiments as ex

cache = "ablation_cache"
smooth = ex.smoothness_ablation(seeds=(0, 1, 2), eval_episodes=50, test_scene="ts1",
                                cache_dir=cache)
for label, runs in smooth.items():
    print(f"{label:10s} avg_cur {ex.seed_mean(runs, 'avg_cur'):.4f}  "
          f"avg_acc {ex.seed_mean(runs, 'avg_acc'):.4f}  SR {ex.seed_mean(runs, 'sr'):.0f}%")

# %%
gen = ex.generalization_ablation(seeds=(0, 1, 2), eval_episodes=50, test_scene="ts2",
                                 cache_dir=cache)
for label, runs in gen.items():
    print(f"{label:13s} SR {ex.seed_mean(runs, 'sr'):5.1f}%  CAC {ex.seed_mean(runs, 'cac'):5.1f}%")
