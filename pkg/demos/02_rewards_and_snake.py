"""
Reward terms and the snake energy behind the smoothness reward
==============================================================
"""

# %%
import numpy as np

from skysmooth import rewards as R

p = R.RewardParams()
for d in [3.0, 2.0, 1.0, 0.5, 0.25, 0.05]:
    print(f"clearance {d:4.2f} m -> margin reward {R.margin_reward(d, p):8.3f}")

# %%
# The towards term is the cosine between the flown velocity and the goal direction.
for v in [(2, 0), (1, 1), (0, 2), (-2, 0)]:
    print(v, round(R.towards_reward((1, 0), v), 3))

# %%
# The smoothness term penalises bending and uneven spacing of three
# consecutive positions; a straight, evenly spaced triple costs nothing.
triples = {
    "straight": [(0, 0), (1, 0), (2, 0)],
    "right angle": [(0, 0), (1, 0), (1, 1)],
    "stretched": [(0, 0), (1, 0), (3, 0)],
}
for name, (a, b, c) in triples.items():
    print(f"{name:12s} {R.smooth_reward(a, b, c, p.C3, p.C4):+.3f}")

# %%
# Snake energy: stretching plus bending.  Gradient descent with pinned ends
# pulls a noisy polyline onto the straight chord.
rng = np.random.default_rng(0)
pts = np.column_stack([np.linspace(0, 20, 21), rng.normal(0, 0.5, 21)])
pts[[0, -1], 1] = 0.0
smoothed, energy = R.snake_smooth(pts, iterations=20000, return_history=True)
print(f"energy {energy[0]:.2f} -> {energy[-1]:.4f}")
print("max |y| before", np.abs(pts[:, 1]).max().round(3), "after", np.abs(smoothed[:, 1]).max())
