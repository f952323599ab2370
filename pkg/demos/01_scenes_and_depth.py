"""
Scenes, signed distances and the depth sensor
=============================================

Walk through the built-in scenes, query obstacle clearance and render one
depth frame the way the UAV sees it.
"""

# %%
import numpy as np

from skysmooth import scene, sim
from skysmooth.geometry import CompiledObstacles, min_obstacle_distance

for name in scene.BUILTIN_NAMES:
    sc = scene.builtin(name)
    print(f"{name:6s} {sc.bounds.size}  route {sc.route_length:5.1f} m  "
          f"{len(sc.obstacles)} obstacles")

# %%
# Clearance from a point to the nearest obstacle is a signed distance:
# negative inside a shape, zero on its boundary.
train = scene.builtin("train")
for p in [(1.0, 7.5), (5.0, 7.5), train.obstacles[0].center]:
    d, idx = min_obstacle_distance(p, train.obstacles)
    print(f"point {tuple(np.round(p, 2))}: clearance {d:+.3f} m to obstacle {idx}")

# %%
# The route frame splits a position into progress along the straight
# start-goal segment and lateral deviation from it.
f = scene.project_onto_route(train, (10.0, 9.0))
print(f"progress {f.s:.2f} m, deviation {f.deviation:.2f} m")

# %%
# One depth frame: 32 rays across a 90 degree field of view, looking at the goal.
params = sim.SimParams()
frame = sim.render_depth(train, train.start, 0.0, params, CompiledObstacles(train.obstacles))
print("deep    ", np.round(frame, 1))
print("shallow ", np.round(sim.truncate_depth(frame, params.d_trunc), 1))

# %%
# The environment stacks the last k frames.  Fly straight ahead for a few steps.
env, obs = sim.reset(train, params, seed=0)
print("stack shape", obs.depth_stack.shape)
for _ in range(5):
    res = env.step((params.v_max, 0.0))
print("after 5 steps:", res.status, "reward", round(res.reward.total, 3), res.reward)
