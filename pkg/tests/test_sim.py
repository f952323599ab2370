import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skysmooth import sim
from skysmooth.geometry import Bounds, Disc
from skysmooth.metrics import read_trajectory_csv
from skysmooth.scene import Scene, SceneError

P = sim.SimParams()


def fly(env, action, limit=10_000):
    res = None
    while not env.done and limit:
        res = env.step(action)
        limit -= 1
    return res


def test_straight_flight_reaches_goal(open_scene):
    env, obs = sim.reset(open_scene, P, seed=0)
    np.testing.assert_allclose(obs.unit_to_goal, [1, 0])
    res = fly(env, (2.0, 0.0))
    assert res.status == sim.GOAL
    # 18 m route, 0.2 m per step, goal reached once within 0.5 m
    assert env.steps == 88
    assert res.reward.terminal_or_flight == env.rewards.R_g


def test_collision_step_matches_geometry(open_scene):
    sc = Scene("wall", open_scene.bounds, open_scene.start, open_scene.goal,
               obstacles=(Disc((10.0, 7.5), 1.0),))
    env, _ = sim.reset(sc, P, seed=0)
    res = fly(env, (2.0, 0.0))
    assert res.status == sim.COLLISION
    # contact once x >= 10 - 1 - 0.3
    assert env.steps == math.ceil((8.7 - 1.0) / 0.2 - 1e-9)
    assert res.reward.terminal_or_flight == env.rewards.R_c


def test_out_of_bounds(open_scene):
    env, _ = sim.reset(open_scene, P, seed=0)
    res = fly(env, (0.0, 2.0))
    assert res.status == sim.OUT_OF_BOUNDS
    assert env.pos[1] > 15.0 and env.steps == 38
    assert res.reward.terminal_or_flight == env.rewards.R_c


def test_timeout(open_scene):
    env, _ = sim.reset(open_scene, sim.SimParams(max_steps=5), seed=0)
    res = fly(env, (0.0, 0.0))
    assert res.status == sim.TIMEOUT and env.steps == 5


def test_goal_beats_out_of_bounds():
    sc = Scene("edge", Bounds(0, 0, 20, 15), start=(1.0, 7.5), goal=(19.9, 7.5))
    env, _ = sim.reset(sc, sim.SimParams(dt=1.0), seed=0)
    for _ in range(18):
        env.step((1.0, 0.0))
    assert env.status == sim.RUNNING
    env.step((1.3, 0.0))   # lands at x=20.3: 0.4 m from goal and outside the bounds
    assert env.status == sim.GOAL


def test_collision_beats_timeout(open_scene):
    sc = Scene("wall", open_scene.bounds, open_scene.start, open_scene.goal,
               obstacles=(Disc((10.0, 7.5), 1.0),))
    env, _ = sim.reset(sc, sim.SimParams(max_steps=39), seed=0)
    assert fly(env, (2.0, 0.0)).status == sim.COLLISION and env.steps == 39


def test_step_after_end_raises(open_scene):
    env, _ = sim.reset(open_scene, sim.SimParams(max_steps=1), seed=0)
    env.step((0, 0))
    with pytest.raises(RuntimeError, match="episode ended"):
        env.step((0, 0))


def test_invalid_scene_rejected(open_scene):
    sc = Scene("bad", open_scene.bounds, open_scene.start, open_scene.goal,
               obstacles=(Disc(open_scene.goal, 0.5),))
    with pytest.raises(SceneError, match="goal"):
        sim.reset(sc, P, seed=0)


def test_speed_clamped():
    np.testing.assert_allclose(sim.clamp_speed((3.0, 4.0), 2.0), [1.2, 1.6])
    np.testing.assert_allclose(sim.clamp_speed((0.3, 0.4), 2.0), [0.3, 0.4])


def test_depth_three_rays(open_scene):
    params = sim.SimParams(n_rays=3)
    frame = sim.render_depth(open_scene, (1.0, 7.5), 0.0, params)
    # centre ray meets the far wall, the side rays meet the top and bottom walls
    np.testing.assert_allclose(frame, [7.5 * math.sqrt(2), 19.0, 7.5 * math.sqrt(2)])
    far = sim.render_depth(open_scene, (1.0, 7.5), math.pi, params)
    assert far[1] == pytest.approx(1.0)


def test_depth_sees_obstacle(open_scene):
    sc = Scene("d", open_scene.bounds, open_scene.start, open_scene.goal,
               obstacles=(Disc((6.0, 7.5), 1.0),))
    frame = sim.render_depth(sc, (1.0, 7.5), 0.0, sim.SimParams(n_rays=3))
    assert frame[1] == pytest.approx(4.0)


def test_truncate_depth():
    np.testing.assert_array_equal(sim.truncate_depth(np.array([1.0, 6.0, 20.0]), 5.0),
                                  [1.0, 5.0, 5.0])
    with pytest.raises(ValueError):
        sim.truncate_depth(np.ones(3), 0.0)


@given(st.lists(st.floats(0, 30), min_size=1, max_size=10), st.floats(0.5, 20))
def test_truncate_idempotent_and_bounded(vals, cap):
    out = sim.truncate_depth(np.array(vals), cap)
    assert out.max() <= cap
    np.testing.assert_array_equal(sim.truncate_depth(out, cap), out)


def test_frame_stack(open_scene):
    env, obs = sim.reset(open_scene, P, seed=0)
    assert obs.depth_stack.shape == (P.k_stack, P.n_rays)
    assert all(np.array_equal(f, obs.depth_stack[0]) for f in obs.depth_stack)
    res = env.step((0.0, 2.0))
    # newest frame last, rendered looking up
    np.testing.assert_array_equal(res.obs.depth_stack[:-1], obs.depth_stack[1:])
    assert not np.array_equal(res.obs.depth_stack[-1], obs.depth_stack[-1])
    assert res.obs.shallow(P.d_trunc).max() <= P.d_trunc


def test_unit_to_goal_zero_inside_radius():
    np.testing.assert_array_equal(sim.unit_to_goal((0, 0), (0.3, 0), 0.5), [0, 0])
    np.testing.assert_allclose(sim.unit_to_goal((0, 0), (3, 4), 0.5), [0.6, 0.8])


def test_log_rows_and_round_trip(open_scene, tmp_path):
    env, _ = sim.reset(open_scene, P, seed=0)
    fly(env, (2.0, 0.0))
    assert len(env.rows) == env.steps + 1
    env.write_log(tmp_path / "ep.csv")
    back = read_trajectory_csv(tmp_path / "ep.csv")
    np.testing.assert_array_equal(back.points, env.trajectory().points)
    assert back.outcome == sim.GOAL


def test_progress_sums_to_route_coordinate(open_scene):
    env, _ = sim.reset(open_scene, P, seed=0)
    total = 0.0
    for a in [(2, 0.5), (1, -1), (0.5, 0.2)] * 5:
        total += env.step(a).info["progress_delta"]
    assert total == pytest.approx(env.pos[0] - open_scene.start[0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_jitter_seeded_and_bounded(seed):
    sc = Scene("open", Bounds(0, 0, 20, 15), start=(3.0, 7.5), goal=(19.0, 7.5))
    params = sim.SimParams(start_jitter=0.5)
    a, _ = sim.reset(sc, params, seed)
    b, _ = sim.reset(sc, params, seed)
    np.testing.assert_array_equal(a.pos, b.pos)
    assert math.dist(a.pos, sc.start) <= 0.5
