"""Planar UAV environment with velocity-command kinematics and ray-cast depth.

The camera looks along the direction of travel.  Observations carry the raw
("deep") depth frames; :func:`truncate_depth` turns them into shallow depth.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import scene as scene_mod
from .geometry import CompiledObstacles, norm, unit
from .metrics import Trajectory, write_trajectory_csv
from .rewards import RewardBreakdown, RewardParams, Transition, total_reward

RUNNING, GOAL, COLLISION, OUT_OF_BOUNDS, TIMEOUT = (
    "running", "goal", "collision", "out_of_bounds", "timeout")


@dataclass(frozen=True)
class SimParams:
    dt: float = 0.1
    v_max: float = 2.0
    uav_radius: float = 0.3
    goal_radius: float = 0.5
    max_steps: int = 500
    fov: float = math.pi / 2
    n_rays: int = 32
    d_trunc: float = 5.0
    d_max_sensor: float = 20.0
    k_stack: int = 4
    start_jitter: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 < self.d_trunc <= self.d_max_sensor:
            raise ValueError("need 0 < d_trunc <= d_max_sensor")
        if self.n_rays < 2 or self.k_stack < 1:
            raise ValueError("need n_rays >= 2 and k_stack >= 1")


@dataclass(frozen=True)
class Observation:
    depth_stack: np.ndarray      # (k_stack, n_rays), oldest frame first
    vel: np.ndarray
    unit_to_goal: np.ndarray
    goal_distance: float

    def shallow(self, d_trunc: float) -> np.ndarray:
        return truncate_depth(self.depth_stack, d_trunc)


@dataclass(frozen=True)
class StepResult:
    obs: Observation
    reward: RewardBreakdown
    status: str
    info: dict = field(default_factory=dict)


def truncate_depth(frame, d_trunc: float) -> np.ndarray:
    if not d_trunc > 0:
        raise ValueError("d_trunc must be positive")
    return np.minimum(frame, d_trunc)


def unit_to_goal(pos, goal, goal_radius: float) -> np.ndarray:
    d = np.asarray(goal, dtype=float) - np.asarray(pos, dtype=float)
    if norm(d) <= goal_radius:
        return np.zeros(2)
    return unit(d)


def ray_angles(heading: float, params: SimParams) -> np.ndarray:
    return heading + np.linspace(-params.fov / 2, params.fov / 2, params.n_rays)


def render_depth(scene, pos, heading: float, params: SimParams,
                 compiled: CompiledObstacles | None = None) -> np.ndarray:
    """One depth frame: ``n_rays`` ranges spread evenly over the field of view."""
    if compiled is None:
        compiled = CompiledObstacles(scene.obstacles)
    ang = ray_angles(heading, params)
    dirs = np.column_stack([np.cos(ang), np.sin(ang)])
    return compiled.cast(pos, dirs, scene.bounds, params.d_max_sensor)


def clamp_speed(action, v_max: float) -> np.ndarray:
    a = np.asarray(action, dtype=float).reshape(2)
    n = norm(a)
    if n > v_max:
        a = a * (v_max / n)
    return a


class Env:
    """One episode of one UAV in one scene.  Create it with :func:`reset`."""

    def __init__(self, scene: scene_mod.Scene, params: SimParams, seed: int,
                 rewards: RewardParams | None = None):
        problems = scene_mod.validate(scene)
        if problems:
            raise scene_mod.SceneError("invalid scene: " + "; ".join(problems))
        self.scene = scene
        self.params = params
        self.rewards = rewards if rewards is not None else RewardParams()
        self.seed = seed
        self.compiled = CompiledObstacles(scene.obstacles)
        self.goal = np.asarray(scene.goal, dtype=float)

        rng = np.random.default_rng(seed)
        start = np.asarray(scene.start, dtype=float)
        if params.start_jitter > 0:
            r = params.start_jitter * math.sqrt(rng.random())
            th = 2 * math.pi * rng.random()
            start = start + r * np.array([math.cos(th), math.sin(th)])
        self.pos = start
        self.vel = np.zeros(2)
        d = self.goal - start
        self.heading = math.atan2(d[1], d[0])
        self.steps = 0
        self.status = RUNNING
        self.positions = deque([start.copy()], maxlen=3)
        self.route_s = scene_mod.project_onto_route(scene, start).s

        frame = self._frame()
        self.frames = deque([frame] * params.k_stack, maxlen=params.k_stack)
        frame0 = scene_mod.project_onto_route(scene, start)
        self.rows = [(0, 0.0, float(start[0]), float(start[1]), 0.0, 0.0, self._d_obs(),
                      frame0.deviation, 0.0, 0.0, 0.0, 0.0, 0.0, RUNNING)]

    def _frame(self) -> np.ndarray:
        b = self.scene.bounds
        p = np.clip(self.pos, [b.xmin, b.ymin], [b.xmax, b.ymax])
        return render_depth(self.scene, p, self.heading, self.params, self.compiled)

    def _d_obs(self) -> float:
        return self.compiled.min_distance(self.pos) - self.params.uav_radius

    def observation(self) -> Observation:
        return Observation(
            depth_stack=np.array(self.frames),
            vel=self.vel.copy(),
            unit_to_goal=unit_to_goal(self.pos, self.goal, self.params.goal_radius),
            goal_distance=norm(self.goal - self.pos),
        )

    def step(self, action) -> StepResult:
        if self.status != RUNNING:
            raise RuntimeError("episode ended")
        p = self.params
        a = clamp_speed(action, p.v_max)
        old = self.pos
        v_d = unit_to_goal(old, self.goal, p.goal_radius)
        self.vel = a
        self.pos = old + a * p.dt
        if norm(a) > 1e-6:
            self.heading = math.atan2(a[1], a[0])
        self.steps += 1
        self.positions.append(self.pos.copy())

        d_obs = self._d_obs()
        frame = scene_mod.project_onto_route(self.scene, self.pos)
        progress = frame.s - self.route_s
        self.route_s = frame.s
        goal_dist = norm(self.goal - self.pos)

        if d_obs <= 0:
            status = COLLISION
        elif goal_dist <= p.goal_radius:
            status = GOAL
        elif not self.scene.bounds.contains(self.pos):
            status = OUT_OF_BOUNDS
        elif self.steps >= p.max_steps:
            status = TIMEOUT
        else:
            status = RUNNING
        self.status = status

        tr = Transition(d_obs=d_obs, v_d=tuple(v_d), vel=tuple(a),
                        positions=tuple(self.positions), progress_delta=progress,
                        deviation=frame.deviation, goal_distance=goal_dist)
        reward = total_reward(tr, status, self.rewards)
        self.frames.append(self._frame())
        self.rows.append((self.steps, self.steps * p.dt, float(self.pos[0]), float(self.pos[1]),
                          float(a[0]), float(a[1]), d_obs, frame.deviation, reward.margin,
                          reward.towards, reward.smooth, reward.terminal_or_flight,
                          reward.total, status))
        info = {"d_obs": d_obs, "deviation": frame.deviation, "progress_delta": progress}
        return StepResult(obs=self.observation(), reward=reward, status=status, info=info)

    @property
    def done(self) -> bool:
        return self.status != RUNNING

    def trajectory(self) -> Trajectory:
        pts = [(r[2], r[3]) for r in self.rows]
        vels = [(r[4], r[5]) for r in self.rows]
        return Trajectory(points=pts, vels=vels, dt=self.params.dt, outcome=self.status)

    def write_log(self, path) -> None:
        write_trajectory_csv(path, self.rows)


def reset(scene: scene_mod.Scene, params: SimParams, seed: int,
          rewards: RewardParams | None = None) -> tuple[Env, Observation]:
    env = Env(scene, params, seed, rewards)
    return env, env.observation()


def step(env: Env, action) -> StepResult:
    return env.step(action)
