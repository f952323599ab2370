"""Reward terms for collision-free, smooth flight and the discrete snake energy.

The per-step reward is

    r_t = margin + towards + smooth + (R_g | R_c | flight)

with the last term chosen by the episode status.  :func:`snake_energy` and
:func:`snake_smooth` are the squared-norm curve energy that the smoothness
term is modelled on; they serve as an independent check of what "smooth"
means for a polyline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import norm


@dataclass(frozen=True)
class RewardParams:
    C1: float = 2.0
    C2: Optional[float] = None  # None -> C1 * d_hard, which makes the margin field continuous
    C3: float = 2.0
    C4: float = 2.0
    d_soft: float = 2.0
    d_hard: float = 0.5
    R_g: float = 50.0
    R_c: float = -50.0
    c_fwd: float = 1.0
    c_dev: float = 0.1
    eps_d: float = 0.01
    smooth_enabled: bool = True
    towards_mode: str = "unit_vector"  # or "distance"
    # At 10 or 20 m the summed distance penalty outweighs R_c and policies learn
    # to crash; at 100 m the pull is too weak and they hover until timeout.
    dist_scale: float = 50.0

    def __post_init__(self):
        if not self.d_soft > self.d_hard > 0:
            raise ValueError("need d_soft > d_hard > 0")
        if not self.eps_d > 0:
            raise ValueError("eps_d must be positive")
        if self.towards_mode not in ("unit_vector", "distance"):
            raise ValueError(f"towards_mode must be unit_vector or distance, got {self.towards_mode!r}")

    @property
    def c2(self) -> float:
        return self.C1 * self.d_hard if self.C2 is None else self.C2


@dataclass(frozen=True)
class RewardBreakdown:
    margin: float
    towards: float
    smooth: float
    terminal_or_flight: float
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "total", self.margin + self.towards + self.smooth + self.terminal_or_flight)


@dataclass(frozen=True)
class SnakeEnergyParams:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or (self.alpha == 0 and self.beta == 0):
            raise ValueError("alpha, beta must be nonnegative and not both zero")


def margin_reward(d_obs: float, p: RewardParams) -> float:
    """Zero outside the soft zone, linear inside it, inverse-distance inside the hard zone."""
    if d_obs >= p.d_soft:
        return 0.0
    if d_obs >= p.d_hard:
        return -p.C1 * (p.d_soft - d_obs) / (p.d_soft - p.d_hard)
    return -p.c2 / max(d_obs, p.eps_d)


def towards_reward(v_d, v_vel) -> float:
    """Cosine of the angle between the to-goal direction and the velocity."""
    nd, nv = norm(v_d), norm(v_vel)
    if nv < 1e-6 or nd == 0.0:
        return 0.0
    c = (v_d[0] * v_vel[0] + v_d[1] * v_vel[1]) / (nd * nv)
    return min(1.0, max(-1.0, c))


def distance_reward(goal_distance: float, p: RewardParams) -> float:
    """Negative absolute distance to the goal, in units of ``dist_scale`` metres."""
    return -goal_distance / p.dist_scale


def smooth_reward(p_prev, p_curr, p_next, C3: float, C4: float) -> float:
    a, b, c = (np.asarray(x, dtype=float) for x in (p_prev, p_curr, p_next))
    defect = norm(b - a) + norm(c - b) - norm(c - a)
    # the triangle inequality makes defect >= 0 up to rounding
    defect = max(defect, 0.0)
    return 0.0 - (C3 * defect + C4 * norm(a - 2.0 * b + c))


def flight_reward(progress_delta: float, deviation: float, p: RewardParams) -> float:
    return p.c_fwd * progress_delta - p.c_dev * deviation


@dataclass(frozen=True)
class Transition:
    """Everything the reward needs to know about one environment step.

    ``positions`` holds the recent positions ending with the new one, at most
    three of them (oldest first).  ``v_d`` is the unit vector to the goal from
    the position where the action was taken.
    """

    d_obs: float
    v_d: tuple[float, float]
    vel: tuple[float, float]
    positions: tuple
    progress_delta: float
    deviation: float
    goal_distance: float


def total_reward(tr: Transition, status: str, p: RewardParams) -> RewardBreakdown:
    """Composite reward.

    ``status`` is one of ``running``, ``goal``, ``collision``, ``out_of_bounds``,
    ``timeout``.  Leaving the bounds is a crash into the container wall and
    earns the collision penalty.
    """
    margin = margin_reward(tr.d_obs, p)
    if p.towards_mode == "unit_vector":
        towards = towards_reward(tr.v_d, tr.vel)
    else:
        towards = distance_reward(tr.goal_distance, p)
    smooth = 0.0
    if p.smooth_enabled and len(tr.positions) >= 3:
        smooth = smooth_reward(*tr.positions[-3:], p.C3, p.C4)
    if status == "goal":
        last = p.R_g
    elif status in ("collision", "out_of_bounds"):
        last = p.R_c
    else:
        last = flight_reward(tr.progress_delta, tr.deviation, p)
    return RewardBreakdown(margin=margin, towards=towards, smooth=smooth, terminal_or_flight=last)


# ------------------------------------------------------------------ snake energy

def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("snake energy needs at least 2 points of shape (n, 2)")
    return pts


def snake_energy(points, sp: SnakeEnergyParams = SnakeEnergyParams()) -> float:
    """``alpha * sum |dp|^2 + beta * sum |d2p|^2`` over a polyline."""
    pts = _as_points(points)
    d1 = np.diff(pts, axis=0)
    d2 = pts[:-2] - 2.0 * pts[1:-1] + pts[2:]
    return float(sp.alpha * (d1 * d1).sum() + sp.beta * (d2 * d2).sum())


def snake_energy_grad(points, sp: SnakeEnergyParams = SnakeEnergyParams()) -> np.ndarray:
    pts = _as_points(points)
    g = np.zeros_like(pts)
    d1 = np.diff(pts, axis=0)
    g[1:] += 2.0 * sp.alpha * d1
    g[:-1] -= 2.0 * sp.alpha * d1
    d2 = pts[:-2] - 2.0 * pts[1:-1] + pts[2:]
    g[:-2] += 2.0 * sp.beta * d2
    g[1:-1] -= 4.0 * sp.beta * d2
    g[2:] += 2.0 * sp.beta * d2
    return g


def snake_smooth(points, sp: SnakeEnergyParams = SnakeEnergyParams(), step_size: float = 0.02,
                 iterations: int = 2000, return_history: bool = False):
    """Gradient descent on :func:`snake_energy` with both endpoints pinned.

    The iteration is stable for ``step_size < 2 / (8 alpha + 32 beta)``.  Returns
    the smoothed points, plus the per-iteration energies (starting with the input
    energy) when ``return_history`` is set.
    """
    pts = _as_points(points).copy()
    if len(pts) < 3:
        raise ValueError("snake smoothing needs at least 3 points")
    history = [snake_energy(pts, sp)]
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(iterations):
            g = snake_energy_grad(pts, sp)
            pts[1:-1] -= step_size * g[1:-1]
            history.append(snake_energy(pts, sp))
            if not (np.all(np.isfinite(pts)) and math.isfinite(history[-1])):
                raise FloatingPointError("descent diverged; reduce step_size")
    return (pts, history) if return_history else pts
