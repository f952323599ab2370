"""Smooth-trajectory collision avoidance with DDPG in a deterministic 2D simulator."""

from .ddpg import Policy, TrainConfig, evaluate, load_policy, save_policy, train
from .metrics import MetricsReport, Trajectory
from .rewards import RewardParams
from .scene import Scene, builtin
from .sim import SimParams, reset

__version__ = "0.1.0"

__all__ = [
    "MetricsReport", "Policy", "RewardParams", "Scene", "SimParams", "TrainConfig",
    "Trajectory", "builtin", "evaluate", "load_policy", "reset", "save_policy", "train",
]
