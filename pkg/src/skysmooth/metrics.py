"""Trajectory quality metrics and the trajectory CSV format.

A trajectory CSV holds one row per simulator step (row 0 is the state right
after reset).  Acceleration and curvature are averaged over the successful
flights of a set, so a set with no successful flight reports ``nan`` for both.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

LOG_HEADER = ["step", "t", "x", "y", "vx", "vy", "d_obs", "deviation", "r_margin",
              "r_towards", "r_smooth", "r_flight", "r_total", "status"]
OUTCOMES = ("goal", "collision", "out_of_bounds", "timeout")
META_FILE = "meta.json"


@dataclass
class Trajectory:
    points: np.ndarray   # (n, 2)
    vels: np.ndarray     # (n, 2)
    dt: float
    outcome: str

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.vels = np.asarray(self.vels, dtype=float).reshape(-1, 2)
        if len(self.points) != len(self.vels) or len(self.points) < 1:
            raise ValueError("points and vels must have equal length >= 1")

    @property
    def arc_length(self) -> float:
        d = np.diff(self.points, axis=0)
        return float(np.hypot(d[:, 0], d[:, 1]).sum())


@dataclass
class MetricsReport:
    avg_acc: float
    avg_cur: float
    sr: float
    cac: float
    n_episodes: int
    n_acc: int
    n_cur: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def write(self, directory, stem: str = "report") -> None:
        directory = Path(directory)
        (directory / f"{stem}.json").write_text(self.to_json() + "\n")
        with open(directory / f"{stem}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            row = asdict(self)
            w.writerow(list(row))
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row.values()])


def avg_acceleration(traj: Trajectory) -> float:
    """Mean of ``|v[t+1] - v[t]| / dt``."""
    if len(traj.vels) < 2:
        raise ValueError("average acceleration needs at least 2 velocity samples")
    dv = np.diff(traj.vels, axis=0)
    return float(np.hypot(dv[:, 0], dv[:, 1]).mean() / traj.dt)


def menger_curvature(a, b, c) -> float:
    ab = math.dist(a, b)
    bc = math.dist(b, c)
    ca = math.dist(c, a)
    area2 = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    return 2.0 * area2 / (ab * bc * ca)


def avg_curvature(traj: Trajectory, min_side: float = 1e-6) -> float:
    """Mean Menger curvature over consecutive point triples.

    Triples with a side shorter than ``min_side`` are skipped; if every triple
    is skipped the result is 0.
    """
    pts = traj.points
    if len(pts) < 3:
        raise ValueError("average curvature needs at least 3 points")
    a, b, c = pts[:-2], pts[1:-1], pts[2:]
    ab = np.hypot(*(b - a).T)
    bc = np.hypot(*(c - b).T)
    ca = np.hypot(*(a - c).T)
    keep = (ab >= min_side) & (bc >= min_side) & (ca >= min_side)
    if not keep.any():
        return 0.0
    cross = (b - a)[:, 0] * (c - a)[:, 1] - (b - a)[:, 1] * (c - a)[:, 0]
    k = 2.0 * np.abs(cross[keep]) / (ab[keep] * bc[keep] * ca[keep])
    return float(k.mean())


def success_rate(outcomes: Sequence[str]) -> float:
    if len(outcomes) == 0:
        raise ValueError("success rate of an empty set")
    return 100.0 * sum(o == "goal" for o in outcomes) / len(outcomes)


def cac(trajectories: Sequence[Trajectory], route_length: float) -> float:
    """Mean flown length before the first collision, as a percent of the route length.

    Episodes end at their first collision, so the flown length is the whole arc
    length; each episode is capped at 100 %.
    """
    if len(trajectories) == 0:
        raise ValueError("CAC of an empty set")
    if not route_length > 0:
        raise ValueError("route_length must be positive")
    ratios = [min(1.0, t.arc_length / route_length) for t in trajectories]
    return 100.0 * float(np.mean(ratios))


def cac_meters(trajectories: Sequence[Trajectory]) -> float:
    if len(trajectories) == 0:
        raise ValueError("CAC of an empty set")
    return float(np.mean([t.arc_length for t in trajectories]))


def report(trajectories: Sequence[Trajectory], route_length: float) -> MetricsReport:
    ok = [t for t in trajectories if t.outcome == "goal"]
    accs = [avg_acceleration(t) for t in ok if len(t.vels) >= 2]
    curs = [avg_curvature(t) for t in ok if len(t.points) >= 3]
    return MetricsReport(
        avg_acc=float(np.mean(accs)) if accs else math.nan,
        avg_cur=float(np.mean(curs)) if curs else math.nan,
        sr=success_rate([t.outcome for t in trajectories]),
        cac=cac(trajectories, route_length),
        n_episodes=len(trajectories),
        n_acc=len(accs),
        n_cur=len(curs),
    )


# ----------------------------------------------------------------------- CSV I/O

def write_trajectory_csv(path, rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_HEADER)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def read_trajectory_csv(path) -> Trajectory:
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != LOG_HEADER:
                raise ValueError(f"unexpected header {header}")
            pts, vels, t = [], [], []
            status = None
            for n, row in enumerate(reader, start=2):
                if len(row) != len(LOG_HEADER):
                    raise ValueError(f"line {n}: expected {len(LOG_HEADER)} fields, got {len(row)}")
                t.append(float(row[1]))
                pts.append((float(row[2]), float(row[3])))
                vels.append((float(row[4]), float(row[5])))
                status = row[-1]
    except (OSError, ValueError, csv.Error) as exc:
        raise ValueError(f"cannot read trajectory {path}: {exc}") from None
    if not pts:
        raise ValueError(f"cannot read trajectory {path}: no rows")
    dt = t[1] - t[0] if len(t) > 1 else 0.0
    return Trajectory(points=pts, vels=vels, dt=dt, outcome=status)


def aggregate_report(directory, route_length: float | None = None) -> MetricsReport:
    """Metrics over every ``*.csv`` trajectory in ``directory``.

    ``route_length`` defaults to the value stored in the directory's
    ``meta.json`` (written by the evaluator).
    """
    directory = Path(directory)
    files = sorted(p for p in directory.glob("*.csv") if p.stem != "report")
    if not files:
        raise ValueError(f"no trajectory CSV files in {directory}")
    if route_length is None:
        meta = directory / META_FILE
        if not meta.exists():
            raise ValueError(f"route length unknown: pass it or provide {meta}")
        route_length = float(json.loads(meta.read_text())["route_length"])
    return report([read_trajectory_csv(f) for f in files], route_length)
