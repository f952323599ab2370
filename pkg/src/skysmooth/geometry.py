"""Planar geometry: obstacle shapes, signed distances and ray casting.

Points and directions are plain ``numpy`` arrays of shape ``(2,)``.  Shapes
are small frozen dataclasses; :class:`CompiledObstacles` flattens a list of
them into arrays so that a whole depth scan is a handful of vectorized ops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

HIT_EPS = 1e-9


def vec(x: float, y: float) -> np.ndarray:
    return np.array([float(x), float(y)])


def norm(v) -> float:
    return math.hypot(v[0], v[1])


def unit(v, eps: float = 1e-12) -> np.ndarray:
    """Return ``v / |v|``, or the zero vector when ``|v| <= eps``."""
    n = norm(v)
    if n <= eps:
        return np.zeros(2)
    return np.asarray(v, dtype=float) / n


def rotate(v, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


@dataclass(frozen=True)
class Bounds:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(f"degenerate bounds {self}")

    @property
    def size(self) -> tuple[float, float]:
        return self.xmax - self.xmin, self.ymax - self.ymin

    def contains(self, p) -> bool:
        return self.xmin <= p[0] <= self.xmax and self.ymin <= p[1] <= self.ymax


@dataclass(frozen=True)
class Disc:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"disc radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class RegularPolygon:
    center: tuple[float, float]
    circumradius: float
    sides: int
    rotation: float = 0.0

    def __post_init__(self):
        if not self.circumradius > 0:
            raise ValueError(f"circumradius must be positive, got {self.circumradius}")
        if self.sides < 3:
            raise ValueError(f"a polygon needs at least 3 sides, got {self.sides}")


@dataclass(frozen=True)
class Box:
    center: tuple[float, float]
    half_extents: tuple[float, float]
    rotation: float = 0.0

    def __post_init__(self):
        if not (self.half_extents[0] > 0 and self.half_extents[1] > 0):
            raise ValueError(f"box half extents must be positive, got {self.half_extents}")


Shape = Union[Disc, RegularPolygon, Box]


def polygon_vertices(shape: RegularPolygon | Box) -> np.ndarray:
    """Counter-clockwise vertices, shape ``(n, 2)``."""
    cx, cy = shape.center
    if isinstance(shape, RegularPolygon):
        ang = shape.rotation + 2.0 * np.pi * np.arange(shape.sides) / shape.sides
        return np.column_stack([cx + shape.circumradius * np.cos(ang),
                                cy + shape.circumradius * np.sin(ang)])
    hx, hy = shape.half_extents
    local = np.array([[hx, hy], [-hx, hy], [-hx, -hy], [hx, -hy]])
    c, s = math.cos(shape.rotation), math.sin(shape.rotation)
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([cx, cy])


def _polygon_sdf(p: np.ndarray, verts: np.ndarray) -> float:
    a = verts
    b = np.roll(verts, -1, axis=0)
    e = b - a
    w = p - a
    # outward normal of a CCW edge is (ey, -ex)
    elen = np.hypot(e[:, 0], e[:, 1])
    plane = (w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0]) / elen
    inside = plane.max()
    if inside <= 0.0:
        return float(inside)
    t = np.clip((w * e).sum(axis=1) / (elen * elen), 0.0, 1.0)
    d = w - e * t[:, None]
    return float(np.hypot(d[:, 0], d[:, 1]).min())


def signed_distance(p, shape: Shape) -> float:
    """Signed distance from ``p`` to ``shape``: negative inside, zero on the boundary."""
    p = np.asarray(p, dtype=float)
    if isinstance(shape, Disc):
        return math.hypot(p[0] - shape.center[0], p[1] - shape.center[1]) - shape.radius
    return _polygon_sdf(p, polygon_vertices(shape))


def min_obstacle_distance(p, obstacles: Sequence[Shape]) -> tuple[float, int]:
    """Smallest signed distance to any obstacle and the (lowest) index attaining it."""
    if len(obstacles) == 0:
        raise ValueError("no obstacles")
    best, idx = math.inf, -1
    for i, shape in enumerate(obstacles):
        d = signed_distance(p, shape)
        if d < best:
            best, idx = d, i
    return best, idx


def _check_unit(d: np.ndarray) -> None:
    n = np.hypot(d[..., 0], d[..., 1])
    if np.any(np.abs(n - 1.0) > 1e-6):
        raise ValueError("ray direction must be a unit vector")


class CompiledObstacles:
    """Array form of an obstacle list for fast batched queries.

    Discs are kept as centres/radii; every polygon contributes its edges to one
    segment table.  Results agree with :func:`signed_distance` and
    :func:`ray_cast` on the original shapes.
    """

    def __init__(self, obstacles: Sequence[Shape]):
        self.obstacles = tuple(obstacles)
        discs = [s for s in obstacles if isinstance(s, Disc)]
        self.disc_c = np.array([d.center for d in discs], dtype=float).reshape(-1, 2)
        self.disc_r = np.array([d.radius for d in discs], dtype=float)
        self.polys = [polygon_vertices(s) for s in obstacles if not isinstance(s, Disc)]
        if self.polys:
            a = np.concatenate(self.polys)
            b = np.concatenate([np.roll(v, -1, axis=0) for v in self.polys])
        else:
            a = b = np.zeros((0, 2))
        self.seg_a = a
        self.seg_e = b - a

    def __len__(self) -> int:
        return len(self.obstacles)

    def min_distance(self, p) -> float:
        """Signed distance to the nearest obstacle, ``+inf`` for an empty scene."""
        best = math.inf
        if len(self.disc_r):
            dd = np.hypot(*(np.asarray(p) - self.disc_c).T) - self.disc_r
            best = float(dd.min())
        p = np.asarray(p, dtype=float)
        for verts in self.polys:
            best = min(best, _polygon_sdf(p, verts))
        return best

    def cast(self, origin, dirs: np.ndarray, bounds: Bounds, max_range: float) -> np.ndarray:
        """Distances along each row of ``dirs`` (shape ``(n, 2)``) to the first hit."""
        o = np.asarray(origin, dtype=float)
        dx, dy = dirs[:, 0], dirs[:, 1]
        t = np.full(len(dirs), math.inf)

        # bounds walls: exit distance from the inside of the box
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            tx = np.where(dx > 0, (bounds.xmax - o[0]) / dx,
                          np.where(dx < 0, (bounds.xmin - o[0]) / dx, math.inf))
            ty = np.where(dy > 0, (bounds.ymax - o[1]) / dy,
                          np.where(dy < 0, (bounds.ymin - o[1]) / dy, math.inf))
        for tw in (tx, ty):
            t = np.where(tw > HIT_EPS, np.minimum(t, tw), t)

        if len(self.disc_r):
            oc = self.disc_c - o                      # (D, 2)
            b = dirs @ oc.T                           # (n, D)
            cc = (oc * oc).sum(axis=1) - self.disc_r ** 2
            disc = b * b - cc
            ok = disc >= 0
            sq = np.sqrt(np.where(ok, disc, 0.0))
            t1 = b - sq
            t2 = b + sq
            th = np.where(t1 > HIT_EPS, t1, np.where(t2 > HIT_EPS, t2, math.inf))
            th = np.where(ok, th, math.inf)
            t = np.minimum(t, th.min(axis=1))

        if len(self.seg_a):
            w = self.seg_a - o                        # (S, 2)
            e = self.seg_e
            den = dx[:, None] * e[None, :, 1] - dy[:, None] * e[None, :, 0]
            wx_e = w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0]
            w_d = w[None, :, 0] * dy[:, None] - w[None, :, 1] * dx[:, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                ts = wx_e[None, :] / den
                us = w_d / den
            hit = (np.abs(den) > 1e-15) & (ts > HIT_EPS) & (us >= 0.0) & (us <= 1.0)
            ts = np.where(hit, ts, math.inf)
            t = np.minimum(t, ts.min(axis=1))

        return np.minimum(t, max_range)


def ray_cast(origin, direction, obstacles: Sequence[Shape], bounds: Bounds,
             max_range: float) -> float:
    """Distance from ``origin`` along unit ``direction`` to the first obstacle or wall.

    Hits at ``t <= 1e-9`` are ignored; the result is clamped to ``max_range``.
    """
    d = np.asarray(direction, dtype=float).reshape(1, 2)
    _check_unit(d)
    return float(CompiledObstacles(obstacles).cast(origin, d, bounds, max_range)[0])
