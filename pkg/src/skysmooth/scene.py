"""Scenes: bounds, start/goal, obstacles and the straight start-to-goal route.

Four benchmark scenes are built in (``train``, ``ts1``, ``ts2``, ``ts3``) plus an
obstacle-free ``empty`` scene used for learning sanity checks.  Scenes round-trip
through a small JSON schema.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import Bounds, Box, Disc, RegularPolygon, Shape, norm, signed_distance

SCHEMA_VERSION = 1

HEX_CIRCUMRADIUS = 2.55 / 2
HEX_LATERAL_OFFSET = 1.0
ENDPOINT_INSET = 1.0
SCENE_WIDTH = 15.0
MIN_CLEARANCE = 1.0


class SceneError(ValueError):
    """Raised for malformed scene files or scenes that violate invariants."""


@dataclass(frozen=True)
class Scene:
    name: str
    bounds: Bounds
    start: tuple[float, float]
    goal: tuple[float, float]
    obstacles: tuple[Shape, ...] = field(default_factory=tuple)

    @property
    def route_vector(self) -> np.ndarray:
        return np.subtract(self.goal, self.start).astype(float)

    @property
    def route_length(self) -> float:
        return norm(self.route_vector)

    @property
    def route_direction(self) -> np.ndarray:
        return self.route_vector / self.route_length


@dataclass(frozen=True)
class RouteFrame:
    s: float
    deviation: float


def project_onto_route(scene: Scene, p) -> RouteFrame:
    """Arc position along the route (clamped) and distance to the route segment."""
    start = np.asarray(scene.start, dtype=float)
    length = scene.route_length
    w = np.asarray(p, dtype=float) - start
    s = min(max(float(w @ scene.route_direction), 0.0), length)
    foot = start + s * scene.route_direction
    return RouteFrame(s=s, deviation=norm(np.asarray(p, dtype=float) - foot))


def validate(scene: Scene) -> list[str]:
    """Every invariant violation of ``scene``; an empty list means the scene is valid."""
    problems = []
    for label, pt in (("start", scene.start), ("goal", scene.goal)):
        if not scene.bounds.contains(pt):
            problems.append(f"{label} outside bounds")
        for i, shape in enumerate(scene.obstacles):
            d = signed_distance(pt, shape)
            if d < 0:
                problems.append(f"{label} inside obstacle {i}")
            elif d < MIN_CLEARANCE:
                problems.append(f"{label} within {MIN_CLEARANCE} m of obstacle {i}")
    if tuple(scene.start) == tuple(scene.goal):
        problems.append("start equals goal")
    return problems


def _hexagon_row(length: float, count: int) -> list[Shape]:
    mid = SCENE_WIDTH / 2
    span = length - 2 * ENDPOINT_INSET
    row = []
    for k in range(1, count + 1):
        x = ENDPOINT_INSET + span * k / (count + 1)
        y = mid + (HEX_LATERAL_OFFSET if k % 2 else -HEX_LATERAL_OFFSET)
        row.append(RegularPolygon(center=(x, y), circumradius=HEX_CIRCUMRADIUS, sides=6))
    return row


def _corridor(name: str, length: float, obstacles: list[Shape]) -> Scene:
    mid = SCENE_WIDTH / 2
    return Scene(
        name=name,
        bounds=Bounds(0.0, 0.0, length, SCENE_WIDTH),
        start=(ENDPOINT_INSET, mid),
        goal=(length - ENDPOINT_INSET, mid),
        obstacles=tuple(obstacles),
    )


def _ts3() -> Scene:
    mid = SCENE_WIDTH / 2
    gap, door_half = 2.0, (0.4, 2.5)
    return _corridor("ts3", 20.0, [
        Box(center=(6.0, mid + 0.6), half_extents=(1.0, 1.0), rotation=math.pi / 12),
        Disc(center=(10.5, mid - 0.7), radius=1.2),
        Box(center=(15.0, mid + gap / 2 + door_half[1]), half_extents=door_half),
        Box(center=(15.0, mid - gap / 2 - door_half[1]), half_extents=door_half),
    ])


_BUILTINS = {
    "train": lambda: _corridor("train", 20.0, _hexagon_row(20.0, 4)),
    "ts1": lambda: _corridor("ts1", 20.0, _hexagon_row(20.0, 6)),
    "ts2": lambda: _corridor("ts2", 45.0, _hexagon_row(45.0, 8)),
    "ts3": _ts3,
    "empty": lambda: _corridor("empty", 20.0, []),
}

BUILTIN_NAMES = tuple(_BUILTINS)


def builtin(name: str) -> Scene:
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise SceneError(f"unknown scene {name!r}; valid names: {', '.join(BUILTIN_NAMES)}") from None


# --------------------------------------------------------------------------- I/O

def _shape_to_dict(s: Shape) -> dict:
    if isinstance(s, Disc):
        return {"kind": "disc", "center": list(s.center), "radius": s.radius}
    if isinstance(s, RegularPolygon):
        return {"kind": "regular_polygon", "center": list(s.center),
                "circumradius": s.circumradius, "sides": s.sides, "rotation": s.rotation}
    return {"kind": "box", "center": list(s.center),
            "half_extents": list(s.half_extents), "rotation": s.rotation}


def scene_to_dict(scene: Scene) -> dict:
    b = scene.bounds
    return {
        "schema_version": SCHEMA_VERSION,
        "name": scene.name,
        "bounds": {"min": [b.xmin, b.ymin], "max": [b.xmax, b.ymax]},
        "start": list(scene.start),
        "goal": list(scene.goal),
        "obstacles": [_shape_to_dict(s) for s in scene.obstacles],
    }


def _num(d: dict, key: str, where: str) -> float:
    if key not in d:
        raise SceneError(f"{where}.{key}: missing field")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise SceneError(f"{where}.{key}: expected a finite number, got {v!r}")
    return float(v)


def _pair(d: dict, key: str, where: str) -> tuple[float, float]:
    v = d.get(key)
    if (not isinstance(v, list) or len(v) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
        raise SceneError(f"{where}.{key}: expected [x, y], got {v!r}")
    return float(v[0]), float(v[1])


def _shape_from_dict(d, where: str) -> Shape:
    if not isinstance(d, dict):
        raise SceneError(f"{where}: expected an object")
    kind = d.get("kind")
    try:
        if kind == "disc":
            return Disc(center=_pair(d, "center", where), radius=_num(d, "radius", where))
        if kind == "regular_polygon":
            sides = d.get("sides")
            if isinstance(sides, bool) or not isinstance(sides, int):
                raise SceneError(f"{where}.sides: expected an integer, got {sides!r}")
            return RegularPolygon(center=_pair(d, "center", where),
                                  circumradius=_num(d, "circumradius", where),
                                  sides=sides, rotation=float(d.get("rotation", 0.0)))
        if kind == "box":
            return Box(center=_pair(d, "center", where),
                       half_extents=_pair(d, "half_extents", where),
                       rotation=float(d.get("rotation", 0.0)))
    except SceneError:
        raise
    except ValueError as exc:
        raise SceneError(f"{where}: {exc}") from None
    raise SceneError(f"{where}.kind: expected disc|regular_polygon|box, got {kind!r}")


def scene_from_dict(doc) -> Scene:
    if not isinstance(doc, dict):
        raise SceneError("scene document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SceneError(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    name = doc.get("name")
    if not isinstance(name, str):
        raise SceneError(f"name: expected a string, got {name!r}")
    b = doc.get("bounds")
    if not isinstance(b, dict):
        raise SceneError("bounds: expected {min: [x, y], max: [x, y]}")
    lo, hi = _pair(b, "min", "bounds"), _pair(b, "max", "bounds")
    try:
        bounds = Bounds(lo[0], lo[1], hi[0], hi[1])
    except ValueError as exc:
        raise SceneError(f"bounds: {exc}") from None
    obs = doc.get("obstacles", [])
    if not isinstance(obs, list):
        raise SceneError("obstacles: expected a list")
    scene = Scene(
        name=name,
        bounds=bounds,
        start=_pair(doc, "start", "scene"),
        goal=_pair(doc, "goal", "scene"),
        obstacles=tuple(_shape_from_dict(o, f"obstacles[{i}]") for i, o in enumerate(obs)),
    )
    problems = validate(scene)
    if problems:
        raise SceneError("invalid scene: " + "; ".join(problems))
    return scene


def save(scene: Scene, path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=2) + "\n")


def load(path) -> Scene:
    path = Path(path)
    if not path.exists():
        raise SceneError(f"scene file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SceneError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return scene_from_dict(doc)


def resolve(ref: str) -> Scene:
    """A builtin name or a path to a scene file."""
    if ref in _BUILTINS:
        return builtin(ref)
    if Path(ref).suffix or Path(ref).exists():
        return load(ref)
    return builtin(ref)
