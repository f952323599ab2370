"""Run configuration: one JSON document with ``scene``, ``sim``, ``rewards``,
``train`` and ``out`` keys, plus dotted-path overrides such as
``rewards.C3=1.0``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .ddpg import TrainConfig
from .rewards import RewardParams
from .sim import SimParams

SECTIONS = {"sim": SimParams, "rewards": RewardParams, "train": TrainConfig}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    scene: str = "train"
    sim: SimParams = field(default_factory=SimParams)
    rewards: RewardParams = field(default_factory=RewardParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    out: str = "runs/default"

    def to_dict(self) -> dict:
        return {"scene": self.scene, "sim": asdict(self.sim), "rewards": asdict(self.rewards),
                "train": asdict(self.train), "out": self.out}


def _section(cls, values: dict, name: str):
    if not isinstance(values, dict):
        raise ConfigError(f"{name}: expected an object")
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"{name}: unknown keys {sorted(unknown)}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


def from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - {"scene", "sim", "rewards", "train", "out"}
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    kw = {k: _section(cls, doc.get(k, {}), k) for k, cls in SECTIONS.items()}
    return RunConfig(scene=str(doc.get("scene", "train")), out=str(doc.get("out", "runs/default")),
                     **kw)


def load(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return from_dict(doc)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(cfg: RunConfig, assignment: str) -> RunConfig:
    """Apply one ``section.key=value`` (or ``scene=...`` / ``out=...``) override."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    key, text = assignment.split("=", 1)
    value = _parse_value(text)
    if key in ("scene", "out"):
        return replace(cfg, **{key: str(value)})
    section, _, name = key.partition(".")
    if section not in SECTIONS or not name:
        raise ConfigError(f"override key {key!r} must be scene, out or <sim|rewards|train>.<field>")
    doc = cfg.to_dict()
    if name not in doc[section]:
        raise ConfigError(f"unknown field {key!r}")
    doc[section][name] = value
    return from_dict(doc)
