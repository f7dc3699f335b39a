"""Plain-text run configuration with command-line overrides.

Files hold ``key = value`` lines ('#' comments allowed); unknown keys are
rejected. Every CLI artifact embeds the hash of the fully resolved
configuration, so a run is reproducible from its config alone.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

# external fusion-mode tokens -> internal mode names
FUSION_TOKENS = {"dot": "dot", "res": "residual", "hrg-only": "risk_only"}


@dataclass
class RunConfig:
    # paths
    data: str = "scene.traj"
    map: str = "scene.map"
    grammar: str = ""  # optional standalone grammar file; empty = use the map's
    checkpoint: str = "model.ckpt"
    forecast: str = "forecast.txt"
    out: str = "out"

    # horizons and sampling
    t_obs: int = 4
    t_pred: int = 6
    fps: float = 2.0
    h: int = 20
    trials: int = 5
    seed: int = 0

    # training
    epochs: int = 50
    lr: float = 0.001
    lr_decay: float = 0.2
    lr_decay_every: int = 5
    batch: int = 1024

    # model switches
    fusion: str = "dot"  # dot | res | hrg-only
    risk_metrics: str = "nrr,mpr,ttc,mdr,osr"
    bezier: bool = False
    roi: str = ""  # "xmin,ymin,xmax,ymax" or empty

    # clustering
    clusters_pedestrian: int = 6
    clusters_car: int = 3
    clusters_rider: int = 3

    # synthetic data generation
    sim_agents: str = "car:constant_velocity,car:constant_velocity,pedestrian:constant_velocity,pedestrian:crossing"
    sim_scenes: int = 20
    sim_noise: float = 0.05
    sim_extra_frames: int = 0

    # which window risk-matrix / plot commands render
    window: int = 0

    def __post_init__(self):
        if self.fusion not in FUSION_TOKENS:
            raise ConfigError(
                f"fusion must be one of {sorted(FUSION_TOKENS)}, got {self.fusion!r}"
            )
        if self.t_obs < 1 or self.t_pred < 1:
            raise ConfigError("t_obs and t_pred must be >= 1")
        if self.h < 1:
            raise ConfigError("h must be >= 1")

    @property
    def fusion_mode(self) -> str:
        return FUSION_TOKENS[self.fusion]

    def roi_rect(self):
        if not self.roi:
            return None
        parts = [p.strip() for p in self.roi.split(",")]
        if len(parts) != 4:
            raise ConfigError("roi must be 'xmin,ymin,xmax,ymax'")
        try:
            return tuple(float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"bad roi value {self.roi!r}") from None

    def cluster_counts(self):
        from .data.types import AgentCategory

        return {
            AgentCategory.PEDESTRIAN: self.clusters_pedestrian,
            AgentCategory.CAR: self.clusters_car,
            AgentCategory.RIDER: self.clusters_rider,
        }

    def to_text(self) -> str:
        lines = []
        for f in sorted(fields(self), key=lambda f: f.name):
            value = getattr(self, f.name)
            lines.append(f"{f.name} = {value!r}" if isinstance(value, float) else f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()[:12]


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_value(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    raw = raw.strip()
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"key {name!r}: bad boolean {raw!r}")
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"key {name!r}: bad {kind} value {raw!r}") from None
    return raw


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    values = {}
    for ln, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected 'key = value'")
        key, raw = (p.strip() for p in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{ln}: unknown config key {key!r}")
        values[key] = _parse_value(key, raw)
    return RunConfig(**values)


def apply_overrides(config: RunConfig, **overrides) -> RunConfig:
    values = {f.name: getattr(config, f.name) for f in fields(RunConfig)}
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in values:
            raise ConfigError(f"unknown override {key!r}")
        values[key] = value
    return RunConfig(**values)
