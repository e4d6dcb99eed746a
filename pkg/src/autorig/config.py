"""Pipeline configuration: defaults, key=value files, and range checks."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import ConfigError

METHODS = ("pathtree", "embed")
PATH_COSTS = ("weighted", "paper")


@dataclass
class PipelineConfig:
    method: str = "pathtree"
    resolution: int = 64
    dms_min_dist: float = 2.0
    extreme_threshold: float = 4.0
    max_segments: int = 4
    smoothing_iterations: int = 10
    min_radius: float | None = None   # None -> 2 * cell_size at run time
    beam: int = 512                   # 0 -> exhaustive search
    gamma: str | None = None          # path to a weight-vector JSON
    template: str = "biped7"          # builtin name or JSON path
    max_influences: int = 4
    out_dir: str = "."
    seed: int = 0
    pathcost: str = "weighted"
    dump_debug: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.pathcost not in PATH_COSTS:
            raise ConfigError(f"pathcost must be one of {PATH_COSTS}, got {self.pathcost!r}")
        if self.resolution < 8:
            raise ConfigError(f"resolution must be >= 8, got {self.resolution}")
        if self.dms_min_dist < 1:
            raise ConfigError(f"dms_min_dist must be >= 1, got {self.dms_min_dist}")
        if self.extreme_threshold < 1:
            raise ConfigError(f"extreme_threshold must be >= 1, got {self.extreme_threshold}")
        if self.max_segments < 1:
            raise ConfigError(f"max_segments must be >= 1, got {self.max_segments}")
        if self.smoothing_iterations < 0:
            raise ConfigError("smoothing_iterations must be >= 0")
        if self.min_radius is not None and not self.min_radius > 0:
            raise ConfigError("min_radius must be positive")
        if self.beam < 0:
            raise ConfigError("beam must be >= 0 (0 = exhaustive)")
        if self.max_influences < 1:
            raise ConfigError("max_influences must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")


_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}


def _coerce(name, raw):
    f = _FIELDS[name]
    raw = raw.strip()
    if raw.lower() in ("none", "null", ""):
        return None
    if f.type in ("bool", bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    try:
        if f.type in ("int", int):
            return int(raw)
        if f.type in ("float", "float | None", float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from None
    return raw


def load_config_file(path) -> dict:
    """Parse `key = value` lines; '#' starts a comment. Unknown keys raise."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in _FIELDS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, val)
    return values


def make_config(file_path=None, overrides=None, **base) -> PipelineConfig:
    """Defaults, then config file values, then explicit overrides (flags win)."""
    values = dict(base)
    if file_path is not None:
        values.update(load_config_file(file_path))
    for key, val in (overrides or {}).items():
        if val is not None:
            if key not in _FIELDS:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = val
    return PipelineConfig(**values)
