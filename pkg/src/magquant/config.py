"""Experiment configuration: a single JSON document, validated before any computation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

__all__ = ["ConfigError", "ExperimentConfig"]


class ConfigError(ValueError):
    """Raised for unparseable or invalid configuration documents."""


_DEFAULT_TOLERANCES = {
    "fields_verify": 1e-6,
    "bargmann": 1e-6,
}


@dataclass
class ExperimentConfig:
    dim: int = 1
    field: str = "zero"
    gauge: str = "zero"
    fiducial: str = "gaussian"
    box_half_width: float = 8.0
    points_per_axis: int = 64
    hbar_list: list[float] = field(default_factory=lambda: [0.25])
    symbol: str = "gaussian:0,1"
    symbol2: str = "gaussian:0.5,0.8"
    seed: int = 0
    out_dir: str = "."
    format: str = "json"
    threads: int = 1
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigError("dim must be 1 or 2")
        if self.points_per_axis < 4 or self.points_per_axis % 2:
            raise ConfigError("points_per_axis must be an even integer >= 4")
        if self.box_half_width <= 0:
            raise ConfigError("box_half_width must be positive")
        if not self.hbar_list:
            raise ConfigError("hbar_list must be nonempty")
        for h in self.hbar_list:
            if not (0.0 < float(h) <= 1.0):
                raise ConfigError("every hbar must lie in (0, 1]")
        if self.format not in ("json", "csv", "both"):
            raise ConfigError("format must be json, csv, or both")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not isinstance(self.tolerances, dict):
            raise ConfigError("tolerances must be an object")

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from e
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config document must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**raw)
        except TypeError as e:
            raise ConfigError(str(e)) from e

    def tolerance(self, key: str, default: float | None = None) -> float:
        if key in self.tolerances:
            return float(self.tolerances[key])
        if default is not None:
            return default
        return _DEFAULT_TOLERANCES[key]

    def resolved(self) -> dict:
        return asdict(self)
