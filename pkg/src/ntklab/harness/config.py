"""Sweep configuration and its flat YAML file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from ntklab.network import ConfigurationError

KINDS = ("dispersion", "nondiag", "gd_step", "structure", "theory_only")
SCHEDULE_KINDS = ("constant", "ramp_up", "ramp_down")


@dataclass(frozen=True)
class SweepConfig:
    """One experiment: a grid of cells over ``sigma_w_sq`` x ``depths`` (x extra axes).

    Fields that an experiment kind does not use are ignored by it but still
    echoed into the output header.
    """

    kind: str
    sigma_w_sq: tuple[float, ...] = (1.0, 2.0, 3.0)
    depths: tuple[int, ...] = (10, 30, 50, 80)
    width: int = 100
    alpha0: float = 1.0
    samples: int = 500
    seed: int = 0
    cosines: tuple[float, ...] = (0.1, 0.5, 0.9)
    eta: float = 1e-3
    bootstrap: int = 1000
    # theory_only: width schedules built from (m1, m2); when m1/m2 are unset
    # the constant schedule uses ``width`` and ``alpha0``
    schedules: tuple[str, ...] = ("constant",)
    m1: int | None = None
    m2: int | None = None
    # structure experiment
    classes: int = 3
    points_per_class: int = 10
    input_dim: int = 20
    blob_std: float = 2.0
    max_epochs: int = 2000
    snapshot_every: int = 100
    target_loss: float = 0.05
    out: str | None = None

    def __post_init__(self):
        for name in ("sigma_w_sq", "depths", "cosines", "schedules"):
            val = getattr(self, name)
            if isinstance(val, (int, float, str)):
                val = (val,)
            object.__setattr__(self, name, tuple(val))
        object.__setattr__(self, "sigma_w_sq", tuple(float(s) for s in self.sigma_w_sq))
        object.__setattr__(self, "depths", tuple(int(d) for d in self.depths))
        object.__setattr__(self, "cosines", tuple(float(c) for c in self.cosines))
        self.validate()

    def validate(self) -> None:
        def bad(msg):
            raise ConfigurationError(msg)

        if self.kind not in KINDS:
            bad(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.sigma_w_sq or any(not s > 0 for s in self.sigma_w_sq):
            bad("sigma_w_sq must be a non-empty list of positive values")
        if not self.depths or any(d < 1 for d in self.depths):
            bad("depths must be a non-empty list of positive integers")
        if self.width < 1:
            bad("width must be >= 1")
        if not self.alpha0 > 0:
            bad("alpha0 must be positive")
        if self.samples < 3:
            bad("samples must be >= 3")
        if not 0 <= self.seed < 2**64:
            bad("seed must be an unsigned 64-bit integer")
        if any(not -1.0 <= c <= 1.0 for c in self.cosines):
            bad("cosines must lie in [-1, 1]")
        if self.kind == "nondiag" and not self.cosines:
            bad("nondiag sweeps need at least one cosine")
        if self.eta < 0:
            bad("eta must be non-negative")
        if self.bootstrap < 2:
            bad("bootstrap must be >= 2")
        if any(s not in SCHEDULE_KINDS for s in self.schedules):
            bad(f"schedules must be drawn from {SCHEDULE_KINDS}")
        if (self.m1 is None) != (self.m2 is None):
            bad("m1 and m2 must be given together")
        if self.m1 is not None and (self.m1 < 1 or self.m2 < 1):
            bad("m1 and m2 must be positive")
        if self.m1 is None and any(s != "constant" for s in self.schedules):
            bad("ramp schedules need m1 and m2")
        if self.kind == "structure":
            if self.classes < 2:
                bad("structure experiment needs at least two classes")
            if self.points_per_class < 2:
                bad("structure experiment needs at least two points per class")
            if self.eta <= 0:
                bad("structure experiment needs eta > 0")
            if self.snapshot_every < 1 or self.max_epochs < 0:
                bad("snapshot_every must be >= 1 and max_epochs >= 0")

    @property
    def n0(self) -> int:
        return max(1, round(self.alpha0 * self.width))

    def replace(self, **changes: Any) -> "SweepConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, Any]:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


FIELD_NAMES = tuple(f.name for f in dataclasses.fields(SweepConfig))


def config_from_mapping(data: dict[str, Any], kind: str | None = None) -> SweepConfig:
    """Build a config from a flat mapping; unknown keys are errors."""
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a flat key/value mapping")
    unknown = sorted(set(data) - set(FIELD_NAMES))
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
    for k, v in data.items():
        if isinstance(v, dict):
            raise ConfigurationError(f"config key {k!r} must be a scalar or a list, not a mapping")
    data = dict(data)
    if kind is not None:
        if "kind" in data and data["kind"] != kind:
            raise ConfigurationError(f"config kind {data['kind']!r} does not match subcommand {kind!r}")
        data["kind"] = kind
    if "kind" not in data:
        raise ConfigurationError("config must set 'kind'")
    return SweepConfig(**data)


def load_config(path: str | Path, kind: str | None = None) -> SweepConfig:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    return config_from_mapping(data or {}, kind)
