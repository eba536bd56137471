"""Experiment configuration: ``key = value`` text files plus CLI overrides."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .fields import FormField, Grid, read_hxf

MANUFACTURED_AMPLITUDE = 0.05


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    grid: tuple[int, ...] = (8, 8, 8, 8, 1, 1)
    active: str = "111100"
    F: str = "zero"
    seed: int = 0
    out: str = "out"
    workers: int = 1
    max_newton: int = 20
    newton_tol: float = 1e-10
    krylov_tol: float = 1e-12
    damping: str = "line-search-halving"
    continuation_steps: int = 1
    dealias: bool = True
    with_ricci: bool = True

    def __post_init__(self):
        if len(self.grid) != 6:
            raise ConfigError(f"grid needs 6 sizes, got {self.grid}")
        if len(self.active) != 6 or set(self.active) - {"0", "1"}:
            raise ConfigError(f"active mask must be 6 characters of 0/1, got {self.active!r}")
        for n, a in zip(self.grid, self.active):
            if a == "1" and n < 2:
                raise ConfigError("active axes need at least 2 points")

    def make_grid(self) -> Grid:
        return Grid(tuple(n if a == "1" else 1 for n, a in zip(self.grid, self.active)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = list(self.grid)
        return d

    def hash(self) -> str:
        """Digest of the settings that can change results (not ``out`` or ``workers``)."""
        d = {k: v for k, v in self.to_dict().items() if k not in ("out", "workers")}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **{k: _coerce(k, v) for k, v in kw.items()})


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, value):
    if key not in _TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    if not isinstance(value, str):
        if key == "grid":
            return tuple(int(v) for v in value)
        return value
    value = value.strip()
    t = _TYPES[key]
    try:
        if key == "grid":
            return tuple(int(v) for v in value.replace(",", " ").split())
        if key == "active":
            return parse_active(value)
        if t == "int":
            return int(value)
        if t == "float":
            return float(value)
        if t == "bool":
            if value.lower() in ("1", "true", "yes", "on"):
                return True
            if value.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return value


def parse_active(value: str) -> str:
    """Accept ``111100`` or a 1-based axis list like ``1,2,3,4``."""
    value = value.strip()
    if len(value) == 6 and set(value) <= {"0", "1"}:
        return value
    axes = {int(v) for v in value.replace(",", " ").split()}
    if not axes <= set(range(1, 7)):
        raise ConfigError(f"axes must be in 1..6: {value!r}")
    return "".join("1" if a in axes else "0" for a in range(1, 7))


def load_config(path) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    kw = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        kw[k] = _coerce(k, v)
    return ExperimentConfig(**kw)


def manufactured_phi(grid: Grid) -> FormField:
    """φ* = a(cos x₁ + cos x₂ + cos(x₁ − x₃)), restricted to the active axes."""
    a = MANUFACTURED_AMPLITUDE
    x = grid.coords()
    act = grid.active_mask
    x1 = x[0] if act[0] else 0.0
    x2 = x[1] if act[1] else 0.0
    x3 = x[2] if act[2] else 0.0
    return FormField.scalar(grid, a * (np.cos(x1) + np.cos(x2) + np.cos(x1 - x3)))


def raw_F(spec: str, grid: Grid, frame=None, Omega=None) -> tuple[FormField, FormField | None]:
    """Unnormalized F for a preset, plus the exact φ* for the manufactured preset."""
    if spec == "zero":
        return FormField.zeros(grid), None
    if spec.startswith("mode:"):
        try:
            _, axis, eps = spec.split(":")
            axis, eps = int(axis), float(eps)
        except ValueError as exc:
            raise ConfigError(f"bad mode preset {spec!r}; expected mode:<axis>:<eps>") from exc
        if not 1 <= axis <= 6 or not grid.active_mask[axis - 1]:
            raise ConfigError(f"mode axis {axis} is not active")
        return FormField.scalar(grid, eps * np.cos(grid.coords()[axis - 1])), None
    if spec == "manufactured":
        from .equation import forward_F

        phi = manufactured_phi(grid)
        return forward_F(phi, frame, Omega), phi
    if spec.startswith("file:"):
        f = read_hxf(spec[5:])
        if f.degree != 0 or f.grid.sizes != grid.sizes:
            raise ConfigError("F file must be a degree-0 field on the configured grid")
        return f, None
    raise ConfigError(f"unknown F preset {spec!r}")
