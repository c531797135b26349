"""Random unit inputs, correlated input pairs and width schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

ScheduleKind = Literal["constant", "ramp_up", "ramp_down"]


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gen_unit_input(n0: int, seed) -> np.ndarray:
    """Isotropic random direction in ``R^n0``."""
    if n0 < 1:
        raise ValueError(f"n0 must be >= 1, got {n0}")
    rng = _rng(seed)
    while True:
        v = rng.standard_normal(n0)
        norm = np.linalg.norm(v)
        if norm > 0.0:
            return v / norm


def gen_pair_with_cosine(n0: int, rho: float, seed) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors ``x, x~`` with ``<x, x~> = rho``.

    ``x~ = rho x + sqrt(1 - rho^2) u`` where ``u`` is a random unit vector
    orthogonal to ``x``.
    """
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [-1, 1], got {rho}")
    if n0 == 1 and abs(rho) < 1.0:
        raise ValueError("an input pair with |rho| < 1 needs n0 >= 2")
    rng = _rng(seed)
    x = gen_unit_input(n0, rng)
    if rho == 1.0:
        return x, x.copy()
    if rho == -1.0:
        return x, -x
    while True:
        v = rng.standard_normal(n0)
        v -= (v @ x) * x
        v -= (v @ x) * x  # second pass removes the round-off left by the first
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            u = v / norm
            break
    xt = rho * x + math.sqrt(1.0 - rho * rho) * u
    xt /= np.linalg.norm(xt)
    return x, xt


@dataclass(frozen=True)
class WidthSchedule:
    kind: ScheduleKind
    m1: int
    m2: int
    depth: int

    def __post_init__(self):
        if self.kind not in ("constant", "ramp_up", "ramp_down"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.m1 < 1 or self.m2 < 1 or self.depth < 1:
            raise ValueError("m1, m2 and depth must be positive")

    @property
    def lam(self) -> float:
        return 2.0 * self.depth / (self.m1 + self.m2)


def width_schedule(ws: WidthSchedule) -> list[int]:
    """Widths ``n_0 .. n_{L-1}`` for a constant, widening or narrowing architecture."""
    L, m1, m2 = ws.depth, ws.m1, ws.m2
    if ws.kind == "constant":
        return [-(-(m1 + m2) // 2)] * L
    if ws.kind == "ramp_up":
        return [m1 + -(-(l * (m2 - m1)) // L) for l in range(L)]
    return [m2 + -(-(l * (m1 - m2)) // L) for l in range(L)]
