"""Reproducible discretized Brownian environments.

An environment is a family of independent two-sided standard Brownian motions,
one per integer line, sampled on a uniform grid of unscaled horizontal
coordinates.  Lines are generated from a counter-based keyed generator
(Philox), seeded per (master_seed, line, block), so any line or sub-range can
be regenerated independently, in any order, bit-identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, CoverageError, PreconditionError

# Increments per keyed generator block.  Sub-ranges of a line regenerate only
# the blocks they touch.
BLOCK_INCREMENTS = 1 << 18


def derive_seed(master_seed: int, *key: int) -> np.random.SeedSequence:
    """Deterministic child seed for (master_seed, key...)."""
    return np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))


@dataclass(frozen=True)
class GridSpec:
    """Uniform unscaled grid: point(j) = origin + j*step for j in [0, count)."""

    origin: float
    step: float
    count: int

    def __post_init__(self) -> None:
        if not (self.step > 0.0) or not math.isfinite(self.step):
            raise ConfigurationError(f"grid step must be positive, got {self.step}")
        if int(self.count) < 2:
            raise ConfigurationError(f"grid needs at least 2 points, got {self.count}")

    def point(self, j: int) -> float:
        # Direct form, never repeated addition: no cumulative drift.
        return self.origin + j * self.step

    def points(self) -> np.ndarray:
        return self.origin + self.step * np.arange(self.count)

    @property
    def last(self) -> float:
        return self.point(self.count - 1)

    def nearest_index(self, u: float) -> int:
        """Index of the nearest grid point; CoverageError if u is outside the grid."""
        j = int(round((u - self.origin) / self.step))
        if j < 0 or j >= self.count or abs(u - self.point(j)) > 0.5 * self.step * (1 + 1e-9):
            raise CoverageError(
                f"coordinate {u} outside grid [{self.origin}, {self.last}] (step {self.step})"
            )
        return j

    def snap(self, u: float) -> tuple[int, float, float]:
        """(index, snapped coordinate, snap error) for the nearest grid point."""
        j = self.nearest_index(u)
        p = self.point(j)
        return j, p, u - p

    def exact_index(self, u: float, tol: float = 1e-9) -> int:
        """Index of u, required to lie on the grid up to tol."""
        j = int(round((u - self.origin) / self.step))
        if j < 0 or j >= self.count:
            raise PreconditionError(f"coordinate {u} outside grid")
        if abs(u - self.point(j)) > tol * max(1.0, abs(u)):
            raise PreconditionError(f"coordinate {u} is not a grid point (step {self.step})")
        return j


def _generate_line(master_seed: int, k: int, count: int, step: float) -> np.ndarray:
    """B(k, .) on the grid, anchored to 0 at grid point 0."""
    n_inc = count - 1
    chunks = []
    for b0 in range(0, n_inc, BLOCK_INCREMENTS):
        m = min(BLOCK_INCREMENTS, n_inc - b0)
        gen = np.random.Generator(np.random.Philox(derive_seed(master_seed, k, b0 // BLOCK_INCREMENTS)))
        chunks.append(gen.standard_normal(m))
    out = np.empty(count)
    out[0] = 0.0
    if n_inc:
        np.cumsum(np.concatenate(chunks) * math.sqrt(step), out=out[1:])
    return out


@dataclass(frozen=True, eq=False)
class Environment:
    """Immutable ensemble of Brownian lines on a shared grid.

    Lines are streamed (regenerated per request) unless materialized.  A
    coarsened view shares the parent's sample paths on a strided sub-grid.
    """

    lines: int
    grid: GridSpec
    master_seed: int
    _values: tuple[np.ndarray, ...] | None = field(default=None, repr=False)
    _base: "Environment | None" = field(default=None, repr=False)
    _stride: int = 1

    @classmethod
    def from_arrays(cls, values: Sequence[np.ndarray], grid: GridSpec, master_seed: int = 0) -> "Environment":
        vals = tuple(np.asarray(v, dtype=float) for v in values)
        if not vals:
            raise ConfigurationError("need at least one line")
        for v in vals:
            if v.shape != (grid.count,):
                raise ConfigurationError("line length does not match grid count")
        return cls(lines=len(vals), grid=grid, master_seed=master_seed, _values=vals)

    def coarsened(self, factor: int) -> "Environment":
        """View of the same sample paths on every factor-th grid point."""
        if factor < 1 or (self.grid.count - 1) % factor != 0:
            raise ConfigurationError(f"stride {factor} does not divide the grid")
        grid = GridSpec(self.grid.origin, self.grid.step * factor, (self.grid.count - 1) // factor + 1)
        return Environment(lines=self.lines, grid=grid, master_seed=self.master_seed,
                           _base=self, _stride=factor)

    def with_line_replaced(self, k: int, values: np.ndarray) -> "Environment":
        """Materialized copy with line k replaced (perturbation experiments)."""
        vals = [line_values(self, i) for i in range(self.lines)]
        v = np.asarray(values, dtype=float)
        if v.shape != (self.grid.count,):
            raise ConfigurationError("replacement line length does not match grid")
        vals[k] = v
        return Environment.from_arrays(vals, self.grid, self.master_seed)


def sample_environment(master_seed: int, lines: int, grid: GridSpec, materialize: bool = False) -> Environment:
    """New environment; identical (master_seed, lines, grid) is bit-identical."""
    if lines < 1:
        raise ConfigurationError(f"need at least one line, got {lines}")
    env = Environment(lines=lines, grid=grid, master_seed=int(master_seed))
    if materialize:
        vals = tuple(_generate_line(env.master_seed, k, grid.count, grid.step) for k in range(lines))
        env = Environment(lines=lines, grid=grid, master_seed=env.master_seed, _values=vals)
    return env


def line_values(env: Environment, k: int) -> np.ndarray:
    """B(k, .) on env's grid; regenerated deterministically if not materialized."""
    if k < 0 or k >= env.lines:
        raise IndexError(f"line {k} out of range [0, {env.lines})")
    if env._values is not None:
        return env._values[k]
    if env._base is not None:
        return line_values(env._base, k)[:: env._stride]
    return _generate_line(env.master_seed, k, env.grid.count, env.grid.step)


def required_grid(n: int, scaled_x_range: tuple[float, float], t_range: tuple[float, float],
                  scaled_resolution: float) -> GridSpec:
    """Grid covering every unscaled endpoint n*t + 2*n^(2/3)*x over the ranges.

    Adjacent grid points are scaled_resolution apart in scaled units.  The
    origin is aligned to a multiple of the step so that 0 lies on the grid
    whenever the span contains it.
    """
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    if not (scaled_resolution > 0):
        raise ConfigurationError(f"scaled_resolution must be positive, got {scaled_resolution}")
    x_lo, x_hi = min(scaled_x_range), max(scaled_x_range)
    t_lo, t_hi = min(t_range), max(t_range)
    two_n23 = 2.0 * n ** (2.0 / 3.0)
    lo = n * t_lo + two_n23 * x_lo
    hi = n * t_hi + two_n23 * x_hi
    step = two_n23 * scaled_resolution
    origin = step * math.floor(lo / step)
    count = int(math.ceil((hi - origin) / step - 1e-12)) + 1
    while origin + (count - 1) * step < hi:
        count += 1
    return GridSpec(origin=origin, step=step, count=max(count, 2))
