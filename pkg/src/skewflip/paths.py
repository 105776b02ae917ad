"""Brownian drivers on a uniform grid and path-level structural queries.

Zeros on a grid are almost never exact.  A grid index is a *zero index* when
``|value| <= zero_tol`` or when the path changes sign between it and a
neighbour; a sign change is assigned to whichever of the two endpoints has the
smaller magnitude (the left one on ties).  Excursions are the maximal runs of
non-zero indices between zero indices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

ZERO_BAND_FACTOR = 0.5


class NonFiniteError(ArithmeticError):
    """A path acquired a NaN or infinite value."""

    def __init__(self, message: str, path_index: int | None = None):
        super().__init__(message)
        self.path_index = path_index


@dataclass(frozen=True)
class TimeGrid:
    horizon: float = 1.0
    n_steps: int = 1024

    def __post_init__(self):
        if self.n_steps < 0 or int(self.n_steps) != self.n_steps:
            raise ValueError(f"n_steps must be a non-negative integer, got {self.n_steps!r}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon!r}")

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps if self.n_steps else self.horizon

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def index_of(self, t: float) -> int:
        """Largest grid index whose time is ``<= t`` (clipped to the grid)."""
        k = int(np.floor(t / self.dt + 1e-9))
        return min(max(k, 0), self.n_steps)


@dataclass(frozen=True, eq=False)
class SamplePath:
    """One realization on a grid.  ``role`` is a free label such as ``"B"``."""

    grid: TimeGrid
    values: np.ndarray
    role: str = ""
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (self.grid.n_steps + 1,):
            raise ValueError(
                f"path {self.role!r} has shape {values.shape}, grid needs ({self.grid.n_steps + 1},)"
            )
        if not np.isfinite(values).all():
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise NonFiniteError(f"path {self.role!r} is non-finite at grid index {bad}")

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def derive(self, values, role: str, **meta) -> "SamplePath":
        return SamplePath(self.grid, values, role, dict(meta))


def same_grid(*paths: SamplePath) -> TimeGrid:
    grid = paths[0].grid
    for p in paths[1:]:
        if p.grid != grid:
            raise ValueError(f"grid mismatch: {p.grid} vs {grid}")
    return grid


def simulate_brownian(grid: TimeGrid, stream: np.random.Generator, x0: float = 0.0,
                      role: str = "B") -> SamplePath:
    """Exact Gaussian increments with variance ``dt``."""
    steps = stream.standard_normal(grid.n_steps) * np.sqrt(grid.dt)
    if not np.isfinite(steps).all():
        raise NonFiniteError(f"non-finite Brownian increment for role {role!r}")
    values = np.empty(grid.n_steps + 1)
    values[0] = x0
    np.cumsum(steps, out=values[1:])
    values[1:] += x0
    return SamplePath(grid, values, role)


def default_zero_tol(values: np.ndarray, dt: float) -> float:
    """0 for paths that take negative values, ``0.5*sqrt(dt)`` for non-negative ones."""
    values = np.asarray(values)
    if values.size and values.min() < 0:
        return 0.0
    return ZERO_BAND_FACTOR * np.sqrt(dt)


def zero_mask(values: np.ndarray, zero_tol: float = 0.0) -> np.ndarray:
    """Boolean mask of zero indices (band membership plus assigned crossings)."""
    values = np.asarray(values, dtype=float)
    if zero_tol < 0:
        raise ValueError("zero_tol must be >= 0")
    mag = np.abs(values)
    zero = mag <= zero_tol
    if values.size > 1:
        cross = (np.sign(values[:-1]) * np.sign(values[1:]) < 0) & ~zero[:-1] & ~zero[1:]
        k = np.flatnonzero(cross)
        at = np.where(mag[k] <= mag[k + 1], k, k + 1)
        zero[at] = True
    return zero


@dataclass(frozen=True, eq=False)
class ExcursionSet:
    """Excursion intervals ``]g_n, d_n[`` as grid indices.

    ``g = -1`` or ``d = n_steps + 1`` mark an interval clipped by the grid
    boundary (the path is away from zero at index 0 or at the horizon).
    """

    g: np.ndarray
    d: np.ndarray
    zero_mask: np.ndarray
    zero_tol: float

    def __len__(self) -> int:
        return int(self.g.shape[0])

    @property
    def n_points(self) -> int:
        return int(self.zero_mask.shape[0])

    @property
    def intervals(self) -> list[tuple[int, int]]:
        return [(int(a), int(b)) for a, b in zip(self.g, self.d)]

    @property
    def clipped(self) -> np.ndarray:
        return (self.g < 0) | (self.d > self.n_points - 1)

    def run_index(self) -> np.ndarray:
        """Excursion number for every grid index strictly inside an excursion, else -1."""
        out = np.full(self.n_points, -1, dtype=np.int64)
        lengths = self.d - self.g - 1
        if len(self):
            out[~self.zero_mask] = np.repeat(np.arange(len(self)), lengths)
        return out

    def start_index(self) -> np.ndarray:
        """Excursion number for every index that is some ``g_n``, else -1."""
        out = np.full(self.n_points, -1, dtype=np.int64)
        inside = self.g >= 0
        out[self.g[inside]] = np.flatnonzero(inside)
        return out


def excursions_from_mask(zero: np.ndarray, zero_tol: float = 0.0) -> ExcursionSet:
    zero = np.asarray(zero, dtype=bool)
    nz = np.concatenate(([0], (~zero).astype(np.int8), [0]))
    edges = np.diff(nz)
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    return ExcursionSet(starts - 1, stops, zero, float(zero_tol))


def detect_excursions(path: SamplePath | np.ndarray, zero_tol: float = 0.0) -> ExcursionSet:
    values = path.values if isinstance(path, SamplePath) else np.asarray(path, dtype=float)
    return excursions_from_mask(zero_mask(values, zero_tol), zero_tol)


def last_zero_index(excursions: ExcursionSet) -> np.ndarray:
    """``g_t`` for every grid index; 0 where no zero precedes (``sup {} = 0``)."""
    idx = np.where(excursions.zero_mask, np.arange(excursions.n_points), -1)
    last = np.maximum.accumulate(idx)
    return np.where(last < 0, 0, last)


def next_zero_index(excursions: ExcursionSet) -> np.ndarray:
    """``d_t`` for every grid index: first zero index strictly after t, -1 if none."""
    n = excursions.n_points
    big = n
    idx = np.where(excursions.zero_mask, np.arange(n), big)
    at_or_after = np.minimum.accumulate(idx[::-1])[::-1]
    out = np.full(n, -1, dtype=np.int64)
    nxt = at_or_after[1:]
    out[:-1] = np.where(nxt == big, -1, nxt)
    return out


@dataclass(frozen=True)
class HonestTimeQuery:
    """Last/next zero indices around ``t`` for X (``g_t, d_t, g``) and for the
    set H (``gamma_t, d_prime_t, gamma``).  Sentinels: 0 before, ``n_steps``
    after; the ``*_missing`` flags tell a sentinel from a genuine zero."""

    t: int
    g_t: int
    d_t: int
    g: int
    gamma_t: int
    d_prime_t: int
    gamma: int
    g_t_missing: bool
    d_t_missing: bool
    gamma_t_missing: bool
    d_prime_t_missing: bool


def _around(exc: ExcursionSet, t: int) -> tuple[int, int, int, bool, bool]:
    zeros = np.flatnonzero(exc.zero_mask)
    n = exc.n_points - 1
    before = zeros[zeros <= t]
    after = zeros[zeros > t]
    g_t = int(before[-1]) if before.size else 0
    d_t = int(after[0]) if after.size else n
    g = int(zeros[-1]) if zeros.size else 0
    return g_t, d_t, g, not before.size, not after.size


def honest_times(excursions: ExcursionSet, t: int,
                 h_excursions: ExcursionSet | None = None) -> HonestTimeQuery:
    """Honest-time query at grid index ``t``; H defaults to X's own zero set."""
    if not 0 <= t < excursions.n_points:
        raise ValueError(f"t index {t} outside the grid")
    h = excursions if h_excursions is None else h_excursions
    g_t, d_t, g, gm, dm = _around(excursions, t)
    c_t, dp_t, c, cm, dpm = _around(h, t)
    return HonestTimeQuery(t, g_t, d_t, g, c_t, dp_t, c, gm, dm, cm, dpm)


def quadratic_variation(path: SamplePath) -> SamplePath:
    qv = np.concatenate(([0.0], np.cumsum(np.diff(path.values) ** 2)))
    return path.derive(qv, "qv")


@dataclass(frozen=True)
class TimeChange:
    index: int
    truncated: bool


def time_change_indices(qv: np.ndarray, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``inf{k : qv[k] > t}`` with the last index as sentinel."""
    qv = np.asarray(qv, dtype=float)
    ts = np.asarray(ts, dtype=float)
    if (ts < 0).any():
        raise ValueError("time change is defined for t >= 0 only")
    k = np.searchsorted(qv, ts, side="right")
    truncated = k > qv.shape[0] - 1
    return np.minimum(k, qv.shape[0] - 1), truncated


def time_change(qv: SamplePath | np.ndarray, t: float) -> TimeChange:
    values = qv.values if isinstance(qv, SamplePath) else np.asarray(qv, dtype=float)
    if t < 0:
        raise ValueError("time change is defined for t >= 0 only")
    k, trunc = time_change_indices(values, np.array([t]))
    return TimeChange(int(k[0]), bool(trunc[0]))
