"""Excursion sign marks and the four marking processes built from them.

``Z`` is ``zeta_n`` on the open excursion ``]g_n, d_n[``; ``k`` is the same on
the half-open ``[g_n, d_n[``.  The piecewise variants switch to the mark
``zeta_n^i`` of piece ``i`` on ``[t_i, t_{i+1})`` and may therefore change sign
inside one excursion at a breakpoint.

Marks of piece ``i`` are the successive uniforms of one substream per piece:
excursion ``n`` reads position ``n``.  The homogeneous construction reads the
piece-0 stream, so a single-piece schedule reproduces it bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .paths import ExcursionSet, SamplePath, TimeGrid


@dataclass(frozen=True, eq=False)
class SignAssignment:
    marks: np.ndarray
    alpha: float
    stream_id: str = ""

    def __len__(self) -> int:
        return int(self.marks.shape[0])


@dataclass(frozen=True)
class PiecewiseAlpha:
    """``alpha(t) = values[i]`` on ``[breakpoints[i], breakpoints[i+1])``."""

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(a) for a in self.values)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if not bp or bp[0] != 0.0:
            raise ValueError("breakpoints must start at 0")
        if len(bp) != len(vals):
            raise ValueError("need one alpha value per breakpoint")
        if any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(not 0.0 <= a <= 1.0 for a in vals):
            raise ValueError("alpha values must lie in [0, 1]")

    @classmethod
    def constant(cls, alpha: float) -> "PiecewiseAlpha":
        return cls((0.0,), (alpha,))

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[float]]) -> "PiecewiseAlpha":
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    def __len__(self) -> int:
        return len(self.values)

    def piece_index(self, times) -> np.ndarray:
        return np.searchsorted(np.asarray(self.breakpoints), np.asarray(times), side="right") - 1

    def alpha_at(self, times) -> np.ndarray:
        return np.asarray(self.values)[self.piece_index(times)]

    def check_horizon(self, horizon: float) -> None:
        if self.breakpoints[-1] > horizon:
            raise ValueError("breakpoints exceed the horizon")


@dataclass(frozen=True, eq=False)
class InhomSignAssignment:
    """``marks[n, i]`` is the mark of excursion ``n`` on piece ``i``."""

    marks: np.ndarray
    pieces: PiecewiseAlpha

    def __len__(self) -> int:
        return int(self.marks.shape[0])


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")


def _draw(n: int, alpha: float, stream: np.random.Generator) -> np.ndarray:
    u = stream.random(n)
    return np.where(u < alpha, 1, -1).astype(np.int8)


def assign_signs(excursions: ExcursionSet, alpha: float, stream: np.random.Generator,
                 stream_id: str = "") -> SignAssignment:
    """Independent marks with ``P(+1) = alpha``."""
    _check_alpha(alpha)
    return SignAssignment(_draw(len(excursions), alpha, stream), float(alpha), stream_id)


def assign_signs_inhom(excursions: ExcursionSet, pieces: PiecewiseAlpha,
                       streams: Sequence[np.random.Generator]) -> InhomSignAssignment:
    if len(streams) != len(pieces):
        raise ValueError("need one substream per piece")
    cols = [_draw(len(excursions), a, s) for a, s in zip(pieces.values, streams)]
    marks = np.stack(cols, axis=1) if cols else np.zeros((len(excursions), 0), np.int8)
    return InhomSignAssignment(marks, pieces)


def _check_count(excursions: ExcursionSet, n_marks: int) -> None:
    if n_marks != len(excursions):
        raise ValueError(f"{n_marks} marks for {len(excursions)} excursions")


def z_values(excursions: ExcursionSet, marks: np.ndarray) -> np.ndarray:
    _check_count(excursions, marks.shape[0])
    run = excursions.run_index()
    out = np.zeros(excursions.n_points)
    inside = run >= 0
    out[inside] = marks[run[inside]]
    return out


def k_values(excursions: ExcursionSet, marks: np.ndarray) -> np.ndarray:
    out = z_values(excursions, marks)
    start = excursions.start_index()
    at = start >= 0
    out[at] = marks[start[at]]
    return out


def _piece_of(grid: TimeGrid, pieces: PiecewiseAlpha) -> np.ndarray:
    pieces.check_horizon(grid.horizon)
    return pieces.piece_index(grid.times)


def z_inhom_values(excursions: ExcursionSet, marks: InhomSignAssignment,
                   grid: TimeGrid) -> np.ndarray:
    _check_count(excursions, len(marks))
    piece = _piece_of(grid, marks.pieces)
    run = excursions.run_index()
    out = np.zeros(excursions.n_points)
    inside = run >= 0
    out[inside] = marks.marks[run[inside], piece[inside]]
    return out


def k_inhom_values(excursions: ExcursionSet, marks: InhomSignAssignment,
                   grid: TimeGrid) -> np.ndarray:
    out = z_inhom_values(excursions, marks, grid)
    piece = _piece_of(grid, marks.pieces)
    start = excursions.start_index()
    at = start >= 0
    out[at] = marks.marks[start[at], piece[at]]
    return out


def fill_zero_marks(k: np.ndarray) -> np.ndarray:
    """Give zero entries the next non-zero value, or the previous one when
    none follows.  Works in place and returns ``k``."""
    known = np.flatnonzero(k != 0)
    if known.size == 0 or known.size == k.size:
        return k
    holes = np.flatnonzero(k == 0)
    nxt = np.minimum(np.searchsorted(known, holes), known.size - 1)
    k[holes] = k[known[nxt]]
    return k


def grid_flip_values(excursions: ExcursionSet, marks: np.ndarray) -> np.ndarray:
    """Signs used to flip a sampled path: ``k`` on every grid index, with zero
    indices that start no excursion borrowing a neighbour's mark.

    A zero index only approximates a zero (the path is ``O(sqrt(dt))`` there),
    so forcing the flipped path to 0 on it would distort every
    quadratic-variation functional near 0.
    """
    return fill_zero_marks(k_values(excursions, marks))


def grid_flip_inhom_values(excursions: ExcursionSet, marks: InhomSignAssignment,
                           grid: TimeGrid) -> np.ndarray:
    return fill_zero_marks(k_inhom_values(excursions, marks, grid))


def z_process(path: SamplePath, excursions: ExcursionSet, signs: SignAssignment) -> SamplePath:
    return path.derive(z_values(excursions, signs.marks), "Z")


def k_process(path: SamplePath, excursions: ExcursionSet, signs: SignAssignment) -> SamplePath:
    return path.derive(k_values(excursions, signs.marks), "k")


def z_process_inhom(path: SamplePath, excursions: ExcursionSet,
                    marks: InhomSignAssignment) -> SamplePath:
    return path.derive(z_inhom_values(excursions, marks, path.grid), "Z_inhom")


def k_process_inhom(path: SamplePath, excursions: ExcursionSet,
                    marks: InhomSignAssignment) -> SamplePath:
    return path.derive(k_inhom_values(excursions, marks, path.grid), "k_inhom")
