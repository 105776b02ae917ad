"""Local time at 0, estimated from Tanaka's formula and from occupation.

Symmetric convention throughout: ``sign(0) = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .paths import SamplePath

DEFAULT_EPS_EXPONENT = 0.4


def tanaka_raw(values: np.ndarray) -> np.ndarray:
    """``|x_t| - |x_0| - sum sign(x_k) dx_k`` along the last axis, unclamped.

    Each step contributes 0 unless the path leaves 0 or crosses it, so the
    sum is non-decreasing up to rounding.
    """
    x = np.asarray(values, dtype=float)
    dl = np.abs(x[..., 1:]) - np.abs(x[..., :-1]) - np.sign(x[..., :-1]) * np.diff(x, axis=-1)
    out = np.zeros(x.shape)
    np.cumsum(dl, axis=-1, out=out[..., 1:])
    return out


@dataclass(frozen=True, eq=False)
class LocalTimeEstimate:
    path: SamplePath
    method: str
    params: dict = field(default_factory=dict)
    clamp_mass: float = 0.0

    @property
    def terminal(self) -> float:
        return float(self.path.values[-1])


def local_time_tanaka(x: SamplePath) -> LocalTimeEstimate:
    raw = tanaka_raw(x.values)
    clamped = np.maximum.accumulate(raw)
    clamp_mass = float(np.sum(np.maximum(-np.diff(raw), 0.0)))
    return LocalTimeEstimate(x.derive(clamped, "local_time"), "tanaka", {}, clamp_mass)


def default_eps(dt: float) -> float:
    return dt ** DEFAULT_EPS_EXPONENT


def occupation_values(values: np.ndarray, eps: float) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    inc = (np.abs(x[..., :-1]) <= eps) * np.diff(x, axis=-1) ** 2
    out = np.zeros(x.shape)
    np.cumsum(inc, axis=-1, out=out[..., 1:])
    return out / (2.0 * eps)


def occupation_time_values(values: np.ndarray, eps: float, dt: float) -> np.ndarray:
    """``(1/2eps) * sum 1{|x_k| <= eps} dt``: the occupation form with the
    bracket replaced by clock time, for unit-diffusion paths only."""
    x = np.asarray(values, dtype=float)
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    out = np.zeros(x.shape)
    np.cumsum((np.abs(x[..., :-1]) <= eps) * dt, axis=-1, out=out[..., 1:])
    return out / (2.0 * eps)


def local_time_occupation(x: SamplePath, eps: float | None = None) -> LocalTimeEstimate:
    """``(1/2eps) * sum 1{|x_k| <= eps} (dx_k)^2``; ``eps`` defaults to ``dt**0.4``."""
    if eps is None:
        eps = default_eps(x.grid.dt)
    return LocalTimeEstimate(x.derive(occupation_values(x.values, eps), "local_time"),
                             "occupation", {"eps": float(eps)})
