"""Discrete stochastic integrals, the balayage transform ``k_{g_t} Y_t`` and
carrier (support) checks for finite-variation paths."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .paths import ExcursionSet, SamplePath, last_zero_index, same_grid


def ito_sum(integrand: np.ndarray, integrator: np.ndarray) -> np.ndarray:
    """Left-point Riemann sum along the last axis, starting at 0."""
    integrand = np.asarray(integrand, dtype=float)
    integrator = np.asarray(integrator, dtype=float)
    incr = integrand[..., :-1] * np.diff(integrator, axis=-1)
    out = np.zeros(integrator.shape)
    np.cumsum(incr, axis=-1, out=out[..., 1:])
    return out


def ito_integral(integrand: SamplePath, integrator: SamplePath) -> SamplePath:
    same_grid(integrand, integrator)
    return integrator.derive(ito_sum(integrand.values, integrator.values), "integral")


def balayage_values(k: np.ndarray, y: np.ndarray, excursions: ExcursionSet) -> np.ndarray:
    return np.asarray(k)[last_zero_index(excursions)] * np.asarray(y)


def balayage_transform(k: SamplePath, y: SamplePath, excursions: ExcursionSet) -> SamplePath:
    """``k[g_t] * y[t]`` with ``g_t`` the last zero index of ``y`` at or before t."""
    same_grid(k, y)
    return y.derive(balayage_values(k.values, y.values, excursions), "balayage")


def predictable_k(k: np.ndarray, excursions: ExcursionSet) -> np.ndarray:
    """Integrand ``k[g_j]`` used on the step ``j -> j+1``."""
    return np.asarray(k)[last_zero_index(excursions)]


def residual_values(k: np.ndarray, y: np.ndarray, excursions: ExcursionSet) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    y = np.asarray(y, dtype=float)
    kg = predictable_k(k, excursions)
    return kg * y - k[0] * y[0] - ito_sum(kg, y)


def residual_R(k: SamplePath, y: SamplePath, excursions: ExcursionSet) -> SamplePath:
    """Finite-variation remainder ``k_{g_t}Y_t - k_0Y_0 - int k_{g_s} dY_s``.

    Its increments vanish on every step that does not end on a zero index.
    """
    same_grid(k, y)
    return y.derive(residual_values(k.values, y.values, excursions), "R")


@dataclass(frozen=True)
class CarrierReport:
    total_variation_mass: float
    mass_outside_carrier: float
    fraction_outside: float
    carrier: str
    band: float


def band_steps(carrier: np.ndarray, band: float) -> np.ndarray:
    """Steps ``j -> j+1`` that touch the zero set of ``carrier``.

    A step touches it when the carrier changes sign across it or when either
    endpoint is a zero index: inside ``|carrier| <= band``, or the
    smaller-magnitude end of a sign change (the detection rule of
    :func:`skewflip.paths.zero_mask`).  Non-negative carriers carry no sign
    information, so pass the signed path with the same zero set when one
    exists (``X`` rather than ``|X|``).
    """
    c = np.asarray(carrier, dtype=float)
    mag = np.abs(c)
    near = mag <= band
    flip = np.sign(c[..., :-1]) * np.sign(c[..., 1:]) < 0
    cross = flip & ~near[..., :-1] & ~near[..., 1:]
    left = mag[..., :-1] <= mag[..., 1:]
    zero = near.copy()
    zero[..., :-1] |= cross & left
    zero[..., 1:] |= cross & ~left
    return zero[..., :-1] | zero[..., 1:] | flip


def carrier_masses(fv: np.ndarray, carrier: np.ndarray, band: float) -> tuple[float, float]:
    tv = np.abs(np.diff(np.asarray(fv, dtype=float), axis=-1))
    inside = band_steps(carrier, band)
    return float(tv.sum()), float(tv[~inside].sum())


def carrier_check(fv: SamplePath, carrier: SamplePath, band: float) -> CarrierReport:
    same_grid(fv, carrier)
    if band < 0:
        raise ValueError("band must be >= 0")
    total, outside = carrier_masses(fv.values, carrier.values, band)
    fraction = outside / total if total > 0 else 0.0
    return CarrierReport(total, outside, fraction, carrier.role, float(band))
