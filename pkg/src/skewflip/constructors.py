"""Concrete processes of the class ``X = m + v + A`` on a grid.

Every builder returns a :class:`Decomposition`.  The martingale and ``v``
parts are discrete left-point integrals of the input parts; ``A`` collects the
rest, so ``x - x[0] = m + v + a`` holds to rounding.  Whether ``dv`` and
``dA`` really live on the prescribed zero sets is then a statistical question
answered by :func:`skewflip.balayage.carrier_check`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .balayage import carrier_check, ito_sum, predictable_k
from .flips import (PiecewiseAlpha, assign_signs, assign_signs_inhom, fill_zero_marks,
                    grid_flip_inhom_values, grid_flip_values, k_values, z_values)
from .local_time import tanaka_raw
from .paths import (ExcursionSet, NonFiniteError, SamplePath, TimeGrid, default_zero_tol,
                    detect_excursions, last_zero_index, quadratic_variation,
                    same_grid, time_change_indices)
from .rng import Streams


@dataclass(frozen=True, eq=False)
class Decomposition:
    """``x = x[0] + m + v + a`` with carrier tags.

    ``v_carrier`` is the driving martingale ``D`` whose zeros carry ``dv``.
    ``zero_path`` is a signed path with the same zero set as ``x`` (``X`` for
    ``|X|``); it defaults to ``x`` and is what zero detection and the ``a``
    carrier check look at.
    """

    x: SamplePath
    m: SamplePath
    v: SamplePath
    a: SamplePath
    v_carrier: SamplePath | None = None
    zero_path: SamplePath | None = None
    flags: dict = field(default_factory=dict)

    @property
    def grid(self) -> TimeGrid:
        return self.x.grid

    @property
    def zero_source(self) -> SamplePath:
        return self.zero_path if self.zero_path is not None else self.x

    def identity_gap(self) -> float:
        """Sup of ``|x - x0 - m - v - a|`` relative to ``max(1, sup|x|)``."""
        x = self.x.values
        gap = x - x[0] - self.m.values - self.v.values - self.a.values
        return float(np.max(np.abs(gap)) / max(1.0, float(np.max(np.abs(x)))))

    def carrier_fractions(self, band: float | None = None) -> tuple[float, float]:
        """Fractions of ``|dv|`` off D's zero band and of ``|dA|`` off X's."""
        if band is None:
            band = np.sqrt(self.grid.dt)
        fv = 0.0
        if self.v_carrier is not None:
            fv = carrier_check(self.v, self.v_carrier, band).fraction_outside
        fa = carrier_check(self.a, self.zero_source, band).fraction_outside
        return fv, fa


def _build(x: SamplePath, m, v, a, v_carrier, zero_path, role: str, **flags) -> Decomposition:
    return Decomposition(
        x.derive(x.values, role),
        x.derive(m, "m"), x.derive(v, "v"), x.derive(a, "A"),
        v_carrier, zero_path, dict(flags),
    )


def _signed_companion(values: np.ndarray, *sources: SamplePath | None) -> np.ndarray:
    out = np.abs(values)
    for s in sources:
        if s is not None:
            out = out * np.sign(s.values)
    return out


def martingale_decomposition(b: SamplePath, d: SamplePath | None = None) -> Decomposition:
    """A driver path viewed as a pure martingale (``v = A = 0``)."""
    zeros = np.zeros_like(b.values)
    return _build(b, b.values - b.values[0], zeros, zeros, d, b, b.role or "X")


def constant_decomposition(grid: TimeGrid, value: float) -> Decomposition:
    x = SamplePath(grid, np.full(grid.n_steps + 1, float(value)), "const")
    zeros = np.zeros(grid.n_steps + 1)
    return _build(x, zeros, zeros, zeros, None, None, "const")


def geometric_skew_bm(b: SamplePath, w: SamplePath, delta: float) -> Decomposition:
    """``sqrt(1-delta^2) B + delta |W|`` with ``v = delta * L(W)``, ``A = 0``."""
    if not -1.0 <= delta <= 1.0:
        raise ValueError(f"|delta| must be <= 1, got {delta!r}")
    same_grid(b, w)
    scale = np.sqrt(1.0 - delta * delta)
    x = scale * b.values + delta * np.abs(w.values)
    m = scale * (b.values - b.values[0]) + delta * ito_sum(np.sign(w.values), w.values)
    v = delta * tanaka_raw(w.values)
    xp = b.derive(x, "X_delta")
    return _build(xp, m, v, np.zeros_like(x), w, xp, "X_delta", delta=float(delta))


def abs_of(dec: Decomposition) -> Decomposition:
    """``|X| = int sign(X) dm + int sign(X) dv + L(X)``.

    Any ``A`` part of the input is folded into the new ``A`` (``int sign dA``
    vanishes in continuous time).
    """
    x = dec.x.values
    h = np.sign(x)
    m = ito_sum(h, dec.m.values)
    v = ito_sum(h, dec.v.values)
    ax = np.abs(x)
    a = ax - ax[0] - m - v
    return _build(dec.x.derive(ax, "abs"), m, v, a, dec.v_carrier, dec.zero_source, "abs")


def pos_neg_mix(dec: Decomposition, alpha: float, beta: float) -> Decomposition:
    """``alpha X^+ + beta X^-`` through the symmetric Tanaka formulas."""
    if not (0.0 <= alpha <= 1.0 and 0.0 <= beta <= 1.0):
        raise ValueError("alpha and beta must lie in [0, 1]")
    x = dec.x.values
    pos, neg, zero = (x > 0).astype(float), (x < 0).astype(float), (x == 0).astype(float)
    h = alpha * (pos + 0.5 * zero) - beta * (neg + 0.5 * zero)
    y = alpha * np.maximum(x, 0.0) + beta * np.maximum(-x, 0.0)
    m = ito_sum(h, dec.m.values)
    v = ito_sum(h, dec.v.values)
    a = y - y[0] - m - v
    # the zero set of y grows to a half line of X when alpha or beta is 0
    zp = dec.x.derive(alpha * np.maximum(x, 0.0) - beta * np.maximum(-x, 0.0), "mix_zero")
    return _build(dec.x.derive(y, "mix"), m, v, a, dec.v_carrier, zp, "mix",
                  alpha=float(alpha), beta=float(beta))


def max_shift_example(m: SamplePath, d: SamplePath) -> Decomposition:
    """``| max(m - D, m + D) - |D_0| |`` built as ``|m + |D| - |D_0||``."""
    same_grid(m, d)
    mv, dv = m.values, d.values
    inner = np.maximum(mv - dv, mv + dv) - abs(dv[0])
    mart = (mv - mv[0]) + ito_sum(np.sign(dv), dv)
    v = tanaka_raw(dv)
    inner_path = m.derive(inner, "max_shift_inner")
    inner_dec = _build(inner_path, mart, v, np.zeros_like(inner), d, inner_path, "max_shift_inner")
    out = abs_of(inner_dec)
    return Decomposition(out.x.derive(out.x.values, "max_shift"), out.m, out.v, out.a,
                         out.v_carrier, out.zero_path, {})


def _excursions_of(path: SamplePath, zero_tol: float | None = None) -> ExcursionSet:
    tol = default_zero_tol(path.values, path.grid.dt) if zero_tol is None else zero_tol
    return detect_excursions(path, tol)


def balayage_example(dec: Decomposition, k: SamplePath) -> Decomposition:
    """``k_{g_t} X_t`` with ``g_t`` from X's zeros; ``A`` absorbs the remainder R."""
    same_grid(dec.x, k)
    exc = _excursions_of(dec.zero_source)
    kg = predictable_k(k.values, exc)
    x = kg * dec.x.values
    m = ito_sum(kg, dec.m.values)
    v = ito_sum(kg, dec.v.values)
    a = x - x[0] - m - v
    # k_g X has X's zeros, but hides a crossing whenever k_g flips on the same step
    return _build(dec.x.derive(x, "balayage"), m, v, a, dec.v_carrier, dec.zero_source,
                  "balayage")


def min_of(x1: Decomposition, x2: Decomposition, band: float | None = None) -> Decomposition:
    """``min(X, Y)`` for non-negative X, Y equal on H, via ``2Z = X + Y - |X - Y|``.

    ``flags['precondition_ok']`` records whether ``mean |X - Y|`` over the
    zero band of D stays below ``band`` (default ``sqrt(dt)``).
    """
    grid = same_grid(x1.x, x2.x)
    if band is None:
        band = np.sqrt(grid.dt)
    p, q = x1.x.values, x2.x.values
    diff = p - q
    s = np.sign(diff)
    lt = tanaka_raw(diff)
    d1 = lambda name: getattr(x1, name).values - getattr(x2, name).values  # noqa: E731
    m = 0.5 * (x1.m.values + x2.m.values - ito_sum(s, d1("m")))
    v = 0.5 * (x1.v.values + x2.v.values - ito_sum(s, d1("v")) - lt)
    a = 0.5 * (x1.a.values + x2.a.values - ito_sum(s, d1("a")))
    z = np.minimum(p, q)
    flags = {"negative_input": bool((p < 0).any() or (q < 0).any())}
    carrier = x1.v_carrier if x1.v_carrier is not None else x2.v_carrier
    if carrier is not None:
        on_h = np.abs(carrier.values) <= band
        gap = float(np.abs(diff[on_h]).mean()) if on_h.any() else 0.0
        flags["h_gap"] = gap
        flags["precondition_ok"] = gap <= band
    zp = x1.x.derive(_signed_companion(z, x1.zero_source, x2.zero_source), "min_zero")
    return _build(x1.x.derive(z, "min"), m, v, a, carrier, zp, "min", **flags)


def _product_pair(x1: Decomposition, x2: Decomposition) -> Decomposition:
    same_grid(x1.x, x2.x)
    X, Y = x1.x.values, x2.x.values
    dm1, dv1, da1 = (np.diff(getattr(x1, n).values) for n in ("m", "v", "a"))
    dm2, dv2, da2 = (np.diff(getattr(x2, n).values) for n in ("m", "v", "a"))
    Xl, Yl = X[:-1], Y[:-1]
    dm = Xl * dm2 + Yl * dm1 + dm1 * dm2
    dv = Xl * dv2 + Yl * dv1 + dm1 * dv2 + dv1 * dm2 + dv1 * dv2
    da = Xl * da2 + Yl * da1 + da1 * (dm2 + dv2 + da2) + da2 * (dm1 + dv1)
    cum = lambda inc: np.concatenate(([0.0], np.cumsum(inc)))  # noqa: E731
    x = X * Y
    carrier = x1.v_carrier if x1.v_carrier is not None else x2.v_carrier
    zp = x1.x.derive(_signed_companion(x, x1.zero_source, x2.zero_source), "product_zero")
    return _build(x1.x.derive(x, "product"), cum(dm), cum(dv), cum(da), carrier, zp, "product")


def product_of(xs: Sequence[Decomposition]) -> Decomposition:
    """Pointwise product by discrete integration by parts.

    Drivers must be independent (the grid stand-in for vanishing brackets);
    the cross term ``dm1*dm2`` is then a centred increment and goes to ``m``.
    """
    if len(xs) < 2:
        raise ValueError("product_of needs at least two factors")
    out = xs[0]
    for nxt in xs[1:]:
        out = _product_pair(out, nxt)
    return out


@dataclass(frozen=True)
class ScalarFunction:
    """A locally bounded ``f`` with its exact primitive ``F(x) = int_0^x f``."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    F: Callable[[np.ndarray], np.ndarray]


def _clipped_primitive(lo: float, hi: float):
    def F(x):
        x = np.asarray(x, dtype=float)
        up = np.where(x <= hi, 0.5 * x * x, 0.5 * hi * hi + hi * (x - hi))
        down = np.where(x >= lo, 0.5 * x * x, 0.5 * lo * lo + lo * (x - lo))
        return np.where(x >= 0, up, down)
    return F


def make_function(name: str, **params) -> ScalarFunction:
    """Registered scalar functions: ``constant(c)``, ``linear(c)``,
    ``polynomial(coeffs)``, ``exponential(rate)``, ``clipped(lo, hi)``."""
    if name == "constant":
        c = float(params.get("c", 1.0))
        return ScalarFunction(f"constant({c})", lambda x: np.full(np.shape(x), c),
                              lambda x: c * np.asarray(x, dtype=float))
    if name == "linear":
        c = float(params.get("c", 1.0))
        return ScalarFunction(f"linear({c})", lambda x: c * np.asarray(x, dtype=float),
                              lambda x: 0.5 * c * np.asarray(x, dtype=float) ** 2)
    if name == "polynomial":
        coeffs = [float(c) for c in params["coeffs"]]
        prim = [0.0] + [c / (i + 1) for i, c in enumerate(coeffs)]
        return ScalarFunction(f"polynomial({coeffs})",
                              lambda x: np.polynomial.polynomial.polyval(x, coeffs),
                              lambda x: np.polynomial.polynomial.polyval(x, prim))
    if name == "exponential":
        r = float(params.get("rate", 1.0))
        if r == 0:
            return make_function("constant", c=1.0)
        return ScalarFunction(f"exponential({r})", lambda x: np.exp(r * np.asarray(x, dtype=float)),
                              lambda x: np.expm1(r * np.asarray(x, dtype=float)) / r)
    if name == "clipped":
        lo, hi = float(params.get("lo", 0.0)), float(params.get("hi", 1.0))
        if not lo <= 0.0 <= hi:
            raise ValueError("clipped needs lo <= 0 <= hi")
        return ScalarFunction(f"clipped({lo},{hi})", lambda x: np.clip(x, lo, hi),
                              _clipped_primitive(lo, hi))
    raise ValueError(f"unknown function {name!r}; registered: {FUNCTIONS}")


FUNCTIONS = ("constant", "linear", "polynomial", "exponential", "clipped")


def f_of_A_transform(dec: Decomposition, f: ScalarFunction) -> tuple[Decomposition, SamplePath]:
    """``f(A) X`` with its decomposition, plus the companion ``f(A) X - F(A)``."""
    A = dec.a.values
    with np.errstate(over="ignore", invalid="ignore"):
        fa = np.asarray(f.f(A), dtype=float)
        Fa = np.asarray(f.F(A), dtype=float)
    if not (np.isfinite(fa).all() and np.isfinite(Fa).all()):
        raise NonFiniteError(f"{f.name} is not finite on the range of A")
    X = dec.x.values
    y = fa * X
    m = ito_sum(fa, dec.m.values)
    v = ito_sum(fa, dec.v.values)
    a = y - y[0] - m - v
    zp = dec.x.derive(fa * dec.zero_source.values, "fA_zero")
    out = _build(dec.x.derive(y, "fA_X"), m, v, a, dec.v_carrier, zp, "fA_X", function=f.name)
    companion = dec.x.derive(y - Fa, "characterization")
    return out, companion


# -- skew Brownian motion solutions -------------------------------------------

@dataclass(frozen=True, eq=False)
class SkewBuild:
    """A flipped path with the pieces it was assembled from."""

    y: SamplePath
    transform: SamplePath
    zero_companion: SamplePath
    excursions: ExcursionSet


def _marks(excursions: ExcursionSet, pieces: PiecewiseAlpha, streams: Streams,
           grid: TimeGrid, homogeneous: bool) -> np.ndarray:
    """Grid flip signs: the open-interval marks, with every zero index taking
    the mark of the excursion it starts (half-open convention)."""
    if homogeneous:
        signs = assign_signs(excursions, pieces.values[0], streams("zeta", 0), "zeta")
        return grid_flip_values(excursions, signs.marks)
    marks = assign_signs_inhom(excursions, pieces,
                               [streams("zeta", i) for i in range(len(pieces))])
    return grid_flip_inhom_values(excursions, marks, grid)


def _k_of(path: SamplePath, k_alpha: float, streams: Streams, role: str) -> np.ndarray:
    """``k`` of the driver with unit modulus; zero indices that start no
    excursion (runs of zeros, a zero at the horizon) borrow a neighbour's mark."""
    exc = _excursions_of(path)
    return fill_zero_marks(k_values(exc, assign_signs(exc, k_alpha, streams(role), role).marks))


def build_skew_delta(b: SamplePath, w: SamplePath, delta: float, pieces: PiecewiseAlpha,
                     streams: Streams, k_alpha: float = 1.0, homogeneous: bool = True,
                     zero_tol: float | None = None) -> SkewBuild:
    grid = same_grid(b, w)
    if not -1.0 <= delta <= 1.0:
        raise ValueError(f"|delta| must be <= 1, got {delta!r}")
    pieces.check_horizon(grid.horizon)
    scale = np.sqrt(1.0 - delta * delta)
    xd = b.derive(scale * b.values + delta * np.abs(w.values), "X_delta")
    exc = _excursions_of(xd, zero_tol)
    kw = _k_of(w, k_alpha, streams, "kW")
    kg = kw[last_zero_index(exc)]
    transform = kg * np.abs(xd.values)
    z = _marks(exc, pieces, streams, grid, homogeneous)
    y = b.derive(z * transform, "Y", zero_tol=exc.zero_tol, n_excursions=len(exc))
    return SkewBuild(y, b.derive(transform, "T"), b.derive(kg * xd.values, "T_zero"), exc)


def skew_solution_delta(b: SamplePath, w: SamplePath, delta: float, alpha: float,
                        streams: Streams, k_alpha: float = 1.0,
                        zero_tol: float | None = None) -> SamplePath:
    """``Z_t k^W_{g_t} |X^delta_t|`` with ``Z`` flipping the transform's excursions.

    ``k_alpha`` is the ``P(+1)`` of the marks of ``k^W``.  The sign of the
    output at a fixed time is ``zeta * k^W``, so its law is Bernoulli(alpha)
    only for ``k_alpha = 1`` (the default); other values give
    ``alpha*k_alpha + (1-alpha)*(1-k_alpha)``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
    return build_skew_delta(b, w, delta, PiecewiseAlpha.constant(alpha), streams,
                            k_alpha, True, zero_tol).y


def skew_solution_delta_inhom(b: SamplePath, w: SamplePath, delta: float,
                              pieces: PiecewiseAlpha, streams: Streams,
                              k_alpha: float = 1.0, zero_tol: float | None = None) -> SamplePath:
    return build_skew_delta(b, w, delta, pieces, streams, k_alpha, False, zero_tol).y


def build_skew_general(x: Decomposition, d: SamplePath, pieces: PiecewiseAlpha,
                       streams: Streams, k_alpha: float = 1.0,
                       homogeneous: bool = True) -> SkewBuild:
    grid = same_grid(x.x, d)
    pieces.check_horizon(grid.horizon)
    qv = quadratic_variation(x.x).values
    idx, truncated = time_change_indices(qv, grid.times)
    # inf{s : <X>_s > 0} = 0 for a strictly increasing bracket
    idx[0] = 0
    zs = x.zero_source
    exc_x = _excursions_of(zs)
    kd = _k_of(d, k_alpha, streams, "kD")
    kg = kd[last_zero_index(exc_x)]
    transform = (kg * x.x.values)[idx]
    companion = d.derive((kg * zs.values)[idx], "T_zero")
    exc = _excursions_of(d.derive(zs.values[idx], "X_tau"))
    z = _marks(exc, pieces, streams, grid, homogeneous)
    first = int(np.argmax(truncated)) if truncated.any() else -1
    y = d.derive(z * transform, "Y", truncated=bool(truncated.any()), truncated_from=first,
                 terminal_qv=float(qv[-1]), n_excursions=len(exc))
    return SkewBuild(y, d.derive(transform, "T"), companion, exc)


def skew_solution_general(x: Decomposition, d: SamplePath, alpha: float, streams: Streams,
                          k_alpha: float = 1.0) -> SamplePath:
    """``Z_t k^D_{g_{tau_t}} X_{tau_t}`` with ``tau`` the inverse of ``<X,X>``.

    Past the terminal bracket the time change sticks at the last index and
    ``meta['truncated']`` is set.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
    return build_skew_general(x, d, PiecewiseAlpha.constant(alpha), streams, k_alpha, True).y


def skew_solution_general_inhom(x: Decomposition, d: SamplePath, pieces: PiecewiseAlpha,
                                streams: Streams, k_alpha: float = 1.0) -> SamplePath:
    return build_skew_general(x, d, pieces, streams, k_alpha, False).y


def companion_W_from_abs(x_abs: SamplePath, stream, excursions: ExcursionSet | None = None,
                         zero_tol: float | None = None) -> SamplePath:
    """``W = int Z dX`` with symmetric marks, so that ``|W|`` tracks ``X``."""
    if (x_abs.values < 0).any():
        raise ValueError("x_abs must be non-negative")
    exc = excursions if excursions is not None else _excursions_of(x_abs, zero_tol)
    z = z_values(exc, assign_signs(exc, 0.5, stream, "zeta_half").marks)
    return x_abs.derive(ito_sum(z, x_abs.values), "W")
