"""Nested Monte Carlo for last-zero representation formulas.

An outer path is simulated up to ``T`` and frozen; fresh continuations to the
horizon estimate conditional expectations given the prefix.  The horizon
stands in for infinity: the process is stopped there, so ``g < T`` means
"no zero in ``[T, horizon]``".

Whether a continuation avoids zero between two grid points is scored by the
Brownian-bridge survival probability ``1 - exp(-2 x_k x_{k+1} / dt)`` (exact
for unit-diffusion paths, and the default), or by plain sign monitoring.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .local_time import tanaka_raw
from .parallel import map_ordered
from .paths import TimeGrid, zero_mask
from .rng import Streams
from .verification import Check, VerificationReport


@dataclass(frozen=True)
class Model:
    """How X, its zero companion, D, v and A are read off the driver paths."""

    drivers: tuple[str, ...]
    x: Callable
    x_zero: Callable
    d_zero: Callable | None
    v: Callable | None
    a: Callable | None
    description: str


def _scale(delta):
    return math.sqrt(1.0 - delta * delta)


MODELS: dict[str, Model] = {
    "reflected_bm": Model(("B",), lambda p, d: np.abs(p["B"]), lambda p, d: p["B"],
                          lambda p, d: p["B"], None, lambda p, d: tanaka_raw(p["B"]),
                          "X = |B|, D = B"),
    "geometric_skew": Model(("B", "W"),
                            lambda p, d: _scale(d) * p["B"] + d * np.abs(p["W"]),
                            lambda p, d: _scale(d) * p["B"] + d * np.abs(p["W"]),
                            lambda p, d: p["W"], lambda p, d: d * tanaka_raw(p["W"]), None,
                            "X = sqrt(1-delta^2) B + delta |W|, D = W"),
    "driver": Model(("W",), lambda p, d: p["W"], lambda p, d: p["W"], lambda p, d: p["W"],
                    None, None, "X = D = W"),
    "empty_h": Model(("B",), lambda p, d: p["B"], lambda p, d: p["B"], None, None, None,
                     "X = B, D = 1 (H empty)"),
}

FUNCTIONALS = ("terminal",)


@dataclass(frozen=True)
class NestedMCSpec:
    n_outer: int = 200
    n_inner: int = 10_000
    T: float = 0.5
    functional: str = "terminal"
    model: str = "reflected_bm"
    horizon: float = 1.0
    outer_steps: int = 512
    inner_steps: int = 64
    delta: float = 0.6
    bridge_correction: bool = True
    min_level: float = 0.1
    chunk: int = 2500

    def __post_init__(self):
        if self.n_outer < 1 or self.n_inner < 1:
            raise ValueError("n_outer and n_inner must be >= 1")
        if not 0.0 <= self.T < self.horizon:
            raise ValueError("T must lie in [0, horizon)")
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; known: {sorted(MODELS)}")
        if self.functional not in FUNCTIONALS:
            raise ValueError(f"unknown functional {self.functional!r}")
        if self.inner_steps < 1 or self.outer_steps < 1 or self.chunk < 1:
            raise ValueError("step counts and chunk must be >= 1")
        if not -1.0 <= self.delta <= 1.0:
            raise ValueError("|delta| must be <= 1")

    @property
    def model_def(self) -> Model:
        return MODELS[self.model]

    @property
    def outer_grid(self) -> TimeGrid:
        return TimeGrid(self.horizon, self.outer_steps)

    @property
    def t_index(self) -> int:
        return int(round(self.T / self.horizon * self.outer_steps))


def survival(c: np.ndarray, dt: float, bridge: bool = True) -> np.ndarray:
    """``S[..., k]`` = probability that ``c`` has no zero on ``[0, t_k]``."""
    c = np.asarray(c, dtype=float)
    prod = c[..., :-1] * c[..., 1:]
    if bridge:
        p = np.where(prod > 0, -np.expm1(-2.0 * np.maximum(prod, 0.0) / dt), 0.0)
    else:
        p = (prod > 0).astype(float)
    out = np.ones(c.shape)
    np.cumprod(p, axis=-1, out=out[..., 1:])
    return out


def _continue(state: dict[str, float], n_paths: int, n_steps: int, dt: float,
              stream: np.random.Generator, drivers: tuple[str, ...]) -> dict[str, np.ndarray]:
    out = {}
    for name in drivers:
        steps = stream.standard_normal((n_paths, n_steps)) * math.sqrt(dt)
        path = np.empty((n_paths, n_steps + 1))
        path[:, 0] = state[name]
        np.cumsum(steps, axis=1, out=path[:, 1:])
        path[:, 1:] += state[name]
        out[name] = path
    return out


def _crosses(c: np.ndarray) -> np.ndarray:
    """Per path: does ``c`` have a zero strictly after the start index?"""
    c = np.asarray(c, dtype=float)
    after = (c[:, 1:] == 0) | (np.sign(c[:, :-1]) * np.sign(c[:, 1:]) < 0)
    return after.any(axis=1)


@dataclass(frozen=True)
class InnerEstimate:
    """Means and standard errors of the two representation right-hand sides."""

    g_mean: float
    g_se: float
    gamma_mean: float
    gamma_se: float
    no_x_zero: float
    no_d_zero: float
    n_inner: int


def inner_estimate(spec: NestedMCSpec, state: dict[str, float], streams: Streams,
                   remaining: float | None = None) -> InnerEstimate:
    """Continuations from a frozen state; ``remaining`` defaults to ``horizon - T``."""
    model = spec.model_def
    remaining = spec.horizon - spec.T if remaining is None else remaining
    n = spec.inner_steps
    dt = remaining / n
    acc = np.zeros(4)
    acc2 = np.zeros(2)
    done, chunk_id = 0, 0
    while done < spec.n_inner:
        m = min(spec.chunk, spec.n_inner - done)
        p = _continue(state, m, n, dt, streams("inner", chunk_id), model.drivers)
        x_end = model.x(p, spec.delta)[:, -1]
        cx = model.x_zero(p, spec.delta)
        sx = survival(cx, dt, spec.bridge_correction)
        if model.d_zero is not None:
            cd = model.d_zero(p, spec.delta)
            sd = survival(cd, dt, spec.bridge_correction)
            d_cross = _crosses(cd)
        else:
            sd = np.ones_like(sx)
            d_cross = np.zeros(m, dtype=bool)
        e_g = x_end * sx[:, -1]
        if model.v is not None:
            dv = np.diff(model.v(p, spec.delta), axis=1)
            e_g = e_g - d_cross * np.sum(sx[:, 1:] * dv, axis=1)
        e_c = x_end * sd[:, -1]
        if model.a is not None:
            da = np.diff(model.a(p, spec.delta), axis=1)
            e_c = e_c - _crosses(cx) * np.sum(sd[:, 1:] * da, axis=1)
        acc += [e_g.sum(), e_c.sum(), sx[:, -1].sum(), sd[:, -1].sum()]
        acc2 += [(e_g * e_g).sum(), (e_c * e_c).sum()]
        done += m
        chunk_id += 1
    mean = acc / done
    var = np.maximum(acc2 / done - mean[:2] ** 2, 0.0) * done / max(done - 1, 1)
    se = np.sqrt(var / done)
    return InnerEstimate(float(mean[0]), float(se[0]), float(mean[1]), float(se[1]),
                         float(mean[2]), float(mean[3]), done)


def outer_prefix(spec: NestedMCSpec, streams: Streams, n_steps: int) -> dict[str, np.ndarray]:
    """Outer driver paths on the first ``n_steps`` steps of the outer grid."""
    dt = spec.outer_grid.dt
    p = _continue({k: 0.0 for k in spec.model_def.drivers}, 1, n_steps, dt,
                  streams("outer"), spec.model_def.drivers)
    return {k: v[0] for k, v in p.items()}


@dataclass(frozen=True)
class OuterResult:
    x_t: float
    estimate: InnerEstimate | None


def _representation(spec: NestedMCSpec, which: str, seed: int, threads: int,
                    tolerance: float | None) -> VerificationReport:
    if which not in ("g", "gamma"):
        raise ValueError("which must be 'g' or 'gamma'")
    model = spec.model_def
    k = spec.t_index

    def one(i: int) -> OuterResult:
        st = Streams(seed, i)
        pre = outer_prefix(spec, st, k)
        x_t = float(model.x({n: v[None, :] for n, v in pre.items()}, spec.delta)[0, -1])
        if abs(x_t) <= spec.min_level:
            return OuterResult(x_t, None)
        state = {n: float(v[-1]) for n, v in pre.items()}
        return OuterResult(x_t, inner_estimate(spec, state, st))

    results = map_ordered(one, range(spec.n_outer), threads)
    name = "representation_g" if which == "g" else "representation_gamma"
    if tolerance is None:
        tolerance = 0.07 if spec.model == "geometric_skew" and which == "g" else 0.05
    params = {"model": spec.model, "T": spec.T, "n_outer": spec.n_outer,
              "n_inner": spec.n_inner, "inner_steps": spec.inner_steps,
              "delta": spec.delta, "bridge_correction": spec.bridge_correction,
              "min_level": spec.min_level, "functional": spec.functional}
    rep = VerificationReport(name, spec.n_outer, spec.outer_grid, params, seed=seed)
    used = [r for r in results if r.estimate is not None]
    rep.checks.append(Check.info("excluded_outer", "outer paths with |X_T| <= min_level",
                                 spec.n_outer - len(used)))
    if not used:
        rep.inconclusive = True
        rep.notes.append("every outer path fell below min_level")
        return rep
    x_t = np.array([r.x_t for r in used])
    est = np.array([r.estimate.g_mean if which == "g" else r.estimate.gamma_mean for r in used])
    se = np.array([r.estimate.g_se if which == "g" else r.estimate.gamma_se for r in used])
    rel = np.abs(est - x_t) / np.abs(x_t)
    signed = (est - x_t) / np.abs(x_t)
    half = 1.96 * rel.std(ddof=1) / math.sqrt(rel.size) if rel.size > 1 else float("inf")
    rep.checks.append(Check.make("mean_relative_error", "mean |E_hat - X_T| / |X_T|",
                                 rel.mean(), tolerance))
    rep.checks.append(Check.info("mean_relative_error_ci", "95% half width", half))
    rep.checks.append(Check.info("mean_signed_relative_error", "mean (E_hat - X_T) / |X_T|",
                                 signed.mean()))
    rep.checks.append(Check.info("mean_inner_se_relative", "mean inner standard error / |X_T|",
                                 float(np.mean(se / np.abs(x_t)))))
    return rep


def representation_check_g(spec: NestedMCSpec, seed: int = 0, threads: int = 1,
                           tolerance: float | None = None) -> VerificationReport:
    """``X_T`` vs ``E[X_h 1{no X-zero after T}] + E[(v_T - v_{d_T}) 1{D-zero after T}]``."""
    return _representation(spec, "g", seed, threads, tolerance)


def representation_check_gamma(spec: NestedMCSpec, seed: int = 0, threads: int = 1,
                               tolerance: float | None = None) -> VerificationReport:
    """``X_T`` vs ``E[X_h 1{no D-zero after T}] + E[(A_T - A_{d'_T}) 1{X-zero after T}]``."""
    return _representation(spec, "gamma", seed, threads, tolerance)


# -- conditional tail of g_k after the last zero of D --------------------------

@dataclass(frozen=True)
class TailResult:
    prob: float
    prob_se: float
    bound: float
    realized: float


def conditional_tail_estimator(spec: NestedMCSpec, level: float, seed: int = 0,
                               threads: int = 1) -> VerificationReport:
    """Descriptive estimates of ``P[g_k - gamma > T | prefix]`` and ``1 ^ M/k``.

    ``M = |B|`` on the horizon, ``gamma`` its last zero on the outer path.  The
    prefix up to ``gamma + T`` includes the knowledge that no zero follows, so
    continuations are weighted by their bridge survival.  Nothing is asserted.
    """
    if spec.model != "reflected_bm":
        raise ValueError("the tail estimator is defined for the reflected_bm model")
    if not level > 0:
        raise ValueError("level must be positive")
    grid = spec.outer_grid
    shift = int(round(spec.T / grid.dt))
    dt_inner = grid.horizon / spec.inner_steps

    def one(i: int) -> TailResult | None:
        st = Streams(seed, i)
        b = outer_prefix(spec, st, grid.n_steps)["B"]
        zeros = np.flatnonzero(zero_mask(b, 0.0))
        gamma = int(zeros[-1]) if zeros.size else 0
        t_abs = gamma + shift
        if t_abs > grid.n_steps:
            return None
        m_path = np.abs(b)
        realized = float((m_path[t_abs + 1:] >= level).any()) if t_abs < grid.n_steps else 0.0
        m_t = float(m_path[t_abs])
        bound = min(1.0, m_t / level)
        remaining = grid.horizon - t_abs * grid.dt
        if remaining <= 0 or b[t_abs] == 0.0:
            return TailResult(0.0, 0.0, bound, realized)
        n = max(1, math.ceil(remaining / dt_inner))
        dt = remaining / n
        w_sum = hit_sum = sq = 0.0
        done, chunk_id = 0, 0
        parts = []
        while done < spec.n_inner:
            m = min(spec.chunk, spec.n_inner - done)
            p = _continue({"B": float(b[t_abs])}, m, n, dt, st("inner", chunk_id), ("B",))
            w = survival(p["B"], dt, spec.bridge_correction)[:, -1]
            hit = (np.abs(p["B"][:, 1:]) >= level).any(axis=1)
            parts.append((w, hit))
            w_sum += w.sum()
            hit_sum += (w * hit).sum()
            done += m
            chunk_id += 1
        if w_sum <= 0:
            return TailResult(0.0, 0.0, bound, realized)
        prob = hit_sum / w_sum
        for w, hit in parts:
            sq += float(np.sum((w * (hit - prob)) ** 2))
        return TailResult(prob, math.sqrt(sq) / w_sum, bound, realized)

    results = map_ordered(one, range(spec.n_outer), threads)
    used = [r for r in results if r is not None]
    params = {"model": spec.model, "T": spec.T, "level": level, "n_outer": spec.n_outer,
              "n_inner": spec.n_inner, "inner_steps": spec.inner_steps}
    rep = VerificationReport("conditional_tail", spec.n_outer, grid, params, seed=seed)
    rep.checks.append(Check.info("excluded_outer", "outer paths with gamma + T past the horizon",
                                 spec.n_outer - len(used)))
    if not used:
        rep.inconclusive = True
        rep.notes.append("gamma + T exceeds the horizon on every outer path")
        return rep
    sup_m = max(float(np.max(np.abs(outer_prefix(spec, Streams(seed, i), grid.n_steps)["B"])))
                for i in range(spec.n_outer))
    vacuous = level > sup_m
    if vacuous:
        rep.notes.append("level exceeds the supremum of M on every outer path")
    prob = np.array([r.prob for r in used])
    bound = np.array([r.bound for r in used])
    realized = np.array([r.realized for r in used])

    def ci(x):
        return 1.96 * x.std(ddof=1) / math.sqrt(x.size) if x.size > 1 else float("nan")

    rep.checks += [
        Check.info("vacuous", "level above every outer supremum", float(vacuous)),
        Check.info("mean_probability", "mean nested estimate of P[g_k - gamma > T]", prob.mean()),
        Check.info("mean_probability_ci", "95% half width", ci(prob)),
        Check.info("mean_bound", "mean 1 ^ M_{gamma+T} / k", bound.mean()),
        Check.info("mean_bound_ci", "95% half width", ci(bound)),
        Check.info("realized_frequency", "share of outer paths with g_k > gamma + T",
                   realized.mean()),
        Check.info("mean_inner_se", "mean inner standard error",
                   float(np.mean([r.prob_se for r in used]))),
    ]
    return rep
