"""Ensemble-level statistical checks.

Each check returns a :class:`VerificationReport` whose rows carry the value,
the tolerance it was compared with and the verdict.  Large ensembles are
reduced path by path: the ``*_path_stats`` helpers turn one path into a few
numbers and the ``*_from_*`` functions aggregate them, so callers never need
the full ``(N, n)`` array in memory.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .balayage import carrier_masses
from .constructors import Decomposition, ScalarFunction, f_of_A_transform
from .flips import PiecewiseAlpha
from .local_time import default_eps, occupation_time_values, occupation_values, tanaka_raw
from .paths import SamplePath, TimeGrid

SIGNIFICANCE = 0.01


@dataclass(frozen=True)
class Check:
    """One asserted or descriptive number.

    ``comparator`` is ``"<"`` (value below tolerance), ``"<="`` or ``"none"``
    for descriptive rows; ``passed`` is ``None`` for the latter.
    """

    name: str
    statistic: str
    value: float
    tolerance: float
    comparator: str = "<"
    passed: bool | None = None

    @classmethod
    def make(cls, name: str, statistic: str, value: float, tolerance: float,
             comparator: str = "<") -> "Check":
        value, tolerance = float(value), float(tolerance)
        if comparator == "<":
            ok = bool(value < tolerance)
        elif comparator == "<=":
            ok = bool(value <= tolerance)
        elif comparator == "none":
            ok = None
        else:
            raise ValueError(f"unknown comparator {comparator!r}")
        return cls(name, statistic, value, tolerance, comparator, ok)

    @classmethod
    def info(cls, name: str, statistic: str, value: float) -> "Check":
        return cls(name, statistic, float(value), float("nan"), "none", None)


@dataclass
class VerificationReport:
    check: str
    n_paths: int
    grid: TimeGrid | None
    parameters: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    seed: int | None = None
    inconclusive: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def asserted(self) -> list[Check]:
        return [c for c in self.checks if c.passed is not None]

    @property
    def passed(self) -> bool | None:
        """True/False over asserted rows; None when inconclusive or descriptive."""
        if self.inconclusive or not self.asserted:
            return None
        return all(c.passed for c in self.asserted)

    @property
    def status(self) -> str:
        if self.inconclusive:
            return "inconclusive"
        p = self.passed
        return "descriptive" if p is None else ("pass" if p else "fail")

    def value(self, name: str) -> float:
        for c in self.checks:
            if c.name == name:
                return c.value
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "status": self.status,
            "n_paths": self.n_paths,
            "grid": None if self.grid is None else asdict(self.grid),
            "parameters": self.parameters,
            "seed": self.seed,
            "notes": list(self.notes),
            "checks": [asdict(c) for c in self.checks],
        }


def _as_2d(ensemble) -> tuple[np.ndarray, TimeGrid | None]:
    if isinstance(ensemble, SamplePath):
        return ensemble.values[None, :], ensemble.grid
    if isinstance(ensemble, np.ndarray):
        arr = np.atleast_2d(np.asarray(ensemble, dtype=float))
        return arr, None
    paths = list(ensemble)
    if not paths:
        return np.zeros((0, 0)), None
    if isinstance(paths[0], SamplePath):
        return np.stack([p.values for p in paths]), paths[0].grid
    return np.atleast_2d(np.asarray(paths, dtype=float)), None


# -- martingale increments ----------------------------------------------------

def equal_windows(n_steps: int, n_windows: int = 8) -> list[tuple[int, int]]:
    """``n_windows`` consecutive index windows covering ``[0, n_steps]``."""
    n_windows = max(1, min(n_windows, n_steps))
    edges = np.linspace(0, n_steps, n_windows + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def window_sums(values: np.ndarray, windows: Sequence[tuple[int, int]],
                step_mask: np.ndarray | None = None) -> np.ndarray:
    """Sum of (masked) increments over each window; shape ``(..., W)``."""
    x = np.asarray(values, dtype=float)
    inc = np.diff(x, axis=-1)
    if step_mask is not None:
        inc = np.where(step_mask, inc, 0.0)
    out = np.empty(x.shape[:-1] + (len(windows),))
    for w, (a, b) in enumerate(windows):
        out[..., w] = inc[..., a:b].sum(axis=-1)
    return out


def window_counts(step_mask: np.ndarray | None, windows: Sequence[tuple[int, int]],
                  n_steps: int) -> np.ndarray:
    if step_mask is None:
        return np.array([b - a for a, b in windows], dtype=float)
    m = np.asarray(step_mask, dtype=float)
    return np.array([m[..., a:b].sum() for a, b in windows], dtype=float)


def bonferroni_critical(significance: float, n_tests: int) -> float:
    """Two-sided normal critical value at family-wise level ``significance``."""
    return float(stats.norm.ppf(1.0 - significance / (2.0 * max(1, n_tests))))


def z_scores(sums: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean window sum and its z-score against zero, per window."""
    s = np.atleast_2d(np.asarray(sums, dtype=float))
    n = s.shape[0]
    mean = s.mean(axis=0)
    sd = s.std(axis=0, ddof=1) if n > 1 else np.zeros(s.shape[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        z = mean / (sd / math.sqrt(n))
    z = np.where(sd > 0, z, np.where(mean != 0, np.inf, 0.0))
    return mean, z


def martingale_from_sums(sums: np.ndarray, *, name: str = "martingale_increment_test",
                         grid: TimeGrid | None = None, parameters: dict | None = None,
                         significance: float = SIGNIFICANCE, seed: int | None = None,
                         included_steps: float | None = None) -> VerificationReport:
    """z-test of zero mean window sums with Bonferroni correction over windows."""
    sums = np.asarray(sums, dtype=float)
    params = dict(parameters or {})
    n_paths = int(sums.shape[0]) if sums.ndim == 2 else 0
    rep = VerificationReport(name, n_paths, grid, params, seed=seed)
    if sums.ndim != 2 or sums.shape[1] == 0 or n_paths < 2 or included_steps == 0:
        rep.inconclusive = True
        rep.notes.append("empty window set or fewer than two paths")
        return rep
    mean, z = z_scores(sums)
    crit = bonferroni_critical(significance, sums.shape[1])
    zmax = float(np.max(np.abs(z)))
    params.update(significance=significance, n_windows=int(sums.shape[1]))
    rep.checks.append(Check.make("max_abs_z", "max |z| over windows", zmax, crit))
    rep.checks.append(Check.info("max_abs_mean", "max |mean window sum|",
                                 float(np.max(np.abs(mean)))))
    return rep


def martingale_increment_test(ensemble, windows: Sequence[tuple[int, int]] | None = None,
                              step_mask: np.ndarray | None = None,
                              significance: float = SIGNIFICANCE,
                              name: str = "martingale_increment_test",
                              seed: int | None = None) -> VerificationReport:
    """Do (masked) increments over each window average to zero?

    ``step_mask`` (same shape as the increments) keeps only the chosen steps;
    it should be predictable, e.g. ``|D_j| > band`` to avoid the carrier of
    ``dv``.
    """
    values, grid = _as_2d(ensemble)
    n_steps = values.shape[1] - 1 if values.size else 0
    if windows is None:
        windows = equal_windows(n_steps) if n_steps > 0 else []
    if not windows:
        return martingale_from_sums(np.zeros((values.shape[0], 0)), name=name, grid=grid,
                                    significance=significance, seed=seed)
    sums = window_sums(values, windows, step_mask)
    included = float(window_counts(step_mask, windows, n_steps).sum())
    return martingale_from_sums(sums, name=name, grid=grid, significance=significance,
                                seed=seed, included_steps=included,
                                parameters={"masked": step_mask is not None})


# -- Brownianity --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PathStats:
    qv: float
    increments: np.ndarray
    sums: np.ndarray


def brownian_path_stats(values: np.ndarray, dt: float,
                        windows: Sequence[tuple[int, int]]) -> PathStats:
    x = np.asarray(values, dtype=float)
    inc = np.diff(x)
    return PathStats(float(np.sum(inc * inc)), inc / math.sqrt(dt), window_sums(x, windows))


def brownianity_from_stats(path_stats: Sequence[PathStats], grid: TimeGrid, *,
                           name: str = "brownianity", qv_tol: float = 0.05,
                           ks_tol: float = 0.02, significance: float = SIGNIFICANCE,
                           parameters: dict | None = None,
                           seed: int | None = None) -> VerificationReport:
    """Terminal QV near the horizon, Gaussian increments, centred windows."""
    rep = VerificationReport(name, len(path_stats), grid, dict(parameters or {}), seed=seed)
    if not path_stats:
        rep.inconclusive = True
        rep.notes.append("empty ensemble")
        return rep
    qv = np.array([s.qv for s in path_stats])
    incs = np.concatenate([s.increments for s in path_stats])
    ks = float(stats.kstest(incs, "norm").statistic)
    rep.checks.append(Check.info("mean_qv", "mean terminal quadratic variation", qv.mean()))
    rep.checks.append(Check.make("qv_deviation", "|mean QV - horizon|",
                                 abs(qv.mean() - grid.horizon), qv_tol))
    rep.checks.append(Check.make("ks_increments", "KS distance to N(0,1)", ks, ks_tol))
    mart = martingale_from_sums(np.stack([s.sums for s in path_stats]), grid=grid,
                                significance=significance)
    if mart.inconclusive:
        rep.notes.append("martingale windows inconclusive")
    rep.checks.extend(mart.checks)
    return rep


def brownianity_test(ensemble, grid: TimeGrid | None = None, n_windows: int = 8,
                     **kw) -> VerificationReport:
    values, g = _as_2d(ensemble)
    grid = grid or g
    if grid is None:
        raise ValueError("grid is required for raw arrays")
    windows = equal_windows(grid.n_steps, n_windows)
    ps = [brownian_path_stats(row, grid.dt, windows) for row in values]
    return brownianity_from_stats(ps, grid, **kw)


def _pieces(alpha: float | PiecewiseAlpha) -> PiecewiseAlpha:
    return alpha if isinstance(alpha, PiecewiseAlpha) else PiecewiseAlpha.constant(alpha)


LOCAL_TIME_METHODS = ("tanaka", "occupation", "occupation_time")


def local_time_values(y: np.ndarray, grid: TimeGrid, method: str = "tanaka",
                      eps: float | None = None) -> np.ndarray:
    if method == "tanaka":
        return tanaka_raw(y)
    eps = default_eps(grid.dt) if eps is None else eps
    if method == "occupation":
        return occupation_values(y, eps)
    if method == "occupation_time":
        return occupation_time_values(y, eps, grid.dt)
    raise ValueError(f"unknown local time method {method!r}; known: {LOCAL_TIME_METHODS}")


def reconstruct_driver(y: np.ndarray, grid: TimeGrid, alpha: float | PiecewiseAlpha,
                       method: str = "tanaka", eps: float | None = None) -> np.ndarray:
    """``W = Y - int (2 alpha(s) - 1) dL(Y)``, by default with the discrete
    Tanaka local time."""
    y = np.asarray(y, dtype=float)
    lt = local_time_values(y, grid, method, eps)
    pieces = _pieces(alpha)
    if len(pieces) == 1:
        return y - (2.0 * pieces.values[0] - 1.0) * lt
    coef = 2.0 * pieces.alpha_at(grid.times[:-1]) - 1.0
    drift = np.zeros(y.shape)
    np.cumsum(coef * np.diff(lt, axis=-1), axis=-1, out=drift[..., 1:])
    return y - drift


def sde_residual_skew(ensemble, alpha: float | PiecewiseAlpha, grid: TimeGrid | None = None,
                      **kw) -> VerificationReport:
    """Brownianity of the driver reconstructed from a skew solution."""
    values, g = _as_2d(ensemble)
    grid = grid or g
    if grid is None:
        raise ValueError("grid is required for raw arrays")
    w = reconstruct_driver(values, grid, alpha)
    kw.setdefault("name", "sde_residual_skew")
    params = kw.pop("parameters", {}) or {}
    params = {**params, "alpha": _alpha_repr(alpha)}
    rep = brownianity_test(w, grid, parameters=params, **kw)
    windows = equal_windows(grid.n_steps, kw.get("n_windows", 8))
    alt = window_sums(reconstruct_driver(values, grid, alpha, "occupation_time"), windows)
    add_driver_diagnostic(rep, alt)
    return rep


def add_driver_diagnostic(rep: VerificationReport, sums: np.ndarray) -> None:
    """Descriptive max |z| of a driver rebuilt with the occupation-time local
    time, which unlike discrete Tanaka stays consistent on skew paths."""
    _, z = z_scores(sums)
    rep.checks.append(Check.info("max_abs_z_occupation_time",
                                 "max |z| with occupation-time local time",
                                 float(np.max(np.abs(z)))))


def _alpha_repr(alpha):
    p = _pieces(alpha)
    return p.values[0] if len(p) == 1 else [list(p.breakpoints), list(p.values)]


# -- sign occupation ----------------------------------------------------------

def sign_counts(values: np.ndarray, probe_idx: Sequence[int],
                zero_tol: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Positive and non-zero counts at the probe indices over the ensemble."""
    v = np.atleast_2d(np.asarray(values, dtype=float))[:, list(probe_idx)]
    nonzero = np.abs(v) > zero_tol
    return (v > zero_tol).sum(axis=0), nonzero.sum(axis=0)


def occupation_from_counts(positive: np.ndarray, nonzero: np.ndarray,
                           alpha: float | PiecewiseAlpha, probe_times: Sequence[float],
                           grid: TimeGrid, *, n_paths: int, n_sigma: float = 3.0,
                           min_samples: int = 30, seed: int | None = None,
                           name: str = "occupation_fraction_test") -> VerificationReport:
    """Empirical ``P(Y_t > 0 | Y_t != 0)`` against ``alpha(t)`` in binomial bands."""
    pieces = _pieces(alpha)
    rep = VerificationReport(name, n_paths, grid,
                             {"alpha": _alpha_repr(alpha), "probe_times": list(probe_times),
                              "n_sigma": n_sigma}, seed=seed)
    for t, pos, nz in zip(probe_times, positive, nonzero):
        a = float(pieces.alpha_at(t))
        if nz < min_samples:
            rep.inconclusive = True
            rep.notes.append(f"only {int(nz)} non-zero samples at t={t}")
            continue
        p = pos / nz
        sigma = math.sqrt(a * (1.0 - a) / nz)
        rep.checks.append(Check.info(f"fraction_t{t:g}", f"P(Y>0) at t={t:g}", p))
        # degenerate alpha has zero binomial width: demand the exact value
        band = n_sigma * sigma if sigma > 0 else 1e-12
        rep.checks.append(Check.make(f"deviation_t{t:g}", f"|fraction - {a:g}|",
                                     abs(p - a), band, "<="))
    return rep


def occupation_fraction_test(ensemble, alpha: float | PiecewiseAlpha,
                             probe_times: Sequence[float], grid: TimeGrid | None = None,
                             zero_tol: float = 0.0, **kw) -> VerificationReport:
    values, g = _as_2d(ensemble)
    grid = grid or g
    if grid is None:
        raise ValueError("grid is required for raw arrays")
    if any(not 0.0 < t < grid.horizon for t in probe_times):
        raise ValueError("probe times must lie strictly inside the horizon")
    idx = [grid.index_of(t) for t in probe_times]
    pos, nz = sign_counts(values, idx, zero_tol)
    return occupation_from_counts(pos, nz, alpha, probe_times, grid,
                                  n_paths=values.shape[0], **kw)


# -- local time ---------------------------------------------------------------

def local_time_path_stats(values: np.ndarray, dt: float,
                          eps: float | None = None) -> tuple[float, float]:
    """Terminal Tanaka and occupation estimates for one path."""
    eps = default_eps(dt) if eps is None else eps
    return float(tanaka_raw(values)[-1]), float(occupation_values(values, eps)[-1])


def local_time_report(tanaka_terminal: np.ndarray, occupation_terminal: np.ndarray,
                      grid: TimeGrid, *, eps: float | None = None, mean_tol: float = 0.03,
                      gap_tol: float = 0.10, seed: int | None = None,
                      name: str = "local_time") -> VerificationReport:
    """Brownian cross-check: ``E L_T = sqrt(2T/pi)`` and Tanaka vs occupation."""
    lt = np.asarray(tanaka_terminal, dtype=float)
    lo = np.asarray(occupation_terminal, dtype=float)
    eps = default_eps(grid.dt) if eps is None else eps
    rep = VerificationReport(name, int(lt.size), grid, {"eps": eps}, seed=seed)
    target = math.sqrt(2.0 * grid.horizon / math.pi)
    rep.checks.append(Check.info("mean_tanaka", "mean terminal Tanaka local time", lt.mean()))
    rep.checks.append(Check.make("mean_deviation", "|mean L - sqrt(2T/pi)|",
                                 abs(lt.mean() - target), mean_tol))
    rel = (lo - lt) / np.maximum(lt, 0.1)
    rep.checks.append(Check.make("median_gap", "median |L_occ - L_tan| / max(L_tan, 0.1)",
                                 float(np.median(np.abs(rel))), gap_tol))
    rep.checks.append(Check.info("median_signed_gap", "median (L_occ - L_tan) / max(L_tan, 0.1)",
                                 float(np.median(rel))))
    return rep


# -- carrier conditions -------------------------------------------------------

def carrier_report(masses: dict[str, Iterable[tuple[float, float]]], grid: TimeGrid, *,
                   band: float | None = None, threshold: float = 0.02,
                   seed: int | None = None, n_paths: int | None = None,
                   name: str = "carrier_conditions") -> VerificationReport:
    """Pooled fraction of finite-variation mass off its carrier, per part.

    ``masses[label]`` lists ``(total, outside)`` per path.
    """
    band = math.sqrt(grid.dt) if band is None else band
    rep = VerificationReport(name, 0, grid, {"band": band, "threshold": threshold}, seed=seed)
    for label, pairs in masses.items():
        arr = np.asarray(list(pairs), dtype=float).reshape(-1, 2)
        rep.n_paths = max(rep.n_paths, arr.shape[0])
        total, outside = arr[:, 0].sum(), arr[:, 1].sum()
        frac = outside / total if total > 0 else 0.0
        rep.checks.append(Check.make(f"fraction_outside_{label}",
                                     f"share of |d{label}| off its carrier", frac, threshold))
    if n_paths is not None:
        rep.n_paths = n_paths
    return rep


def decomposition_masses(dec: Decomposition, band: float) -> dict[str, tuple[float, float]]:
    out = {"a": carrier_masses(dec.a.values, dec.zero_source.values, band)}
    if dec.v_carrier is not None:
        out["v"] = carrier_masses(dec.v.values, dec.v_carrier.values, band)
    return out


# -- characterization martingale ----------------------------------------------

def characterization_sums(dec: Decomposition, f: ScalarFunction,
                          windows: Sequence[tuple[int, int]], band: float | None = None,
                          restrict: bool = True) -> tuple[np.ndarray, float]:
    """Window sums of the companion ``f(A)X - F(A)`` for one path and the
    number of steps kept."""
    _, comp = f_of_A_transform(dec, f)
    mask = None
    if restrict:
        carrier = dec.v_carrier if dec.v_carrier is not None else dec.zero_source
        b = math.sqrt(dec.grid.dt) if band is None else band
        mask = np.abs(carrier.values[:-1]) > b
    kept = float(window_counts(mask, windows, dec.grid.n_steps).sum())
    return window_sums(comp.values, windows, mask), kept


def characterization_martingale_test(decs: Iterable[Decomposition], f: ScalarFunction, *,
                                     n_windows: int = 8, band: float | None = None,
                                     restrict: bool = True,
                                     significance: float = SIGNIFICANCE,
                                     seed: int | None = None) -> VerificationReport:
    """Martingale test of ``f(A)X - F(A)`` over an ensemble of decompositions.

    ``decs`` may be a generator; only window sums are kept.
    """
    sums, kept, grid = [], 0.0, None
    windows = None
    for dec in decs:
        if windows is None:
            grid = dec.grid
            windows = equal_windows(grid.n_steps, n_windows)
        s, k = characterization_sums(dec, f, windows, band, restrict)
        sums.append(s)
        kept += k
    arr = np.stack(sums) if sums else np.zeros((0, 0))
    return martingale_from_sums(arr, name="characterization_martingale", grid=grid,
                                significance=significance, seed=seed, included_steps=kept,
                                parameters={"function": f.name, "restricted": restrict})
