"""Experiment configs and the registry behind the command line.

An experiment maps an :class:`ExperimentConfig` to a list of
:class:`VerificationReport` objects.  Ensembles are reduced path by path
through :func:`skewflip.parallel.map_ordered`; path ``i`` draws only from
``Streams(seed, i)`` so the thread count cannot change any number.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Callable

import numpy as np

from . import __version__
from .balayage import carrier_masses
from .constructors import (abs_of, build_skew_delta, companion_W_from_abs,
                           geometric_skew_bm, make_function, martingale_decomposition,
                           skew_solution_delta, skew_solution_delta_inhom,
                           skew_solution_general, skew_solution_general_inhom)
from .flips import (PiecewiseAlpha, assign_signs, assign_signs_inhom, grid_flip_values,
                    k_inhom_values, k_values, z_inhom_values, z_values)
from .local_time import default_eps, tanaka_raw
from .nested import (MODELS, NestedMCSpec, conditional_tail_estimator,
                     representation_check_g, representation_check_gamma)
from .parallel import map_ordered
from .paths import (NonFiniteError, SamplePath, TimeGrid, default_zero_tol, detect_excursions,
                    simulate_brownian)
from .rng import Streams
from .verification import (Check, VerificationReport, add_driver_diagnostic,
                           brownian_path_stats,
                           brownianity_from_stats, carrier_report, characterization_sums,
                           equal_windows, local_time_path_stats, local_time_report,
                           martingale_from_sums, occupation_from_counts, reconstruct_driver,
                           sign_counts, window_sums)


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending field when known."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        super().__init__(message)
        self.key = key
        self.line = line


_AUTO = "auto"


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n_paths: int = 1000
    n_steps: int = 1024
    horizon: float = 1.0
    alpha: float = 0.7
    pieces: tuple | None = None
    delta: float = 0.6
    k_alpha: float = 1.0
    seed: int = 0
    zero_tol: Any = _AUTO
    eps: Any = _AUTO
    band: Any = _AUTO
    probe_times: tuple = (0.25, 0.5, 0.75)
    n_windows: int = 8
    significance: float = 0.01
    function: str = "linear"
    function_params: dict = field(default_factory=lambda: {"c": 2.0})
    model: str | None = None
    T: float = 0.5
    n_outer: int = 200
    n_inner: int = 10_000
    inner_steps: int = 64
    outer_steps: int = 512
    bridge_correction: bool = True
    min_level: float = 0.1
    level: float = 1.0
    calibration_seeds: int = 20
    output_dir: str = "out"
    dump_paths: bool = False

    def __post_init__(self):
        _validate(self)

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.horizon, self.n_steps)

    @property
    def alpha_schedule(self) -> PiecewiseAlpha:
        if self.pieces is None:
            return PiecewiseAlpha.constant(self.alpha)
        return PiecewiseAlpha.from_pairs(self.pieces)

    def resolved_zero_tol(self) -> float | None:
        return None if self.zero_tol == _AUTO else float(self.zero_tol)

    def resolved_eps(self) -> float:
        return default_eps(self.grid.dt) if self.eps == _AUTO else float(self.eps)

    def resolved_band(self) -> float:
        return math.sqrt(self.grid.dt) if self.band == _AUTO else float(self.band)

    def nested_spec(self, default_model: str) -> NestedMCSpec:
        return NestedMCSpec(self.n_outer, self.n_inner, self.T, "terminal",
                            self.model or default_model, self.horizon, self.outer_steps,
                            self.inner_steps, self.delta, self.bridge_correction,
                            self.min_level)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["probe_times"] = list(self.probe_times)
        d["pieces"] = None if self.pieces is None else [list(p) for p in self.pieces]
        return d


_INT = ("n_paths", "n_steps", "seed", "n_windows", "n_outer", "n_inner", "inner_steps",
        "outer_steps", "calibration_seeds")
_FLOAT = ("horizon", "alpha", "delta", "k_alpha", "significance", "T", "min_level", "level")
_BOOL = ("bridge_correction", "dump_paths")


def _is_int(v) -> bool:
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)


def _validate(c: ExperimentConfig) -> None:
    def fail(key, msg):
        raise ConfigError(f"{key}: {msg}", key)

    if c.experiment not in REGISTRY:
        fail("experiment", f"unknown experiment {c.experiment!r}; see `list`")
    for k in _INT:
        if not _is_int(getattr(c, k)):
            fail(k, "must be an integer")
    for k in _FLOAT:
        if not _is_num(getattr(c, k)) or not math.isfinite(getattr(c, k)):
            fail(k, "must be a finite number")
    for k in _BOOL:
        if not isinstance(getattr(c, k), bool):
            fail(k, "must be true or false")
    if c.n_paths < 1:
        fail("n_paths", "must be >= 1")
    if c.n_steps < 2:
        fail("n_steps", "must be >= 2")
    if c.horizon <= 0:
        fail("horizon", "must be positive")
    if not 0 <= c.alpha <= 1:
        fail("alpha", "must lie in [0, 1]")
    if not 0 <= c.k_alpha <= 1:
        fail("k_alpha", "must lie in [0, 1]")
    if not -1 <= c.delta <= 1:
        fail("delta", "|delta| must be <= 1")
    if c.seed < 0:
        fail("seed", "must be >= 0")
    if c.pieces is not None:
        try:
            p = PiecewiseAlpha.from_pairs(c.pieces)
            p.check_horizon(c.horizon)
        except (ValueError, TypeError, IndexError) as exc:
            fail("pieces", f"invalid schedule ({exc})")
    for k, positive in (("zero_tol", False), ("eps", True), ("band", False)):
        v = getattr(c, k)
        if v != _AUTO and not (_is_num(v) and (v > 0 if positive else v >= 0)):
            fail(k, f"must be \"auto\" or a {'positive' if positive else 'non-negative'} number")
    if not c.probe_times or any(not _is_num(t) or not 0 < t < c.horizon for t in c.probe_times):
        fail("probe_times", "need probe times strictly inside the horizon")
    if c.n_windows < 1:
        fail("n_windows", "must be >= 1")
    if not 0 < c.significance < 1:
        fail("significance", "must lie in (0, 1)")
    try:
        make_function(c.function, **c.function_params)
    except (ValueError, TypeError, KeyError) as exc:
        fail("function", str(exc))
    if c.model is not None and c.model not in MODELS:
        fail("model", f"unknown model; known: {sorted(MODELS)}")
    if not 0 <= c.T < c.horizon:
        fail("T", "must lie in [0, horizon)")
    for k in ("n_outer", "n_inner", "inner_steps", "outer_steps", "calibration_seeds"):
        if getattr(c, k) < 1:
            fail(k, "must be >= 1")
    if c.min_level < 0:
        fail("min_level", "must be >= 0")
    if c.level <= 0:
        fail("level", "must be positive")
    if not isinstance(c.output_dir, str) or not c.output_dir:
        fail("output_dir", "must be a non-empty string")


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{key}: unknown key", key)
    if "experiment" not in data:
        raise ConfigError("experiment: missing required key", "experiment")
    kw = dict(data)
    if "probe_times" in kw and isinstance(kw["probe_times"], list):
        kw["probe_times"] = tuple(kw["probe_times"])
    if kw.get("pieces") is not None:
        if not isinstance(kw["pieces"], list):
            raise ConfigError("pieces: must be a list of [time, alpha] pairs", "pieces")
        kw["pieces"] = tuple(tuple(p) if isinstance(p, list) else p for p in kw["pieces"])
    if "function_params" in kw and not isinstance(kw["function_params"], dict):
        raise ConfigError("function_params: must be an object", "function_params")
    try:
        return ExperimentConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _key_line(text: str, key: str | None) -> int:
    if key:
        for n, line in enumerate(text.splitlines(), 1):
            if f'"{key}"' in line:
                return n
    return 1


def load_config(path: str) -> ExperimentConfig:
    """Parse a flat JSON config; errors carry the line of the offending key."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg}", line=exc.lineno) from exc
    try:
        return config_from_dict(data)
    except ConfigError as exc:
        exc.line = _key_line(text, exc.key)
        raise


# -- per-path builders ----------------------------------------------------------

def _guarded(fn: Callable[[int], Any]) -> Callable[[int], Any]:
    def run(i: int):
        try:
            return fn(i)
        except NonFiniteError as exc:
            raise NonFiniteError(str(exc), i) from exc
        except FloatingPointError as exc:
            raise NonFiniteError(str(exc), i) from exc
    return run


def _drivers(cfg: ExperimentConfig, i: int) -> tuple[Streams, SamplePath, SamplePath]:
    st = Streams(cfg.seed, i)
    return st, simulate_brownian(cfg.grid, st("B")), simulate_brownian(cfg.grid, st("W"), role="W")


def build_paths(cfg: ExperimentConfig, i: int) -> dict[str, SamplePath]:
    """Role-tagged paths of ensemble member ``i`` (also used for dumps)."""
    st, b, w = _drivers(cfg, i)
    e = cfg.experiment
    if e in ("skew_homogeneous", "skew_inhomogeneous"):
        if e == "skew_homogeneous":
            y = skew_solution_delta(b, w, cfg.delta, cfg.alpha, st, cfg.k_alpha,
                                    cfg.resolved_zero_tol())
        else:
            y = skew_solution_delta_inhom(b, w, cfg.delta, cfg.alpha_schedule, st, cfg.k_alpha,
                                          cfg.resolved_zero_tol())
        return {"B": b, "W": w, "Y": y}
    if e in ("skew_general", "skew_general_inhomogeneous"):
        x = abs_of(martingale_decomposition(b, b))
        if e == "skew_general":
            y = skew_solution_general(x, b, cfg.alpha, st, cfg.k_alpha)
        else:
            y = skew_solution_general_inhom(x, b, cfg.alpha_schedule, st, cfg.k_alpha)
        return {"B": b, "X": x.x, "Y": y}
    if e == "carrier_conditions":
        d = geometric_skew_bm(b, w, cfg.delta)
        a = abs_of(d)
        return {"B": b, "W": w, "X_delta": d.x, "v": d.v, "abs_X_delta": a.x, "A": a.a}
    if e == "companion_w":
        x = b.derive(np.abs(b.values), "abs_B")
        return {"B": b, "abs_B": x, "W": companion_W_from_abs(x, st("zeta_half"))}
    if e == "characterization_martingale":
        dec = abs_of(martingale_decomposition(b, b))
        return {"B": b, "X": dec.x, "A": dec.a}
    return {"B": b}


def _ensemble(cfg: ExperimentConfig, fn: Callable[[int], Any], threads: int, n: int | None = None):
    return map_ordered(_guarded(fn), range(cfg.n_paths if n is None else n), threads)


def _stamp(rep: VerificationReport, cfg: ExperimentConfig) -> VerificationReport:
    rep.seed = cfg.seed
    return rep


# -- experiments ----------------------------------------------------------------

def exp_brownian(cfg: ExperimentConfig, threads: int) -> list[VerificationReport]:
    grid = cfg.grid
    windows = equal_windows(grid.n_steps, cfg.n_windows)
    ps = _ensemble(cfg, lambda i: brownian_path_stats(_drivers(cfg, i)[1].values, grid.dt,
                                                      windows), threads)
    return [_stamp(brownianity_from_stats(ps, grid, significance=cfg.significance), cfg)]


def _skew_reports(cfg: ExperimentConfig, threads: int) -> list[VerificationReport]:
    grid = cfg.grid
    windows = equal_windows(grid.n_steps, cfg.n_windows)
    probes = [grid.index_of(t) for t in cfg.probe_times]
    schedule = cfg.alpha_schedule if cfg.pieces is not None else cfg.alpha

    def one(i):
        y = build_paths(cfg, i)["Y"]
        pos, nz = sign_counts(y.values, probes)
        w_hat = reconstruct_driver(y.values, grid, schedule)
        alt = window_sums(reconstruct_driver(y.values, grid, schedule, "occupation_time"),
                          windows)
        trunc = bool(y.meta.get("truncated", False))
        return pos, nz, brownian_path_stats(w_hat, grid.dt, windows), trunc, alt

    out = _ensemble(cfg, one, threads)
    pos = np.sum([o[0] for o in out], axis=0)
    nz = np.sum([o[1] for o in out], axis=0)
    occ = occupation_from_counts(pos, nz, schedule, cfg.probe_times, grid, n_paths=cfg.n_paths)
    params = {"alpha": occ.parameters["alpha"], "delta": cfg.delta, "k_alpha": cfg.k_alpha}
    sde = brownianity_from_stats([o[2] for o in out], grid, name="sde_residual_skew",
                                 significance=cfg.significance, parameters=params)
    add_driver_diagnostic(sde, np.stack([o[4] for o in out]))
    occ.parameters.update(delta=cfg.delta, k_alpha=cfg.k_alpha)
    if cfg.experiment.startswith("skew_general"):
        share = float(np.mean([o[3] for o in out]))
        sde.checks.append(Check.info("truncated_share", "paths with terminal QV < horizon", share))
    return [_stamp(occ, cfg), _stamp(sde, cfg)]


def exp_representation_g(cfg, threads):
    return [representation_check_g(cfg.nested_spec("reflected_bm"), cfg.seed, threads)]


def exp_representation_gamma(cfg, threads):
    return [representation_check_gamma(cfg.nested_spec("driver"), cfg.seed, threads)]


def exp_conditional_tail(cfg, threads):
    return [conditional_tail_estimator(cfg.nested_spec("reflected_bm"), cfg.level, cfg.seed,
                                       threads)]


def exp_carrier(cfg: ExperimentConfig, threads: int) -> list[VerificationReport]:
    band = cfg.resolved_band()

    def one(i):
        st, b, w = _drivers(cfg, i)
        d = geometric_skew_bm(b, w, cfg.delta)
        a = abs_of(d)
        return (carrier_masses(d.v.values, w.values, band),
                carrier_masses(a.a.values, a.zero_source.values, band),
                carrier_masses(a.v.values, w.values, band),
                max(d.identity_gap(), a.identity_gap()))

    out = _ensemble(cfg, one, threads)
    rep = carrier_report({"v": [o[0] for o in out], "A": [o[1] for o in out],
                          "v_abs": [o[2] for o in out]}, cfg.grid, band=band,
                         n_paths=cfg.n_paths)
    rep.parameters["delta"] = cfg.delta
    rep.checks.append(Check.make("identity_gap", "max relative |x - x0 - m - v - a|",
                                 max(o[3] for o in out), 1e-9))
    return [_stamp(rep, cfg)]


def exp_local_time(cfg: ExperimentConfig, threads: int) -> list[VerificationReport]:
    eps = cfg.resolved_eps()
    out = _ensemble(cfg, lambda i: local_time_path_stats(_drivers(cfg, i)[1].values,
                                                         cfg.grid.dt, eps), threads)
    arr = np.array(out)
    return [_stamp(local_time_report(arr[:, 0], arr[:, 1], cfg.grid, eps=eps), cfg)]


def exp_characterization(cfg: ExperimentConfig, threads: int) -> list[VerificationReport]:
    f = make_function(cfg.function, **cfg.function_params)
    windows = equal_windows(cfg.grid.n_steps, cfg.n_windows)
    band = cfg.resolved_band()

    def one(i):
        b = _drivers(cfg, i)[1]
        return characterization_sums(abs_of(martingale_decomposition(b, b)), f, windows, band)

    out = _ensemble(cfg, one, threads)
    rep = martingale_from_sums(np.stack([o[0] for o in out]), name="characterization_martingale",
                               grid=cfg.grid, significance=cfg.significance,
                               included_steps=sum(o[1] for o in out),
                               parameters={"function": f.name, "restricted": True,
                                           "band": band})
    return [_stamp(rep, cfg)]


def exp_companion_w(cfg: ExperimentConfig, threads: int) -> list[VerificationReport]:
    grid = cfg.grid
    windows = equal_windows(grid.n_steps, cfg.n_windows)
    band = cfg.resolved_band()

    def one(i):
        p = build_paths(cfg, i)
        gap = float(np.max(np.abs(np.abs(p["W"].values) - p["abs_B"].values)))
        mask = np.abs(p["B"].values[:-1]) > band
        return gap, window_sums(p["W"].values, windows, mask)

    out = _ensemble(cfg, one, threads)
    gaps = np.array([o[0] for o in out]) / math.sqrt(grid.dt)
    rep = VerificationReport("companion_w", cfg.n_paths, grid, {"band": band}, seed=cfg.seed)
    rep.checks.append(Check.info("median_sup_gap", "median sup||W| - X| / sqrt(dt)",
                                 float(np.median(gaps))))
    rep.checks.append(Check.make("share_within_5sqrt_dt", "1 - share of paths with gap < 5 sqrt(dt)",
                                 1.0 - float(np.mean(gaps < 5.0)), 0.05, "<="))
    mart = martingale_from_sums(np.stack([o[1] for o in out]), grid=grid,
                                significance=cfg.significance)
    rep.checks.extend(mart.checks)
    return [rep]


def ground_truth_suite(cfg: ExperimentConfig, seed: int, threads: int) -> list[VerificationReport]:
    """Brownian inputs through every statistical test of the suite."""
    grid = cfg.grid
    windows = equal_windows(grid.n_steps, cfg.n_windows)
    probes = [grid.index_of(t) for t in cfg.probe_times]
    band = cfg.resolved_band()
    lin = make_function("constant", c=1.0)

    def one(i):
        b = simulate_brownian(grid, Streams(seed, i)("B"))
        ps = brownian_path_stats(b.values, grid.dt, windows)
        pos, nz = sign_counts(b.values, probes)
        cs, kept = characterization_sums(abs_of(martingale_decomposition(b, b)), lin, windows,
                                         band, restrict=False)
        return ps, pos, nz, cs, float(tanaka_terminal(b.values))

    out = map_ordered(_guarded(one), range(cfg.n_paths), threads)
    reps = [brownianity_from_stats([o[0] for o in out], grid, significance=cfg.significance,
                                   name="ground_truth_brownianity")]
    reps.append(occupation_from_counts(np.sum([o[1] for o in out], axis=0),
                                       np.sum([o[2] for o in out], axis=0), 0.5,
                                       cfg.probe_times, grid, n_paths=cfg.n_paths,
                                       name="ground_truth_occupation"))
    reps.append(martingale_from_sums(np.stack([o[3] for o in out]), grid=grid,
                                     significance=cfg.significance,
                                     name="ground_truth_tanaka_martingale"))
    lt = np.array([o[4] for o in out])
    lt_rep = VerificationReport("ground_truth_local_time_mean", cfg.n_paths, grid)
    target = math.sqrt(2.0 * grid.horizon / math.pi)
    lt_rep.checks.append(Check.make("mean_deviation", "|mean L - sqrt(2T/pi)|",
                                    abs(lt.mean() - target), 0.03))
    reps.append(lt_rep)
    for r in reps:
        r.seed = seed
    return reps


def tanaka_terminal(values: np.ndarray) -> float:
    return float(tanaka_raw(values)[-1])


def calibration_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence((seed, k)).generate_state(1)[0])


def exp_calibration(cfg: ExperimentConfig, threads: int) -> list[VerificationReport]:
    outcomes = []
    failing = []
    for k in range(cfg.calibration_seeds):
        reps = ground_truth_suite(cfg, calibration_seed(cfg.seed, k), threads)
        ok = all(r.passed for r in reps)
        outcomes.append(ok)
        if not ok:
            failing.append([r.check for r in reps if not r.passed])
    frac = float(np.mean(outcomes))
    rep = VerificationReport("calibration", cfg.n_paths, cfg.grid,
                             {"calibration_seeds": cfg.calibration_seeds,
                              "significance": cfg.significance}, seed=cfg.seed)
    rep.checks.append(Check.info("pass_fraction", "share of seeds passing the suite", frac))
    rep.checks.append(Check.make("failure_fraction", "1 - pass fraction", 1.0 - frac, 0.05, "<="))
    rep.notes += [f"failing seed checks: {f}" for f in failing]
    return [rep]


# -- reductions -----------------------------------------------------------------

def reduction_mismatches(cfg: ExperimentConfig, i: int) -> dict[str, int]:
    """Counts of grid points where a reduction fails to hold bit for bit."""
    st, b, w = _drivers(cfg, i)
    grid = cfg.grid
    a = cfg.alpha
    out = {}
    # delta = 0: X^0 = B and the skew build is the classic flip of |B|
    d0 = geometric_skew_bm(b, w, 0.0)
    out["delta0_x_equals_b"] = int(np.sum(d0.x.values != b.values))
    out["delta0_v_zero"] = int(np.sum(d0.v.values != 0.0))
    y = skew_solution_delta(b, w, 0.0, a, st)
    exc = detect_excursions(b, default_zero_tol(b.values, grid.dt))
    classic = grid_flip_values(exc, assign_signs(exc, a, st("zeta", 0)).marks) * np.abs(b.values)
    out["delta0_classic_flip"] = int(np.sum(y.values != classic))
    y1 = skew_solution_delta(b, w, 0.0, 1.0, st)
    out["alpha1_delta0_reflected"] = int(np.sum(y1.values != np.abs(b.values)))
    # one-piece schedules equal the homogeneous builds
    one = PiecewiseAlpha.constant(a)
    yd = skew_solution_delta(b, w, cfg.delta, a, st)
    out["single_piece_delta"] = int(np.sum(
        skew_solution_delta_inhom(b, w, cfg.delta, one, st).values != yd.values))
    x = abs_of(martingale_decomposition(b, b))
    out["single_piece_general"] = int(np.sum(
        skew_solution_general_inhom(x, b, one, st).values
        != skew_solution_general(x, b, a, st).values))
    # alpha = 1/2: the driver is Y itself and |Y| is the transform off zeros
    half = build_skew_delta(b, w, cfg.delta, PiecewiseAlpha.constant(0.5), st)
    out["half_driver_is_y"] = int(np.sum(reconstruct_driver(half.y.values, grid, 0.5)
                                         != half.y.values))
    out["half_abs_is_transform"] = int(np.sum(np.abs(half.y.values) != half.transform.values))
    # no extra breakpoints: piecewise Z, k equal homogeneous Z, k
    e = detect_excursions(b, 0.0)
    s = assign_signs(e, a, st("zeta", 0))
    inh = assign_signs_inhom(e, one, [st("zeta", 0)])
    out["single_piece_z"] = int(np.sum(z_inhom_values(e, inh, grid) != z_values(e, s.marks)))
    out["single_piece_k"] = int(np.sum(k_inhom_values(e, inh, grid) != k_values(e, s.marks)))
    return out


def exp_reductions(cfg: ExperimentConfig, threads: int) -> list[VerificationReport]:
    out = _ensemble(cfg, lambda i: reduction_mismatches(cfg, i), threads)
    rep = VerificationReport("reductions", cfg.n_paths, cfg.grid,
                             {"alpha": cfg.alpha, "delta": cfg.delta}, seed=cfg.seed)
    for key in out[0]:
        rep.checks.append(Check.make(key, "mismatching grid points", sum(o[key] for o in out),
                                     0.0, "<="))
    return [rep]


# -- acceptance composite -------------------------------------------------------

ACCEPTANCE_SIZES = {
    1: dict(experiment="skew_homogeneous", alpha=0.7, delta=0.6, n_paths=2000, n_steps=4096),
    3: dict(experiment="representation_g", model="reflected_bm", T=0.5, n_outer=200,
            n_inner=10_000, min_level=0.1),
    4: dict(experiment="carrier_conditions", delta=0.6, n_paths=1000, n_steps=4096),
    5: dict(experiment="local_time", n_paths=10_000, n_steps=4096),
    6: dict(experiment="characterization_martingale", function="linear",
            function_params={"c": 2.0}, n_paths=10_000, n_steps=1024),
    7: dict(experiment="reductions", alpha=0.7, delta=0.6, n_paths=50, n_steps=1024),
    9: dict(experiment="calibration", n_paths=10_000, n_steps=1024, calibration_seeds=20),
}


# criteria that assert fewer rows than the experiment they reuse
CRITERION_ROWS = {2: ("qv_deviation", "ks_increments")}


def _restrict(rep: VerificationReport, keep: tuple[str, ...]) -> None:
    demoted = [c.name for c in rep.checks if c.comparator != "none" and c.name not in keep]
    rep.checks = [c if c.name in keep or c.comparator == "none"
                  else Check.info(c.name, c.statistic, c.value) for c in rep.checks]
    if demoted:
        rep.notes.append("reported, not asserted here: " + ", ".join(demoted))


def exp_acceptance(cfg: ExperimentConfig, threads: int) -> list[VerificationReport]:
    """Criteria 1-7 and 9 at their fixed sizes; only ``seed`` is taken from ``cfg``.

    Criteria 1 and 2 share one ensemble; criterion 8 compares whole runs and
    lives outside a single run.  Criterion 2 asserts QV and KS only, so the
    driver's window martingale rows are kept as descriptive rows there.
    """
    reps = []
    for crit, over in ACCEPTANCE_SIZES.items():
        sub = replace(cfg, **{k: v for k, v in over.items()})
        got = REGISTRY[sub.experiment].run(sub, threads)
        for r in got:
            c = crit
            if crit == 1 and r.check == "sde_residual_skew":
                c = 2
            r.parameters["criterion"] = c
            if c in CRITERION_ROWS:
                _restrict(r, CRITERION_ROWS[c])
            r.check = f"criterion_{c}:{r.check}"
        reps.extend(got)
    reps.sort(key=lambda r: r.parameters["criterion"])
    return reps


@dataclass(frozen=True)
class Experiment:
    name: str
    anchor: str
    run: Callable[[ExperimentConfig, int], list[VerificationReport]]
    ensemble: bool = True


REGISTRY: dict[str, Experiment] = {e.name: e for e in [
    Experiment("brownian_smoke", "calibration case", exp_brownian),
    Experiment("skew_homogeneous", "Prop. 5.1", _skew_reports),
    Experiment("skew_inhomogeneous", "Prop. 5.2", _skew_reports),
    Experiment("skew_general", "Prop. 5.3", _skew_reports),
    Experiment("skew_general_inhomogeneous", "Prop. 5.4", _skew_reports),
    Experiment("representation_g", "Prop. 4.1", exp_representation_g, False),
    Experiment("representation_gamma", "Prop. 4.3", exp_representation_gamma, False),
    Experiment("carrier_conditions", "Def. 2.1", exp_carrier),
    Experiment("local_time", "Tanaka vs occupation", exp_local_time),
    Experiment("characterization_martingale", "Thm. 3.3", exp_characterization),
    Experiment("conditional_tail", "Cor. 4.7", exp_conditional_tail, False),
    Experiment("companion_w", "Thm. 3.2", exp_companion_w),
    Experiment("reductions", "bit-wise reductions", exp_reductions),
    Experiment("calibration", "false-failure control", exp_calibration, False),
    Experiment("acceptance", "acceptance criteria", exp_acceptance, False),
]}


def list_experiments() -> str:
    return "\n".join(f"{e.name} ({e.anchor})" for e in REGISTRY.values())


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[VerificationReport]:
    return REGISTRY[cfg.experiment].run(cfg, threads)


def manifest(cfg: ExperimentConfig) -> dict:
    """Config echo, seed and code version; the output directory is left out so
    that runs written to different places compare byte for byte."""
    echo = cfg.to_dict()
    echo.pop("output_dir")
    return {"experiment": cfg.experiment, "seed": cfg.seed, "version": __version__,
            "config": echo}
