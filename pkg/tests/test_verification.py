import json
import math

import numpy as np
import pytest

from skewflip.constructors import (abs_of, build_skew_delta, geometric_skew_bm,
                                   make_function, martingale_decomposition)
from skewflip.flips import PiecewiseAlpha
from skewflip.local_time import tanaka_raw
from skewflip.paths import TimeGrid
from skewflip.rng import Streams
from skewflip.verification import (Check, VerificationReport, bonferroni_critical,
                                   brownianity_test, carrier_report,
                                   characterization_martingale_test, equal_windows,
                                   local_time_report, martingale_from_sums,
                                   martingale_increment_test, occupation_fraction_test,
                                   occupation_from_counts, reconstruct_driver,
                                   sde_residual_skew, z_scores)

from conftest import brownian, brownian_matrix

G = TimeGrid(1.0, 1024)


# -- report plumbing -----------------------------------------------------------------

def test_check_comparators():
    assert Check.make("a", "s", 1.0, 2.0).passed
    assert not Check.make("a", "s", 2.0, 2.0).passed
    assert Check.make("a", "s", 2.0, 2.0, "<=").passed
    assert Check.info("a", "s", 3.0).passed is None
    with pytest.raises(ValueError):
        Check.make("a", "s", 1.0, 1.0, ">")


def test_report_status_and_serialization():
    rep = VerificationReport("x", 3, G, {"alpha": 0.5}, seed=4)
    assert rep.status == "descriptive"
    rep.checks.append(Check.make("c", "stat", 0.1, 0.2))
    assert rep.status == "pass" and rep.value("c") == 0.1
    rep.checks.append(Check.make("d", "stat", 0.3, 0.2))
    assert rep.status == "fail"
    rep.inconclusive = True
    assert rep.status == "inconclusive" and rep.passed is None
    d = json.loads(json.dumps(rep.to_dict()))
    assert d["seed"] == 4 and d["grid"]["n_steps"] == 1024
    assert all("tolerance" in c for c in d["checks"])


def test_bonferroni_critical_values():
    assert bonferroni_critical(0.01, 1) == pytest.approx(2.5758293035489)
    assert bonferroni_critical(0.01, 8) > bonferroni_critical(0.01, 1)


def test_z_scores_degenerate_columns():
    _, z = z_scores(np.array([[0.0, 1.0], [0.0, 1.0]]))
    assert z[0] == 0 and np.isinf(z[1])


# -- martingale increments ---------------------------------------------------------

def test_brownian_motion_passes():
    assert martingale_increment_test(brownian_matrix(1, 2000, 256)).passed


def test_drift_fails_with_growing_z():
    t = np.tile(np.linspace(0, 1, 257), (50, 1))
    rep = martingale_increment_test(t)
    assert rep.passed is False and np.isinf(rep.value("max_abs_z"))
    rng = np.random.default_rng(0)
    zs = []
    for n in (200, 2000, 20_000):
        noisy = t[:1].repeat(n, 0) + np.cumsum(
            np.c_[np.zeros(n), rng.standard_normal((n, 256)) * 0.5], axis=1)
        zs.append(martingale_increment_test(noisy).value("max_abs_z"))
    assert zs[0] < zs[1] < zs[2]


def test_empty_windows_inconclusive():
    rep = martingale_increment_test(brownian_matrix(1, 10, 16), windows=[])
    assert rep.inconclusive and rep.status == "inconclusive"
    rep = martingale_increment_test(brownian_matrix(1, 10, 16),
                                    step_mask=np.zeros((10, 16), dtype=bool))
    assert rep.inconclusive


def test_geometric_martingale_part_away_from_w_zeros():
    g = TimeGrid(1.0, 512)
    band = math.sqrt(g.dt)
    ens, masks = [], []
    for i in range(4000):
        b, w = brownian(2, i, g), brownian(2, i, g, "W")
        dec = geometric_skew_bm(b, w, 0.6)
        ens.append(dec.x.values - 0.6 * tanaka_raw(w.values))
        masks.append(np.abs(w.values[:-1]) > band)
    assert martingale_increment_test(np.stack(ens), step_mask=np.stack(masks)).passed


# -- SDE residual --------------------------------------------------------------------

def _skew_ensemble(alpha, n_paths, grid, delta=0.6, seed=3):
    return np.stack([build_skew_delta(brownian(seed, i, grid), brownian(seed, i, grid, "W"),
                                      delta, PiecewiseAlpha.constant(alpha),
                                      Streams(seed, i)).y.values for i in range(n_paths)])


def test_symmetric_case_driver_is_y():
    g = TimeGrid(1.0, 2048)
    y = _skew_ensemble(0.5, 500, g)
    np.testing.assert_array_equal(reconstruct_driver(y, g, 0.5), y)
    rep = sde_residual_skew(y, 0.5, g)
    assert abs(rep.value("mean_qv") - 1.0) < 0.05


def test_symmetric_case_equals_raw_brownianity():
    g = TimeGrid(1.0, 512)
    y = _skew_ensemble(0.5, 300, g)
    a = sde_residual_skew(y, 0.5, g).to_dict()["checks"]
    b = brownianity_test(y, g).to_dict()["checks"]
    # identical rows, plus one descriptive diagnostic
    assert json.dumps(a[:len(b)]) == json.dumps(b)
    assert [c["name"] for c in a[len(b):]] == ["max_abs_z_occupation_time"]


def test_reflected_case_driver():
    g = TimeGrid(1.0, 2048)
    b = brownian_matrix(4, 500, 2048)
    y = np.abs(b)
    np.testing.assert_allclose(reconstruct_driver(y, g, 1.0), y - tanaka_raw(y))
    assert abs(sde_residual_skew(y, 1.0, g).value("mean_qv") - 1.0) < 0.05


def test_skew_driver_qv_and_ks():
    g = TimeGrid(1.0, 4096)
    rep = sde_residual_skew(_skew_ensemble(0.7, 500, g), 0.7, g)
    assert rep.value("qv_deviation") < 0.05
    assert rep.value("ks_increments") < 0.02


@pytest.mark.xfail(strict=True, reason="discrete Tanaka on a skew path is biased by "
                                       "crossings split unevenly across the grid")
def test_skew_driver_martingale_rows_tanaka():
    g = TimeGrid(1.0, 4096)
    assert sde_residual_skew(_skew_ensemble(0.7, 2000, g), 0.7, g).passed


def test_skew_driver_occupation_time_diagnostic_centred():
    g = TimeGrid(1.0, 4096)
    rep = sde_residual_skew(_skew_ensemble(0.7, 2000, g), 0.7, g)
    assert rep.value("max_abs_z_occupation_time") < bonferroni_critical(0.01, 8)


def test_piecewise_driver_uses_weighted_local_time():
    g = TimeGrid(1.0, 8)
    y = np.array([0.0, 0.5, -0.5, 0.2, 0.0, 0.3, -0.1, 0.4, 0.2])
    pieces = PiecewiseAlpha((0.0, 0.5), (0.9, 0.2))
    lt = tanaka_raw(y)
    coef = 2 * pieces.alpha_at(g.times[:-1]) - 1
    want = y - np.concatenate(([0.0], np.cumsum(coef * np.diff(lt))))
    np.testing.assert_allclose(reconstruct_driver(y, g, pieces), want)
    np.testing.assert_allclose(reconstruct_driver(y, g, PiecewiseAlpha.constant(0.9)),
                               y - 0.8 * lt)


def test_unknown_local_time_method():
    with pytest.raises(ValueError):
        reconstruct_driver(np.zeros(5), TimeGrid(1.0, 4), 0.7, method="nope")


# -- occupation fractions -------------------------------------------------------------

@pytest.mark.parametrize("alpha,want", [(1.0, 1.0), (0.0, 0.0)])
def test_degenerate_occupation(alpha, want):
    g = TimeGrid(1.0, 256)
    rep = occupation_fraction_test(_skew_ensemble(alpha, 300, g), alpha, [0.25, 0.5, 0.75], g)
    assert rep.passed
    for t in (0.25, 0.5, 0.75):
        assert rep.value(f"fraction_t{t:g}") == want


def test_occupation_alpha_07():
    g = TimeGrid(1.0, 1024)
    rep = occupation_fraction_test(_skew_ensemble(0.7, 2000, g), 0.7, [0.25, 0.5, 0.75], g)
    assert rep.passed
    for t in (0.25, 0.5, 0.75):
        assert abs(rep.value(f"fraction_t{t:g}") - 0.7) <= 0.031


def test_occupation_too_few_samples_inconclusive():
    rep = occupation_from_counts(np.array([3]), np.array([5]), 0.7, [0.5], G, n_paths=5)
    assert rep.inconclusive


def test_occupation_probe_inside_horizon():
    with pytest.raises(ValueError):
        occupation_fraction_test(np.zeros((3, 5)), 0.5, [1.0], TimeGrid(1.0, 4))


# -- local time report ---------------------------------------------------------------

def test_local_time_report_rows():
    lt = np.full(100, math.sqrt(2 / math.pi))
    rep = local_time_report(lt, lt * 1.05, G)
    assert rep.value("mean_deviation") < 1e-12
    assert rep.value("median_gap") == pytest.approx(0.05)
    assert rep.passed


# -- carriers ---------------------------------------------------------------------------

def test_carrier_report_pools_masses():
    rep = carrier_report({"a": [(1.0, 0.0), (1.0, 0.01)], "v": [(0.0, 0.0)]}, G)
    assert rep.value("fraction_outside_a") == pytest.approx(0.005)
    assert rep.value("fraction_outside_v") == 0.0
    assert rep.passed


# -- characterization martingale -----------------------------------------------------

def _abs_b_decs(n, grid, seed):
    for i in range(n):
        b = brownian(seed, i, grid)
        yield abs_of(martingale_decomposition(b, b))


def test_characterization_identity_function_unrestricted():
    rep = characterization_martingale_test(_abs_b_decs(3000, TimeGrid(1.0, 256), 5),
                                           make_function("constant", c=1.0), restrict=False)
    assert rep.passed


def test_characterization_zero_function_vacuous():
    rep = characterization_martingale_test(_abs_b_decs(50, TimeGrid(1.0, 64), 6),
                                           make_function("constant", c=0.0), restrict=False)
    assert rep.passed and rep.value("max_abs_z") == 0.0


def test_characterization_linear_on_abs_x_delta():
    g = TimeGrid(1.0, 256)

    def decs():
        for i in range(5000):
            yield abs_of(geometric_skew_bm(brownian(7, i, g), brownian(7, i, g, "W"), 0.6))

    assert characterization_martingale_test(decs(), make_function("linear", c=2.0)).passed


def test_windows_cover_grid():
    w = equal_windows(1024, 8)
    assert w[0][0] == 0 and w[-1][1] == 1024 and len(w) == 8
    assert equal_windows(3, 8) == [(0, 1), (1, 2), (2, 3)]


def test_martingale_from_sums_needs_two_paths():
    assert martingale_from_sums(np.zeros((1, 4))).inconclusive
