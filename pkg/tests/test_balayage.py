import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from skewflip.balayage import (balayage_transform, balayage_values, carrier_check,
                               ito_integral, ito_sum, residual_R, residual_values)
from skewflip.constructors import build_skew_delta
from skewflip.flips import PiecewiseAlpha, assign_signs, k_values, z_values
from skewflip.local_time import tanaka_raw
from skewflip.paths import (TimeGrid, default_zero_tol, detect_excursions,
                            last_zero_index)
from skewflip.rng import Streams

from conftest import brownian, brownian_matrix, path

vals = arrays(np.float64, st.integers(2, 40),
              elements=st.floats(-2, 2, allow_nan=False).map(lambda v: round(v, 2)))


# -- Ito sums ----------------------------------------------------------------------

def test_ito_unit_and_zero_integrands():
    y = path([1.0, 2.5, 0.5, -1.0])
    one = y.derive(np.ones(4), "k")
    zero = y.derive(np.zeros(4), "k")
    np.testing.assert_allclose(ito_integral(one, y).values, y.values - y.values[0])
    np.testing.assert_array_equal(ito_integral(zero, y).values, 0.0)


def test_ito_grid_mismatch_rejected():
    with pytest.raises(ValueError):
        ito_integral(path([0, 1, 2]), path([0, 1, 2], horizon=2.0))


def test_ito_b_db_centred():
    b = brownian_matrix(3, 10_000, 256)
    ibb = ito_sum(b, b)[:, -1]
    assert abs(ibb.mean()) < 3 * ibb.std(ddof=1) / np.sqrt(ibb.size)


def test_ito_formula_error_shrinks_like_sqrt_dt():
    rms = []
    ns = [2 ** k for k in range(8, 13)]
    for n in ns:
        b = brownian_matrix(n, 2000, n)
        err = b[:, -1] ** 2 / 2 - 0.5 - ito_sum(b, b)[:, -1]
        rms.append(np.sqrt(np.mean(err ** 2)))
    slope = np.polyfit(np.log(1.0 / np.array(ns)), np.log(rms), 1)[0]
    assert 0.4 < slope < 0.6


# -- balayage transform ------------------------------------------------------------

def test_balayage_identity_and_zero():
    y = path([0, 1, -1, 0, 2])
    exc = detect_excursions(y)
    one = y.derive(np.ones(5), "k")
    np.testing.assert_array_equal(balayage_transform(one, y, exc).values, y.values)
    z = path([0, 0, 0, 0, 0])
    k = z.derive([1, -1, 1, -1, 1], "k")
    np.testing.assert_array_equal(balayage_transform(k, z, detect_excursions(z)).values, 0)


def test_balayage_matches_brute_force_on_skew_transform():
    g = TimeGrid(1.0, 2048)
    for i in range(5):
        st_ = Streams(4, i)
        b, w = brownian(4, i, g), brownian(4, i, g, "W")
        xd = np.sqrt(1 - 0.36) * b.values + 0.6 * np.abs(w.values)
        exc_w = detect_excursions(w)
        kw = k_values(exc_w, assign_signs(exc_w, 0.5, st_("kW")).marks)
        y = np.abs(xd)
        exc = detect_excursions(xd)
        zeros = np.flatnonzero(exc.zero_mask)
        brute = np.empty_like(y)
        for t in range(y.size):
            before = zeros[zeros <= t]
            brute[t] = kw[before[-1] if before.size else 0] * y[t]
        np.testing.assert_array_equal(balayage_values(kw, y, exc), brute)


@given(vals)
def test_balayage_vanishes_where_y_vanishes(y):
    exc = detect_excursions(y)
    k = np.random.default_rng(y.size).standard_normal(y.size)
    out = balayage_values(k, y, exc)
    assert (out[y == 0] == 0).all()


# -- residual R --------------------------------------------------------------------

@given(vals)
def test_residual_vanishes_for_unit_k(y):
    r = residual_values(np.ones(y.size), y, detect_excursions(y))
    assert np.max(np.abs(r)) <= 1e-12 * max(1.0, np.abs(y).sum())


def test_residual_zero_path():
    y = path([0, 0, 0, 0])
    k = y.derive([1, -1, 1, -1], "k")
    np.testing.assert_array_equal(residual_R(k, y, detect_excursions(y)).values, 0)


@given(vals)
def test_residual_moves_only_into_zero_indices(y):
    exc = detect_excursions(y)
    k = np.random.default_rng(0).choice([-1.0, 1.0], y.size)
    dr = np.diff(residual_values(k, y, exc))
    ends_at_zero = exc.zero_mask[1:]
    assert np.all(np.abs(dr[~ends_at_zero]) <= 1e-12)


def test_residual_carried_by_zero_band_of_reflected_bm():
    # open-interval Z vanishes at every g_t, so k_{g_t} = 0 and R = 0 (fraction 0/0 -> 0)
    g = TimeGrid(1.0, 4096)
    band = np.sqrt(g.dt)
    for i in range(50):
        b = brownian(6, i, g)
        y = b.derive(np.abs(b.values), "abs_B")
        exc = detect_excursions(y, default_zero_tol(y.values, g.dt))
        z = z_values(exc, assign_signs(exc, 0.5, Streams(6, i)("zeta")).marks)
        assert carrier_check(residual_R(y.derive(z, "Z"), y, exc), y, band).fraction_outside < 0.02


def test_residual_with_half_open_marks_carried_by_zero_band():
    g = TimeGrid(1.0, 4096)
    band = np.sqrt(g.dt)
    total = outside = 0.0
    for i in range(200):
        b = brownian(6, i, g)
        y = b.derive(np.abs(b.values), "abs_B")
        exc = detect_excursions(y, default_zero_tol(y.values, g.dt))
        k = k_values(exc, assign_signs(exc, 0.5, Streams(6, i)("zeta")).marks)
        rep = carrier_check(residual_R(y.derive(k, "k"), y, exc), y, band)
        total += rep.total_variation_mass
        outside += rep.mass_outside_carrier
    assert total > 0
    assert outside / total < 0.02


# -- carrier check -----------------------------------------------------------------

def test_carrier_constant_fv():
    c = path([0, 1, 0, -1])
    rep = carrier_check(c.derive(np.full(4, 3.0), "fv"), c, 0.1)
    assert rep.total_variation_mass == 0 and rep.fraction_outside == 0


def test_carrier_adversarial_placement():
    c = path([2, 2, 2, 2, 0])
    fv = c.derive([0, 1, 2, 3, 3], "fv")
    assert carrier_check(fv, c, 0.5).fraction_outside == 1.0


def test_local_time_of_b_carried_by_abs_b():
    g = TimeGrid(1.0, 4096)
    total = outside = 0.0
    for i in range(200):
        b = brownian(7, i, g)
        lt = b.derive(tanaka_raw(b.values), "L")
        # B carries the zero set of |B| together with its sign changes
        rep = carrier_check(lt, b, np.sqrt(g.dt))
        total += rep.total_variation_mass
        outside += rep.mass_outside_carrier
    assert outside / total < 0.02


@given(vals, vals)
def test_carrier_fraction_monotone_in_band(fv, carrier):
    n = min(fv.size, carrier.size)
    f, c = path(fv[:n]), path(carrier[:n])
    fracs = [carrier_check(f, c, band).fraction_outside for band in (0.0, 0.1, 0.5, 1.0, 3.0)]
    assert all(a >= b for a, b in zip(fracs, fracs[1:]))
    rep = carrier_check(f, c, 0.2)
    assert 0 <= rep.mass_outside_carrier <= rep.total_variation_mass


def test_skew_transform_balayage_uses_x_delta_zeros():
    g = TimeGrid(1.0, 1024)
    b, w = brownian(1, 0, g), brownian(1, 0, g, "W")
    sb = build_skew_delta(b, w, 0.6, PiecewiseAlpha.constant(0.5), Streams(1, 0))
    g_idx = last_zero_index(sb.excursions)
    t = sb.transform.values
    # |transform| equals |X^delta| because the balayage factor has unit modulus
    xd = 0.8 * b.values + 0.6 * np.abs(w.values)
    np.testing.assert_allclose(np.abs(t), np.abs(xd))
    assert g_idx.shape == t.shape
