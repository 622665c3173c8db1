import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hjrate.fields import (FnSpec, Grid, ProblemSpec, ScalarField, estimate_lipschitz,
                           estimate_second_difference_bounds, sample_function, sup_norm_diff)
from hjrate.hopf_lax import (brute_force_inf_convolution, hopf_lax_point, hopf_lax_solve,
                             inf_convolution_argmin_1d, lax_oleinik_time_march,
                             quadratic_inf_convolution)

values = st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=40)
taus = st.floats(0.01, 5.0)


@given(values, taus)
def test_envelope_matches_brute_force_1d(vals, tau):
    g = Grid.uniform(-1.0, 1.0, len(vals))
    fld = ScalarField(g, np.array(vals))
    out = quadratic_inf_convolution(fld, tau)
    ref = brute_force_inf_convolution(fld, tau)
    assert sup_norm_diff(out, ref) <= 1e-12


@given(st.integers(2, 9), st.integers(2, 9), taus, st.integers(0, 2**32 - 1))
def test_envelope_matches_brute_force_2d(n1, n2, tau, seed):
    g = Grid((-1.0, 0.0), (1.0, 3.0), (n1, n2))
    fld = ScalarField(g, np.random.default_rng(seed).normal(size=g.shape))
    ref = brute_force_inf_convolution(fld, tau)
    assert sup_norm_diff(quadratic_inf_convolution(fld, tau), ref) <= 1e-12


@given(values, taus)
def test_output_below_input(vals, tau):
    fld = ScalarField(Grid.uniform(0.0, 1.0, len(vals)), np.array(vals))
    assert np.all(quadratic_inf_convolution(fld, tau).values <= fld.values)


@given(values, st.lists(st.floats(0, 2), min_size=40, max_size=40), taus)
def test_monotone(vals, bumps, tau):
    g = Grid.uniform(0.0, 1.0, len(vals))
    a = ScalarField(g, np.array(vals))
    b = ScalarField(g, np.array(vals) + np.array(bumps[: len(vals)]))
    assert np.all(quadratic_inf_convolution(a, tau).values <= quadratic_inf_convolution(b, tau).values)


@given(values, taus, st.floats(-10, 10))
def test_translation(vals, tau, c):
    g = Grid.uniform(0.0, 1.0, len(vals))
    a = quadratic_inf_convolution(ScalarField(g, np.array(vals)), tau)
    b = quadratic_inf_convolution(ScalarField(g, np.array(vals) + c), tau)
    np.testing.assert_allclose(b.values, a.values + c, atol=1e-12)


@given(values, taus)
def test_lipschitz_preserved(vals, tau):
    fld = ScalarField(Grid.uniform(0.0, 1.0, len(vals)), np.array(vals))
    assert estimate_lipschitz(quadratic_inf_convolution(fld, tau)) <= estimate_lipschitz(fld) + 1e-9


def test_ties_go_to_smaller_index():
    g = Grid.uniform(-1.0, 1.0, 3)
    fld = ScalarField(g, [0.0, 5.0, 0.0])
    # x = 0 is equidistant from both minima
    assert inf_convolution_argmin_1d(fld, 1.0)[1] == 0


def test_zero_field_stays_zero(line):
    out = quadratic_inf_convolution(sample_function(FnSpec.zero(), line), 0.7)
    assert not np.any(out.values)


def test_rejects_nonpositive_tau(line):
    with pytest.raises(ValueError):
        quadratic_inf_convolution(sample_function(FnSpec.zero(), line), 0.0)


@pytest.mark.parametrize("tau", [0.25, 0.5, 1.0])
def test_kink_value_at_origin(line, tau):
    p = ProblemSpec(FnSpec.neg_proj_norm(1), FnSpec.zero(), 1.0, 1)
    assert hopf_lax_solve(p, 1.0 - tau, line).field.at([0.0]) == pytest.approx(-tau / 2, abs=1e-14)


def test_kink_matches_exact_formula_on_trusted_region(line, kink_problem):
    sol = hopf_lax_solve(kink_problem, 0.3, line)
    trusted = sol.trusted()
    x = trusted.grid.axes()[0]
    exact = -np.abs(x) - 0.7 / 2
    assert np.max(np.abs(trusted.values - exact)) <= line.h[0] ** 2 / (2 * 0.7) + 1e-14


def test_kink_in_two_dims_at_origin():
    g = Grid((-3.0, -3.0), (3.0, 3.0), (121, 121))
    p = ProblemSpec(FnSpec.neg_proj_norm(2), FnSpec.zero(), 1.0, 2)
    assert hopf_lax_solve(p, 0.0, g).field.at([0.0, 0.0]) == pytest.approx(-0.5, abs=1e-12)


def test_abs_norm_at_origin(line):
    p = ProblemSpec(FnSpec.abs_norm(), FnSpec.zero(), 1.0, 1)
    assert hopf_lax_solve(p, 0.0, line).field.at([0.0]) == 0.0


def test_terminal_time_returns_g(line, kink_problem):
    sol = hopf_lax_solve(kink_problem, 1.0, line)
    assert sup_norm_diff(sol.field, sample_function(kink_problem.g, line)) == 0.0


@pytest.mark.parametrize("c", [-1.5, 0.4, 2.0])
def test_linear_complete_the_square(line, c):
    tau = 0.8
    p = ProblemSpec(FnSpec.linear([c]), FnSpec.zero(), 1.0, 1)
    sol = hopf_lax_solve(p, 1.0 - tau, line)
    trusted = sol.trusted()
    x = trusted.grid.axes()[0]
    # tau*c is a multiple of h, so the grid minimizer x - tau c is a node
    np.testing.assert_allclose(trusted.values, c * x - tau * c**2 / 2, atol=1e-12)


def test_rejects_nonzero_f(line):
    p = ProblemSpec(FnSpec.zero(), FnSpec.constant(1.0), 1.0, 1)
    with pytest.raises(ValueError):
        hopf_lax_solve(p, 0.0, line)


@pytest.mark.parametrize("t", [0.0, 0.5, 0.9])
def test_semiconcavity_generation(line, t):
    p = ProblemSpec(FnSpec.abs_norm(), FnSpec.zero(), 1.0, 1)
    sol = hopf_lax_solve(p, t, line)
    hi, _ = estimate_second_difference_bounds(sol.trusted())
    assert hi <= 1.0 / (1.0 - t) + 1e-9


@pytest.mark.parametrize("dt", [0.5, 0.25, 0.1, 0.3])
def test_march_composes_to_single_step(line, kink_problem, dt):
    one = hopf_lax_solve(kink_problem, 0.0, line)
    march = lax_oleinik_time_march(kink_problem, 0.0, line, dt)
    assert march.steps == math.ceil(1.0 / dt - 1e-9)
    np.testing.assert_allclose(march.trusted().values, one.trusted().values, atol=1e-12)


def test_march_constant_source(line):
    p = ProblemSpec(FnSpec.zero(), FnSpec.constant(1.0), 1.0, 1)
    sol = lax_oleinik_time_march(p, 0.25, line, 0.05)
    np.testing.assert_allclose(sol.field.values, 0.75, atol=1e-12)


def test_march_rejects_bad_dt(line, kink_problem):
    for dt in (0.0, -0.1, 2.0):
        with pytest.raises(ValueError):
            lax_oleinik_time_march(kink_problem, 0.0, line, dt)


def test_march_first_order_in_dt():
    # f = cos(2x) with g = 0: splitting error is O(dt); the defect against the
    # Richardson extrapolation 2 phi(dt/2) - phi(dt) halves with dt
    g = Grid.uniform(-3.0, 3.0, 1201)
    p = ProblemSpec(FnSpec.zero(), FnSpec.cosine(2.0), 1.0, 1)
    x0 = [0.5]
    vals = {dt: lax_oleinik_time_march(p, 0.0, g, dt).field.at(x0) for dt in (0.2, 0.1, 0.05)}
    ref = 2 * vals[0.05] - vals[0.1]
    d1, d2 = abs(vals[0.2] - ref), abs(vals[0.1] - ref)
    assert d1 > 0
    assert d2 / d1 == pytest.approx(0.5, rel=0.2)


def test_hopf_lax_point_matches_grid(line, kink_problem):
    cand = line.points()
    val = hopf_lax_point(kink_problem.g, [0.37], 0.6, cand)
    assert val == pytest.approx(-0.37 - 0.3, abs=line.h[0] ** 2 / 1.2)
