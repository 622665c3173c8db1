import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hjrate.radial import (RadialCase, expansion_coefficients, expansion_remainder_exact,
                           expansion_value, limit_value, log_radial_integral,
                           radial_value_exact, radial_viscous_value, sphere_measure)

HALVINGS = [2.0**-m for m in range(7, 14)]


def test_sphere_measures():
    assert sphere_measure(1) == pytest.approx(2.0, rel=1e-15)
    assert sphere_measure(2) == pytest.approx(2 * math.pi, rel=1e-15)
    assert sphere_measure(3) == pytest.approx(4 * math.pi, rel=1e-15)


def test_gamma_reference_values():
    assert math.gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    assert math.gamma(1.0) == 1.0
    assert math.gamma(1.5) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-13)


@pytest.mark.parametrize("kw", [dict(k=0, d=1), dict(k=3, d=2)])
def test_case_invariants(kw):
    with pytest.raises(ValueError):
        RadialCase(tau=1.0, eps=0.1, **kw)
    with pytest.raises(ValueError):
        RadialCase(1, 1, 0.0, 0.1)


def test_k1_example():
    val = radial_viscous_value(RadialCase(1, 1, 1.0, 1e-3))
    assert val == pytest.approx(-0.5 - 1e-3 * math.log(2), abs=1e-5)


def test_k2_example():
    eps = 1e-3
    val = radial_viscous_value(RadialCase(2, 2, 1.0, eps))
    assert val == pytest.approx(-0.5 + eps / 2 * math.log(eps) - eps / 2 * math.log(2 * math.pi), abs=2e-5)


def test_expansion_examples():
    assert expansion_value(RadialCase(1, 1, 1.0, 0.01)) == pytest.approx(-0.5 - 0.01 * math.log(2), abs=1e-15)
    eps = 1e-2
    want = -1 + 0.5 * eps * math.log(eps) - 0.5 * eps * math.log(2) - eps * math.log(math.sqrt(2 * math.pi))
    assert expansion_value(RadialCase(2, 2, 2.0, eps)) == pytest.approx(want, abs=1e-15)
    for k in (1, 2, 5):
        assert expansion_value(RadialCase(k, k, 0.8, 1e-300)) == pytest.approx(-0.4, abs=1e-290)


def test_limit_value_examples():
    assert limit_value(2, [0.0, 0.0], 0.6) == -0.3
    assert limit_value(1, [3.0, 4.0], 1.0) == -3.5
    assert limit_value(2, [3.0, 4.0], 0.0) == -5.0
    with pytest.raises(ValueError):
        limit_value(3, [0.0, 0.0], 1.0)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
@pytest.mark.parametrize("eps", [0.5, 0.1, 1e-3, 2.0**-13])
def test_quadrature_matches_exact_moments(k, eps):
    case = RadialCase(k, k, 1.0, eps)
    assert radial_viscous_value(case) == pytest.approx(radial_value_exact(case), abs=1e-12)


@given(st.floats(0.1, 3.0), st.floats(1e-4, 1.0), st.integers(1, 4))
def test_quadrature_matches_exact_moments_random(tau, eps, k):
    case = RadialCase(k, k, tau, eps)
    assert radial_viscous_value(case) == pytest.approx(radial_value_exact(case), abs=1e-11)


def test_independent_of_ambient_dimension():
    assert radial_viscous_value(RadialCase(2, 2, 1.0, 0.01)) == radial_viscous_value(RadialCase(2, 7, 1.0, 0.01))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_gap_is_negative(k):
    for eps in [1.0, 0.3] + HALVINGS:
        assert radial_viscous_value(RadialCase(k, k, 1.0, eps)) - limit_value(k, np.zeros(k), 1.0) < 0


@pytest.mark.parametrize("k", [1, 2, 3])
def test_remainder_vanishes_monotonically(k):
    rem = [expansion_remainder_exact(RadialCase(k, k, 1.0, e)) for e in HALVINGS]
    assert all(abs(b) < abs(a) for a, b in zip(rem, rem[1:]))
    assert abs(rem[-1]) < 2.0**-12


@pytest.mark.parametrize("k", [1, 2, 3])
def test_eps_coefficient_converges(k):
    coef = expansion_coefficients(k, 1.0)
    vals = []
    for e in HALVINGS:
        gap = radial_viscous_value(RadialCase(k, k, 1.0, e)) + 0.5
        vals.append((gap - coef["eps_log_eps"] * e * math.log(e)) / e)
    dev = [abs(v - coef["eps"]) for v in vals]
    assert dev[-1] < 1e-2
    assert all(b <= a + 1e-9 for a, b in zip(dev, dev[1:]))


def test_remainder_k1_is_gaussian_tail():
    case = RadialCase(1, 1, 1.0, 2.0**-7)
    rem = expansion_remainder_exact(case)
    # -log(1 - Phi(-sqrt(tau/eps))) ~ Phi(-sqrt(128))
    want = mpmath.ncdf(-mpmath.sqrt(128))
    assert float(rem / want) == pytest.approx(1.0, rel=1e-10)


def test_log_integral_tiny_eps_finite():
    assert math.isfinite(log_radial_integral(3, 1.0, 1e-9))
