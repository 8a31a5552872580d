import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from levyfactor.catalog import make_gamma, make_stable
from levyfactor.core import (
    NEG,
    POS,
    GridFunction,
    LevyExponent,
    LevyTriple,
    SpectralDensityPair,
    Verdict,
    adaptive_quadrature,
    grid_derivative,
    integrate_tail,
    log_cf_branch,
    standard_grid,
    tabulate_density,
)
from levyfactor.errors import InsufficientNodes, ZeroCrossing
from levyfactor.exponents import exponent_from_triple
from levyfactor.spectral import spectral_function


# --------------------------------------------------------------------------
# quadrature


def test_quadrature_polynomial_is_exact():
    assert adaptive_quadrature(lambda u: u, 0.0, 1.0, rel_tol=1e-9) == pytest.approx(0.5, abs=1e-12)


def test_quadrature_infinite_range():
    assert adaptive_quadrature(lambda u: np.exp(-u), 0.0, math.inf) == pytest.approx(1.0, abs=1e-9)


def test_quadrature_complex_log_integrand():
    # frozen from a 10^6-point midpoint rule (agrees with mpmath to 1e-14)
    oracle = -0.05897507442156736 + 0.48722235829452487j
    val = adaptive_quadrature(lambda u: -np.log(1 - 1j * u / 2) / u, 0.0, 1.0, rel_tol=1e-12)
    assert abs(val - oracle) < 1e-12


def test_quadrature_rejects_bad_tolerance():
    with pytest.raises(ValueError):
        adaptive_quadrature(lambda u: u, 0.0, 1.0, rel_tol=0.0)


# --------------------------------------------------------------------------
# grid derivatives


def test_grid_derivative_of_square():
    r = np.linspace(0.1, 3.0, 60)
    d = grid_derivative(GridFunction(r, r**2), 1)
    np.testing.assert_allclose(d.values[1:-1], 2 * r[1:-1], rtol=1e-6)


def test_grid_derivative_of_constant_order_two():
    r = np.geomspace(0.1, 10.0, 40)
    d = grid_derivative(GridFunction(r, np.full_like(r, 3.0)), 2)
    assert np.all(d.values == 0.0)


def test_grid_derivative_of_exponential():
    r = np.linspace(0.0, 5.0, 2001)
    d = grid_derivative(GridFunction(r, np.exp(-r)), 1)
    np.testing.assert_allclose(d.values, -np.exp(-r), atol=1e-5)


def test_grid_derivative_needs_five_nodes():
    r = np.arange(4.0)
    with pytest.raises(InsufficientNodes):
        grid_derivative(GridFunction(r, r), 1)


def test_grid_function_rejects_unsorted_grid():
    with pytest.raises(ValueError):
        GridFunction(np.array([0.0, 2.0, 1.0]), np.zeros(3))


# --------------------------------------------------------------------------
# branch tracking


def test_log_cf_of_one_is_zero():
    t = np.linspace(-5, 5, 51)
    phi = log_cf_branch(lambda s: np.ones_like(s, dtype=complex), t)
    assert np.all(phi(t) == 0)


def test_log_cf_unwinds_linear_phase():
    a = 3.0
    t = np.linspace(-10, 10, 2001)
    phi = log_cf_branch(lambda s: np.exp(1j * a * s), t)
    np.testing.assert_allclose(phi(t), 1j * a * t, atol=1e-9)
    assert phi(10.0).imag > 29


def test_log_cf_unwinds_gamma_power():
    t = np.linspace(0, 20, 4001)
    phi = log_cf_branch(lambda s: (1 - 1j * s) ** -5, t)
    # branch-consistent oracle: -5 * principal log(1 - i t), whose argument stays in (-pi/2, 0]
    expected = -5 * np.log(1 - 1j * t)
    np.testing.assert_allclose(phi(t), expected, atol=1e-9)
    assert phi(20.0).imag > math.pi


def test_log_cf_zero_crossing():
    t = np.array([0.0, 0.5, 1.0, math.pi / 2, 2.0])
    with pytest.raises(ZeroCrossing):
        log_cf_branch(lambda s: np.cos(s).astype(complex), t)


# --------------------------------------------------------------------------
# exponent invariants


@given(st.floats(0.05, 20.0), st.floats(0.2, 1.9))
def test_exponent_invariants(t, alpha):
    for phi in (make_gamma(alpha, 1.3).exponent, make_stable(alpha).exponent):
        assert phi(0.0) == 0
        assert phi(-t) == pytest.approx(np.conj(phi(t)), abs=1e-15)
        assert phi(t).real <= 0


@given(st.floats(0.1, 10.0))
def test_exponent_dilation(a):
    phi = make_gamma(2.0, 1.0).exponent
    t = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(phi.dilate(a)(t), phi(a * t), atol=1e-15)


# --------------------------------------------------------------------------
# spectral measures and triples


def test_atoms_must_be_nonzero_and_positive():
    with pytest.raises(ValueError):
        SpectralDensityPair(atoms=((0.0, 1.0),))
    with pytest.raises(ValueError):
        SpectralDensityPair(atoms=((1.0, -1.0),))


def test_negative_gaussian_variance_rejected():
    with pytest.raises(ValueError):
        LevyTriple(0.0, -1.0)


def test_gamma_tail_is_exponential_integral():
    alpha, lam = 2.0, 0.7
    pair = make_gamma(alpha, lam).triple.spectral
    r = np.geomspace(1e-4, 30, 25)
    np.testing.assert_allclose(pair.tail(POS, r), alpha * special.exp1(lam * r), rtol=1e-9)
    assert np.all(pair.tail(NEG, r) == 0)


def test_cumulative_tail_matches_pointwise():
    # a density with a jump at 2 and a kink at 5
    f = lambda r: np.where(r < 2, 1.0 / r, 0.5 * np.exp(-np.maximum(r - 5, 0)) / r)
    r = np.geomspace(0.1, 40, 40)
    cumulative = integrate_tail(f, r, (2.0, 5.0))
    pointwise = np.array([float(integrate_tail(f, x, (2.0, 5.0))) for x in r])
    np.testing.assert_allclose(cumulative, pointwise, rtol=1e-10)


def test_tabulated_density_is_accurate():
    f = lambda r: 0.5 * np.exp(-3 * r) / r + (r < 2) * r ** -1.5
    tab = tabulate_density(f, (2.0,))
    r = np.geomspace(1e-8, 30, 2000)
    np.testing.assert_allclose(tab(r), f(r), rtol=1e-7)
    # power-law continuation outside the table
    np.testing.assert_allclose(tab(np.array([1e-12])), f(np.array([1e-12])), rtol=1e-4)


def test_tabulated_density_skips_noisy_head():
    # finite-difference style noise: absolute error growing like 1/r near 0
    noisy = lambda r: 4.5 * r * np.exp(-3 * r) + 1e-9 / r * np.sin(1e7 * r)
    tab = tabulate_density(noisy, floor=lambda r: 1e-9 / r)
    r = np.geomspace(1e-2, 3, 200)
    np.testing.assert_allclose(tab(r), 4.5 * r * np.exp(-3 * r), rtol=1e-4)
    assert np.all(tab(np.geomspace(1e-9, 1e-3, 20)) > 0)


def test_tabulated_density_vanishes_after_underflow():
    tab = tabulate_density(lambda r: np.exp(-r) / r)
    assert tab(np.array([800.0, 1e6]))[1] == 0.0


def test_atoms_enter_tail_and_moments():
    pair = SpectralDensityPair(atoms=((2.0, 0.5), (-3.0, 1.5)))
    assert float(pair.tail(POS, 1.0)) == 0.5
    assert float(pair.tail(NEG, 2.9)) == 1.5
    assert pair.truncated_moment(NEG, 0.0, 5.0, 2) == pytest.approx(13.5)
    assert pair.check_integrability() == pytest.approx(2.0)


def test_spectral_function_shape():
    pair = make_gamma(1.0, 1.0).triple.spectral
    L = spectral_function(pair, POS)
    v = L.values.values
    assert np.all(v <= 0)
    assert np.all(np.diff(v) >= 0)
    assert abs(v[-1]) < 1e-12
    x = np.array([0.5, 1.0, 2.0])
    at_nodes = spectral_function(pair, POS, grid=x).values.values
    np.testing.assert_allclose(at_nodes, -special.exp1(x), rtol=1e-9)
    # interpolation between standard-grid nodes is accurate to grid resolution
    np.testing.assert_allclose(L.values(x), -special.exp1(x), rtol=1e-4)


def test_spectral_function_of_zero_measure():
    L = spectral_function(SpectralDensityPair.zero(), NEG)
    assert np.all(L.values.values == 0)


@pytest.mark.parametrize("a", [0.1, 2.0, 10.0])
def test_triple_dilation_matches_exponent_dilation(a):
    spec = make_gamma(1.5, 1.0)
    t = np.linspace(0.1, 5, 9)
    lhs = exponent_from_triple(spec.triple.dilate(a))(t)
    np.testing.assert_allclose(lhs, spec.exponent(a * t), atol=1e-9)


def test_standard_grid_is_log_spaced():
    r = standard_grid()
    assert r[0] == pytest.approx(1e-6)
    assert r[-1] == pytest.approx(1e6)
    np.testing.assert_allclose(np.diff(np.log(r)), np.log(r[1] / r[0]))


def test_verdict_conjunction():
    assert Verdict.all_of(Verdict.YES, Verdict.YES) is Verdict.YES
    assert Verdict.all_of(Verdict.YES, Verdict.UNDECIDED) is Verdict.UNDECIDED
    assert Verdict.all_of(Verdict.UNDECIDED, Verdict.NO) is Verdict.NO


def test_levy_exponent_sum_and_scale():
    a = LevyExponent(lambda t: -t**2 / 2)
    b = LevyExponent(lambda t: 1j * t)
    t = np.array([-1.0, 0.5, 2.0])
    np.testing.assert_allclose((a + b)(t), -t**2 / 2 + 1j * t)
    np.testing.assert_allclose(a.scale(3.0)(t), -1.5 * t**2)
