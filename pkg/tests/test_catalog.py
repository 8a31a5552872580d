import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from levyfactor.catalog import (
    CATALOG,
    default_fixtures,
    get_spec,
    levy_area_series,
    make_bessel,
    make_gamma,
    make_K_measure,
    make_laplace_series,
    make_levy_area,
    make_stable,
    make_sym_gamma,
    make_wenocur,
)
from levyfactor.core import NEG, POS, SpectralDensityPair
from levyfactor.errors import DivergentCoefficients, ParamOutOfRange
from levyfactor.exponents import exponent_from_triple, invert_I
from levyfactor.spectral import spectral_IJ

T10 = np.linspace(-10.0, 10.0, 41)


@pytest.mark.parametrize("spec", default_fixtures(), ids=lambda s: s.name)
def test_exponent_matches_triple(spec):
    lk = exponent_from_triple(spec.triple)(T10)
    assert np.max(np.abs(lk - spec.exponent(T10))) <= 1e-6


def test_gaussian_and_stable_params():
    with pytest.raises(ParamOutOfRange):
        make_stable(2.0)
    with pytest.raises(ParamOutOfRange):
        make_stable(1.5, scale=-1.0)
    with pytest.raises(ParamOutOfRange):
        make_gamma(0.0, 1.0)
    with pytest.raises(ParamOutOfRange):
        make_K_measure(1.0, 1.0, sign=0)


def test_cauchy_exponent():
    t = np.array([-3.0, 0.5, 2.0])
    np.testing.assert_allclose(make_stable(1.0).exponent(t), -np.abs(t))


def test_exponential_law_cf():
    assert make_gamma(1.0, 1.0).exponent.cf(1.0) == pytest.approx(1 / (1 - 1j), abs=1e-15)


def test_sym_gamma_is_difference_of_gammas():
    alpha = 0.7
    g = make_gamma(alpha, 1.0).exponent
    s = make_sym_gamma(alpha)
    np.testing.assert_allclose(s.exponent(T10), g(T10) + g(-T10), atol=1e-14)
    np.testing.assert_allclose(s.exponent.cf(T10), (1 + T10**2) ** -alpha, rtol=1e-12)
    r = np.geomspace(1e-3, 20, 9)
    np.testing.assert_allclose(s.triple.spectral.density(NEG)(r), alpha * np.exp(-r) / r)


def _numeric_gamma_cf(alpha, t):
    pdf = stats.gamma(alpha).pdf
    re = integrate.quad(lambda x: pdf(x) * math.cos(t * x), 0, np.inf, limit=400)[0]
    im = integrate.quad(lambda x: pdf(x) * math.sin(t * x), 0, np.inf, limit=400)[0]
    return re + 1j * im


def _compound_poisson_cf(alpha, t, terms=80):
    # sum over the Poisson(alpha) jump count of exponential(1) convolution powers
    k = np.arange(terms)
    w = stats.poisson(alpha).pmf(k)
    return np.sum(w * (1 - 1j * t) ** (-k.astype(float)))


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.5])
def test_bessel_is_the_convolution(alpha):
    spec = make_bessel(alpha)
    for t in (0.3, 1.0, 4.0):
        oracle = _numeric_gamma_cf(alpha, t) * _compound_poisson_cf(alpha, t)
        assert abs(spec.exponent.cf(t) - oracle) < 1e-8


def test_laplace_single_term():
    spec = make_laplace_series((1.0,))
    np.testing.assert_allclose(spec.exponent.cf(T10), 1 / (1 + T10**2), rtol=1e-14)


def test_laplace_series_approximates_levy_area():
    u = 1.0
    spec = levy_area_series(u, K=10_000)
    t = np.linspace(0.01, 5, 60)
    target = t * u / np.sinh(t * u)
    assert np.max(np.abs(spec.exponent.cf(t) / target - 1)) < 1e-3
    assert spec.params == {"u": u, "K": 10_000}


def test_laplace_series_divergent_coefficients():
    with pytest.raises(DivergentCoefficients):
        make_laplace_series(lambda k: k**-0.5, K=2000)
    with pytest.raises(ParamOutOfRange):
        make_laplace_series((1.0, -0.5))


def test_laplace_tail_bound_recorded():
    spec = make_laplace_series(lambda k: 1.0 / k, K=1000)
    tail = spec.components["tail_square_sum"]
    exact = float(mp.zeta(2) - sum(1.0 / k**2 for k in range(1, 1001)))
    assert exact / 2 < tail < exact * 2


def test_levy_area_normalisation_and_product():
    spec = make_levy_area(1.5)
    for key in ("factor", "driver", "product"):
        assert spec.components[key](0.0) == 0
    t = np.linspace(-8, 8, 33)
    c = spec.components
    np.testing.assert_allclose(c["factor"](t) + c["driver"](t), c["product"](t), atol=0)


def test_levy_area_small_argument_series():
    mp.mp.dps = 40
    spec = make_levy_area(1.0)
    for t in (1e-7, 5e-5, 9.9e-5, 1.01e-4, 1e-3):
        f = complex(spec.components["factor"](t))
        d = complex(spec.components["driver"](t))
        assert f.real == pytest.approx(float(mp.log(t / mp.sinh(t))), rel=1e-12, abs=1e-300)
        assert d.real == pytest.approx(float(1 - t * mp.coth(t)), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("u", [0.5, 1.0, 2.0])
def test_levy_area_driver_is_invert_I(u):
    spec = make_levy_area(u)
    t = np.linspace(0.01, 10 / u, 50)
    assert np.max(np.abs(invert_I(spec.exponent)(t) - spec.components["driver"](t))) <= 1e-6


def test_wenocur_product():
    spec = make_wenocur()
    t = np.linspace(0.01, 10, 50)
    chi = np.cosh(t) ** -0.5 * np.exp(-0.5 * t * np.tanh(t))
    np.testing.assert_allclose(np.exp(spec.components["product"](t)), chi, rtol=1e-12)
    assert np.max(np.abs(invert_I(spec.exponent)(t) - spec.components["driver"](t))) <= 1e-6


@pytest.mark.parametrize("c, beta", [(1.0, 1.0), (3.0, 2.0), (0.5, 0.25)])
def test_K_measure_is_IJ_of_point_mass(c, beta):
    k = make_K_measure(c / beta, beta).triple.spectral
    ij = spectral_IJ(SpectralDensityPair(atoms=((beta, c),)))
    v = np.linspace(1e-3 * beta, 2 * beta, 97)
    np.testing.assert_allclose(ij.density(POS)(v), k.density(POS)(v), atol=1e-12)


def test_K_measure_mirror():
    up, down = make_K_measure(1.0, 2.0, 1), make_K_measure(1.0, 2.0, -1)
    t = np.linspace(-5, 5, 21)
    np.testing.assert_allclose(down.exponent(t), up.exponent(-t), atol=1e-15)
    assert down.triple.shift == -up.triple.shift


def test_catalog_registry():
    assert set(CATALOG) >= {"gaussian", "stable", "gamma", "sym_gamma", "bessel", "laplace_series", "levy_area", "wenocur", "K_measure", "comp_poisson_exp"}
    assert get_spec("gamma", alpha=2.0).params == {"alpha": 2.0, "lam": 1.0}
    with pytest.raises(KeyError):
        get_spec("nope")
    for name, maker in CATALOG.items():
        assert maker().name == name


@settings(max_examples=10)
@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_gamma_triple_property(alpha, lam):
    spec = make_gamma(alpha, lam)
    t = np.array([-4.0, 0.7, 9.0])
    assert np.max(np.abs(exponent_from_triple(spec.triple)(t) - spec.exponent(t))) <= 1e-6
