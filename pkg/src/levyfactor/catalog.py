"""Closed-form fixtures: exponents, Levy triples and expected class verdicts.

Every spec's exponent and triple describe the same law; the test suite checks
this by Levy-Khintchine quadrature.  ``known_classes`` lists the expected
verdicts along U, L, Lf, L1, L1f, L2, L2f (plus ID_log).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import special

from .core import LevyExponent, LevyTriple, SpectralDensityPair, Verdict
from .errors import DivergentCoefficients, ParamOutOfRange
from .membership import chain_order

KNOWN_DEPTH = 2


@dataclass(frozen=True)
class DistributionSpec:
    name: str
    params: dict
    exponent: LevyExponent
    triple: LevyTriple
    known_classes: dict
    note: str = ""
    family: str = "generic"
    components: dict = field(default_factory=dict)


def _chain_until(first_no: str | None) -> dict:
    """Expected verdicts: yes along the chain up to (excluding) ``first_no``."""
    out = {"ID_log": Verdict.YES}
    failed = False
    for cls in chain_order(KNOWN_DEPTH):
        failed = failed or cls == first_no
        out[cls] = Verdict.NO if failed else Verdict.YES
    return out


def _positive(**kw):
    for k, v in kw.items():
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise ParamOutOfRange(f"{k} must be a positive finite number, got {v!r}")


# --------------------------------------------------------------------------
# Gaussian and stable


def make_gaussian(var: float = 1.0, shift: float = 0.0) -> DistributionSpec:
    _positive(var=var)
    exp = LevyExponent(lambda t: 1j * shift * t - 0.5 * var * t**2, name="gaussian", params={"var": var, "shift": shift})
    return DistributionSpec(
        "gaussian", {"var": var, "shift": shift}, exp, LevyTriple(shift, var), _chain_until(None),
        "no jumps: every class holds", family="gaussian",
    )


def stable_density_constant(alpha: float) -> float:
    """``c`` with ``int (cos tx - 1) c |x|^{-1-alpha} dx = -|t|^alpha``."""
    if alpha == 1.0:
        return 1.0 / math.pi
    return alpha * (1 - alpha) / (2 * math.gamma(2 - alpha) * math.cos(math.pi * alpha / 2))


def make_stable(alpha: float = 1.5, scale: float = 1.0) -> DistributionSpec:
    """Symmetric stable law with exponent ``-scale |t|^alpha``."""
    _positive(alpha=alpha, scale=scale)
    if not alpha < 2:
        raise ParamOutOfRange(f"alpha must lie in (0, 2), got {alpha}; use make_gaussian for alpha = 2")
    c = scale * stable_density_constant(alpha)
    dens = lambda r: c * r ** (-1.0 - alpha)
    exp = LevyExponent(lambda t: -scale * t**alpha + 0j, name="stable", params={"alpha": alpha, "scale": scale})
    return DistributionSpec(
        "stable", {"alpha": alpha, "scale": scale}, exp, LevyTriple(0.0, 0.0, SpectralDensityPair(dens, dens)),
        _chain_until(None), "fixed point of I and J up to scale", family="stable",
    )


# --------------------------------------------------------------------------
# gamma family


def _gamma_parts(alpha, lam):
    shift = alpha * -math.expm1(-lam) / lam
    dens = lambda r: alpha * np.exp(-lam * r) / r
    phi = lambda t: -alpha * np.log(1 - 1j * t / lam)
    return shift, dens, phi


def _comp_poisson_parts(alpha, lam):
    # int_0^1 r alpha lam e^{-lam r} dr
    shift = alpha * (1 - math.exp(-lam) * (1 + lam)) / lam
    dens = lambda r: alpha * lam * np.exp(-lam * r)
    phi = lambda t: alpha * (lam / (lam - 1j * t) - 1)
    return shift, dens, phi


def make_gamma(alpha: float = 1.0, lam: float = 1.0) -> DistributionSpec:
    _positive(alpha=alpha, lam=lam)
    shift, dens, phi = _gamma_parts(alpha, lam)
    exp = LevyExponent(phi, name="gamma", params={"alpha": alpha, "lam": lam})
    return DistributionSpec(
        "gamma", {"alpha": alpha, "lam": lam}, exp, LevyTriple(shift, 0.0, SpectralDensityPair(dens)),
        _chain_until("L1"), "driver is compound Poisson with exponential jumps", family="gamma",
    )


def make_sym_gamma(alpha: float = 1.0) -> DistributionSpec:
    """Difference of two independent gamma(alpha, 1) variables."""
    _positive(alpha=alpha)
    dens = lambda r: alpha * np.exp(-r) / r
    exp = LevyExponent(lambda t: -alpha * np.log1p(t**2) + 0j, name="sym_gamma", params={"alpha": alpha})
    return DistributionSpec(
        "sym_gamma", {"alpha": alpha}, exp, LevyTriple(0.0, 0.0, SpectralDensityPair(dens, dens)),
        _chain_until("L1"), family="sym_gamma",
    )


def make_comp_poisson_exp(alpha: float = 1.0, lam: float = 1.0) -> DistributionSpec:
    """Compound Poisson law: rate ``alpha``, exponential(``lam``) jumps."""
    _positive(alpha=alpha, lam=lam)
    shift, dens, phi = _comp_poisson_parts(alpha, lam)
    exp = LevyExponent(phi, name="comp_poisson_exp", params={"alpha": alpha, "lam": lam})
    return DistributionSpec(
        "comp_poisson_exp", {"alpha": alpha, "lam": lam}, exp, LevyTriple(shift, 0.0, SpectralDensityPair(dens)),
        _chain_until("L"), "in U but r m(r) rises on (0, 1/lam)", family="comp_poisson",
    )


def make_comp_poisson_gamma2(alpha: float = 1.0, lam: float = 1.0) -> DistributionSpec:
    """Compound Poisson law: rate ``alpha``, gamma(2, ``lam``) jumps; the gamma law's ``rho``."""
    _positive(alpha=alpha, lam=lam)
    shift = alpha * (2 - math.exp(-lam) * (lam**2 + 2 * lam + 2)) / lam
    dens = lambda r: alpha * lam**2 * r * np.exp(-lam * r)
    exp = LevyExponent(lambda t: alpha * ((lam / (lam - 1j * t)) ** 2 - 1), name="comp_poisson_gamma2")
    return DistributionSpec(
        "comp_poisson_gamma2", {"alpha": alpha, "lam": lam}, exp, LevyTriple(shift, 0.0, SpectralDensityPair(dens)),
        _chain_until("U"), "jump density increases near 0", family="comp_poisson",
    )


def make_bessel(alpha: float = 1.0) -> DistributionSpec:
    """gamma(alpha, 1) convolved with the compound Poisson law of rate alpha, exponential(1) jumps."""
    _positive(alpha=alpha)
    s1, d1, p1 = _gamma_parts(alpha, 1.0)
    s2, d2, p2 = _comp_poisson_parts(alpha, 1.0)
    exp = LevyExponent(lambda t: p1(t) + p2(t), name="bessel", params={"alpha": alpha})
    dens = lambda r: d1(r) + d2(r)
    return DistributionSpec(
        "bessel", {"alpha": alpha}, exp, LevyTriple(s1 + s2, 0.0, SpectralDensityPair(dens)),
        _chain_until("Lf"), "r m(r) = alpha e^{-r} (1 + r) is decreasing but concave on (0, 1)", family="bessel",
        components={"gamma": LevyExponent(p1), "comp_poisson": LevyExponent(p2)},
    )


def make_L_not_Lf() -> DistributionSpec:
    """Selfdecomposable law outside L^f: ``r m(r) = 2 e^{-r} - e^{-2r}``.

    gamma(2, 1) minus the spectral measure of gamma(1, 2); ``r m`` is
    nonincreasing but concave near 0.
    """
    sa, da, pa = _gamma_parts(2.0, 1.0)
    sb, db, pb = _gamma_parts(1.0, 2.0)
    exp = LevyExponent(lambda t: pa(t) - pb(t), name="L_not_Lf")
    dens = lambda r: da(r) - db(r)
    return DistributionSpec(
        "L_not_Lf", {}, exp, LevyTriple(sa - sb, 0.0, SpectralDensityPair(dens)), _chain_until("Lf"),
        "constructed separator of L and L^f", family="constructed",
    )


# --------------------------------------------------------------------------
# series of Laplace variables


def _coefficient_array(coeffs, K):
    if callable(coeffs):
        if K is None or K < 1:
            raise ParamOutOfRange("a truncation K >= 1 is required for callable coefficients")
        a = np.array([float(coeffs(k)) for k in range(1, K + 1)])
    else:
        a = np.asarray(coeffs, dtype=float).ravel()
        if K is not None:
            a = a[:K]
    if a.size == 0 or not np.all(np.isfinite(a)) or np.any(a <= 0):
        raise ParamOutOfRange("coefficients must be positive and finite")
    return a


def square_sum_tail(a: np.ndarray) -> tuple[float, float]:
    """Power-law fit ``a_k^2 ~ C k^-p`` over the last decade; returns ``(p, tail bound)``.

    The tail bound estimates ``sum_{k > K} a_k^2``.  ``p`` is ``inf`` for
    short sequences, where the sum is simply finite.
    """
    K = a.size
    if K < 20:
        return math.inf, 0.0
    k1 = max(1, K // 10)
    p = -math.log(a[K - 1] ** 2 / a[k1 - 1] ** 2) / math.log(K / k1)
    if p <= 1:
        return p, math.inf
    return p, a[K - 1] ** 2 * K / (p - 1)


def _block_sum(fn, x, a, block=512):
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=complex if fn is _log_laplace else float)
    flat = x.reshape(-1, 1)
    for i in range(0, a.size, block):
        out += fn(flat, a[i : i + block]).sum(axis=1).reshape(x.shape)
    return out


def _log_laplace(t, a):
    return -np.log1p((a * t) ** 2) + 0j


def _laplace_density(r, a):
    return np.exp(-r / a) / r


def make_laplace_series(coeffs=(1.0,), K: int | None = None, name: str = "laplace_series") -> DistributionSpec:
    """Law of ``sum_k a_k eta_k`` with i.i.d. standard Laplace ``eta_k``, truncated at ``K`` terms.

    ``coeffs`` is a sequence or a callable ``k -> a_k`` (then ``K`` is
    required).  Square-summability is checked on the last decade of
    coefficients; a decay ``a_k^2 ~ k^-p`` with ``p <= 1.05`` raises
    ``DivergentCoefficients``.
    """
    a = _coefficient_array(coeffs, K)
    p, tail = square_sum_tail(a)
    if p <= 1.05:
        raise DivergentCoefficients(f"sum of a_k^2 does not converge numerically (a_k^2 ~ k^-{p:.3g})")
    dens = lambda r: _block_sum(_laplace_density, r, a)
    exp = LevyExponent(lambda t: _block_sum(_log_laplace, t, a), name=name, params={"K": a.size})
    return DistributionSpec(
        name, {"coeffs": a.tolist()}, exp,
        LevyTriple(0.0, 0.0, SpectralDensityPair(dens, dens)), _chain_until("L1"),
        f"truncated after {a.size} terms; omitted exponent is at most t^2 * {tail:.3g}", family="laplace_series",
        components={"coefficients": a, "tail_square_sum": tail},
    )


def levy_area_series(u: float = 1.0, K: int = 10_000) -> DistributionSpec:
    """Truncated Laplace series with ``a_k = u / (k pi)``, whose limit is the Levy area factor."""
    _positive(u=u)
    spec = make_laplace_series(lambda k: u / (k * math.pi), K, name="levy_area_series")
    return replace(spec, params={"u": u, "K": K})


# --------------------------------------------------------------------------
# Levy stochastic area and the Wenocur law


_SERIES_K = np.arange(1, 13)
_SINH_COEF = 1.0 / special.factorial(2 * _SERIES_K + 1)


def _sinh_ratio_minus_one(x):
    """``sinh(x) / x - 1`` without cancellation (series, for ``x < 1``)."""
    x2 = np.asarray(x, dtype=float)[..., None] ** 2
    return np.sum(_SINH_COEF * x2**_SERIES_K, axis=-1)


def _log_x_over_sinh(x):
    small = x < 1.0
    xs = np.where(small, 1.0, x)
    big = -xs + np.log(2 * xs) - np.log1p(-np.exp(-2 * xs))
    return np.where(small, -np.log1p(_sinh_ratio_minus_one(np.where(small, x, 0.0))), big)


def _one_minus_x_coth(x):
    small = x < 1.0
    xs = np.where(small, 1.0, x)
    x_in = np.where(small, x, 0.0)
    # x cosh x - sinh x = sum 2k x^{2k+1} / (2k+1)!, all terms positive
    num = np.sum(2 * _SERIES_K * _SINH_COEF * x_in[..., None] ** (2 * _SERIES_K), axis=-1)
    series = -num / (1 + _sinh_ratio_minus_one(x_in))
    return np.where(small, series, 1 - xs / np.tanh(xs))


def _log_cosh(t):
    small = t < 1.0
    ts = np.where(small, 1.0, t)
    big = ts - math.log(2) + np.log1p(np.exp(-2 * ts))
    return np.where(small, np.log1p(2 * np.sinh(np.where(small, t, 0.0) / 2) ** 2), big)


def make_levy_area(u: float = 1.0) -> DistributionSpec:
    """The selfdecomposable factor ``tu / sinh(tu)`` of the Levy area characteristic function.

    ``components`` holds the three exponents: ``factor`` (this law),
    ``driver`` (``1 - tu coth tu``, its background driving law) and
    ``product`` (their sum).  The spectral density is the summed Laplace
    series ``1 / (r (e^{pi r / u} - 1))`` on both tails.
    """
    _positive(u=u)
    factor = LevyExponent(lambda t: _log_x_over_sinh(t * u) + 0j, name="levy_area_factor", params={"u": u})
    driver = LevyExponent(lambda t: _one_minus_x_coth(t * u) + 0j, name="levy_area_driver", params={"u": u})
    product = LevyExponent(lambda t: _log_x_over_sinh(t * u) + _one_minus_x_coth(t * u) + 0j, name="levy_area_product")
    k = math.pi / u
    dens = lambda r: 1.0 / (r * np.expm1(k * r))
    driver_dens = lambda r: k / (4 * np.sinh(k * r / 2) ** 2)
    return DistributionSpec(
        "levy_area", {"u": u}, factor, LevyTriple(0.0, 0.0, SpectralDensityPair(dens, dens)), _chain_until(None),
        "L2 and L2f verified by high-precision differentiation", family="levy_area",
        components={
            "factor": factor, "driver": driver, "product": product,
            "driver_triple": LevyTriple(0.0, 0.0, SpectralDensityPair(driver_dens, driver_dens)),
        },
    )


def make_wenocur() -> DistributionSpec:
    """``(cosh t)^{-1/2}`` with driver exponent ``-t tanh(t) / 2``."""
    factor = LevyExponent(lambda t: -0.5 * _log_cosh(t) + 0j, name="wenocur_factor")
    driver = LevyExponent(lambda t: -0.5 * t * np.tanh(t) + 0j, name="wenocur_driver")
    product = LevyExponent(lambda t: -0.5 * _log_cosh(t) - 0.5 * t * np.tanh(t) + 0j, name="wenocur_product")
    dens = lambda r: 1.0 / (4 * r * np.sinh(math.pi * r / 2))
    return DistributionSpec(
        "wenocur", {}, factor, LevyTriple(0.0, 0.0, SpectralDensityPair(dens, dens)), _chain_until("L2f"),
        "in L2 but not L2f; verified by high-precision differentiation", family="wenocur",
        components={"factor": factor, "driver": driver, "product": product},
    )


# --------------------------------------------------------------------------
# K-measures: the image of a point mass under I o J


def _sin_minus(x):
    small = x < 1e-3
    xs = np.where(small, 1.0, x)
    return np.where(small, -(x**3) / 6 + x**5 / 120, np.sin(xs) - xs)


def _cin(x):
    """``int_0^x (1 - cos v) / v dv``."""
    small = x < 1e-2
    xs = np.where(small, 1.0, x)
    return np.where(small, x**2 / 4 - x**4 / 96 + x**6 / 4320, np.euler_gamma + np.log(xs) - special.sici(xs)[1])


def _k_measure_exponent(c, beta):
    """I(J(.)) of the Poisson exponent ``c (e^{i beta t} - 1) - i c beta t 1{beta <= 1}``."""
    kappa = -c * beta if beta <= 1 else 0.0

    def fn(t):
        x = beta * t
        si = special.sici(x)[0]
        # (e^{ix} - 1 - ix) / (ix), written without cancellation
        head = (_sin_minus(x) + 2j * np.sin(x / 2) ** 2) / x
        return c * (-head - _cin(x) + 1j * si) + 0.5j * kappa * t

    return fn


def make_K_measure(alpha: float = 1.0, beta: float = 1.0, sign: int = 1) -> DistributionSpec:
    """Density ``alpha (beta / v - 1)`` on ``(0, beta)`` (mirrored for ``sign = -1``)."""
    _positive(alpha=alpha, beta=beta)
    if sign not in (1, -1):
        raise ParamOutOfRange(f"sign must be +1 or -1, got {sign}")
    c = alpha * beta
    dens = lambda r: np.where(r < beta, alpha * (beta / r - 1), 0.0)
    # mean of the point-mass law halves under I o J; remove the part centred outside |x| <= 1
    big = alpha * (beta * (beta - 1) - (beta**2 - 1) / 2) if beta > 1 else 0.0
    mean_rho = c * beta if beta > 1 else 0.0
    shift = mean_rho / 2 - big
    base = _k_measure_exponent(c, beta)
    fn = base if sign == 1 else (lambda t: np.conj(base(t)))
    spec = SpectralDensityPair(dens, breaks=(beta,))
    if sign == -1:
        spec, shift = spec.mirror(), -shift
    exp = LevyExponent(fn, name="K_measure", params={"alpha": alpha, "beta": beta, "sign": sign})
    return DistributionSpec(
        "K_measure", {"alpha": alpha, "beta": beta, "sign": sign}, exp, LevyTriple(shift, 0.0, spec),
        _chain_until("L1"), "I o J image of the point mass alpha beta at beta", family="K_measure",
    )


# --------------------------------------------------------------------------
# registry

CATALOG: dict[str, Callable[..., DistributionSpec]] = {
    "gaussian": make_gaussian,
    "stable": make_stable,
    "gamma": make_gamma,
    "sym_gamma": make_sym_gamma,
    "comp_poisson_exp": make_comp_poisson_exp,
    "comp_poisson_gamma2": make_comp_poisson_gamma2,
    "bessel": make_bessel,
    "L_not_Lf": make_L_not_Lf,
    "laplace_series": make_laplace_series,
    "levy_area_series": levy_area_series,
    "levy_area": make_levy_area,
    "wenocur": make_wenocur,
    "K_measure": make_K_measure,
}


def get_spec(name: str, **params) -> DistributionSpec:
    try:
        maker = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown catalog entry {name!r}; known: {sorted(CATALOG)}") from None
    return maker(**params)


def default_fixtures() -> list[DistributionSpec]:
    """One representative per catalog entry (plus a few parameter variants)."""
    return [
        make_gaussian(1.0),
        make_stable(0.5),
        make_stable(1.0),
        make_stable(1.5),
        make_gamma(2.0, 1.0),
        make_gamma(0.5, 3.0),
        make_sym_gamma(1.0),
        make_comp_poisson_exp(2.0, 1.0),
        make_comp_poisson_gamma2(2.0, 1.0),
        make_bessel(1.0),
        make_L_not_Lf(),
        make_laplace_series((1.0, 0.5, 0.25)),
        make_levy_area(1.0),
        make_wenocur(),
        make_K_measure(0.75, 2.0),
        make_K_measure(1.0, 0.5, sign=-1),
    ]
