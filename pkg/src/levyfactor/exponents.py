"""The random-integral maps I, J and I∘J acting on Levy exponents, and their inverses.

Forward maps are quadratures of scaled exponents::

    I(Phi)(t)  = int_0^inf Phi(e^{-s} t) ds   (= int_0^1 Phi(u t) du / u)
    J(Phi)(t)  = int_0^1 Phi(s t) ds
    IJ(Phi)(t) = int_0^1 int_0^w Phi(u t) / w^2 du dw

Inverses are scaling derivatives ``g(s) = Phi(s t)`` at ``s = 1``::

    I^{-1}:  g'(1)            J^{-1}:  g(1) + g'(1)
    (IJ)^{-1}: 2 g'(1) + g''(1)
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import (
    DIRECTIONS,
    NEG,
    POS,
    LevyExponent,
    LevyTriple,
    _quad_real,
    integrate_tail,
    is_zero_density,
    scaling_derivatives,
)
from .errors import NonConvergent

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-11
# absolute floor of the Levy-Khintchine pieces relative to rel_tol; exponents are O(1)
# and noisy (finite-difference) densities would otherwise exhaust the subdivision limit
ABS_FLOOR = 1e-2
FD_STEP = 1e-3
FD_GUARD = 1e-5
FAR_CYCLES = 50
# the I-integrand is probed at these depths; with a log moment it decays faster than 1/s
DECAY_DEPTHS = (100.0, 200.0)
DECAY_POWER = 1.05
DECAY_FLOOR = 1e-4


@dataclass(frozen=True)
class ExponentTransformResult:
    exponent: LevyExponent
    method: str
    est_error: float

    def __post_init__(self):
        if not self.est_error >= 0:
            raise ValueError("est_error must be nonnegative")


def _quad_vec(f, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=2000):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, err, info = integrate.quad_vec(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit, full_output=True)
    scale = float(np.max(np.abs(val))) if np.size(val) else 0.0
    if not info.success or not np.all(np.isfinite(val)) or err > max(100 * epsrel * scale, 100 * epsabs):
        raise NonConvergent(
            f"quadrature over ({a}, {b}) did not converge: error estimate {err:.3g} for values of size {scale:.3g}",
            estimate=scale,
            error=err,
        )
    return val, err


def _positive_args(phi):
    return lambda x: phi(np.asarray(x, dtype=float))


def _check_log_decay(phi, t):
    """Raise when ``s -> Phi(e^{-s} t)`` decays no faster than ``1/s``.

    Arguments below ``TINY_T`` evaluate to 0, so quadrature alone would
    return a finite value for a logarithmically divergent integral.
    """
    t = np.atleast_1d(t)
    sa, sb = DECAY_DEPTHS
    ga = np.abs(phi(math.exp(-sa) * t))
    gb = np.abs(phi(math.exp(-sb) * t))
    significant = gb * sb > DECAY_FLOOR
    if not np.any(significant):
        return
    power = np.log(ga[significant] / gb[significant]) / math.log(sb / sa)
    if np.any(power < DECAY_POWER):
        raise NonConvergent(
            f"I-integrand decays like s^-{float(np.min(power)):.3g} at depth {sb:g}; the law lacks a log moment",
            estimate=float(np.max(gb)),
        )


def _i_values(phi, t, epsrel=QUAD_EPSREL, epsabs=QUAD_EPSABS):
    _check_log_decay(phi, t)
    return _quad_vec(lambda s: phi(math.exp(-s) * t), 0.0, np.inf, epsabs, epsrel)


def _j_values(phi, t, epsrel=QUAD_EPSREL, epsabs=QUAD_EPSABS):
    return _quad_vec(lambda s: phi(s * t), 0.0, 1.0, epsabs, epsrel)


def _ij_values(phi, t, epsrel=QUAD_EPSREL, epsabs=QUAD_EPSABS):
    def inner(w):
        if w == 0.0:
            return np.zeros_like(t, dtype=complex)
        val, _ = _quad_vec(lambda u: phi(u * t), 0.0, w, epsabs=epsabs / 10, epsrel=epsrel / 10)
        return val / (w * w)

    return _quad_vec(inner, 0.0, 1.0, epsabs, epsrel)


def apply_I(phi: LevyExponent, epsrel: float = QUAD_EPSREL, epsabs: float = QUAD_EPSABS) -> LevyExponent:
    """Exponent of ``I(rho)``, the law of ``int_0^inf e^{-s} dY_rho(s)``.

    Raises ``NonConvergent`` on evaluation when ``rho`` lacks a log moment
    (the integral diverges logarithmically).  Loosen ``epsrel`` for
    integrands that are themselves numerical (e.g. finite differences).
    """
    return LevyExponent(lambda t: _i_values(phi, t, epsrel, epsabs)[0], provenance="quadrature_derived", name="I")


def apply_J(phi: LevyExponent, epsrel: float = QUAD_EPSREL, epsabs: float = QUAD_EPSABS) -> LevyExponent:
    """Exponent of ``J(rho)``, the law of ``int_0^1 s dY_rho(s)``."""
    return LevyExponent(lambda t: _j_values(phi, t, epsrel, epsabs)[0], provenance="quadrature_derived", name="J")


def apply_IJ(phi: LevyExponent, epsrel: float = QUAD_EPSREL, epsabs: float = QUAD_EPSABS) -> LevyExponent:
    """``I(J(rho))`` evaluated as the iterated double integral (inner 10x tighter)."""
    return LevyExponent(lambda t: _ij_values(phi, t, epsrel, epsabs)[0], provenance="quadrature_derived", name="IJ")


def invert_I(phi_mu: LevyExponent, h: float = FD_STEP, guard: float = FD_GUARD) -> LevyExponent:
    """Background driving exponent ``t Phi'(t)`` of a selfdecomposable law."""
    return LevyExponent(
        lambda t: scaling_derivatives(phi_mu, t, h, guard, second=False)[1], provenance="quadrature_derived", name="I^-1"
    )


def invert_J(phi_nu: LevyExponent, h: float = FD_STEP, guard: float = FD_GUARD) -> LevyExponent:
    """``d/dt [t Phi(t)] = Phi(t) + t Phi'(t)``."""

    def fn(t):
        g, d1, _ = scaling_derivatives(phi_nu, t, h, guard, second=False)
        return g + d1

    return LevyExponent(fn, provenance="quadrature_derived", name="J^-1")


def invert_IJ(phi_mu: LevyExponent, h: float = FD_STEP, guard: float = FD_GUARD) -> LevyExponent:
    """``d/dt [t^2 Phi'(t)] = 2 t Phi'(t) + t^2 Phi''(t)``."""

    def fn(t):
        _, d1, d2 = scaling_derivatives(phi_mu, t, h, guard)
        return 2 * d1 + d2

    return LevyExponent(fn, provenance="quadrature_derived", name="(IJ)^-1")


_FORWARD = {"I": _i_values, "J": _j_values, "IJ": _ij_values}


def transform(phi: LevyExponent, kind: str, t) -> ExponentTransformResult:
    """Evaluate a forward map on ``t`` and report the quadrature error estimate."""
    if kind not in _FORWARD:
        raise ValueError(f"unknown transform {kind!r}; expected one of {sorted(_FORWARD)}")
    t = np.abs(np.asarray(t, dtype=float))
    t = t[t > 0]
    err = float(_FORWARD[kind](phi, t)[1]) if t.size else 0.0
    exp = {"I": apply_I, "J": apply_J, "IJ": apply_IJ}[kind](phi)
    return ExponentTransformResult(exp, "quadrature", err)


# --------------------------------------------------------------------------
# Levy-Khintchine quadrature


def _sin_minus(x):
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    xs = np.where(small, x, 0.0)
    series = -(xs**3) / 6 + xs**5 / 120
    return np.where(small, series, np.sin(x) - x)


def _shrinking(f, b, y):
    """Integrand of ``int_0^b f`` after ``r = b e^{-y}``."""
    if y > 700:
        return 0.0
    r = b * math.exp(-y)
    with np.errstate(all="ignore"):
        out = float(f(np.asarray(r))) * r
    return out if math.isfinite(out) else 0.0


def _near_zero(f, t, part, hi, breaks, rel):
    """``int_0^hi k(t r) f(r) dr`` with ``k = cos - 1`` or ``sin - id``."""
    kern = (lambda x: -2.0 * np.sin(x / 2) ** 2) if part == "cos" else _sin_minus
    pts = [0.0] + [b for b in breaks if 0 < b < hi] + [hi]
    # both kernels vanish like t^2 (t^3) at small t; the floor must follow them
    floor = ABS_FLOOR * rel * min(1.0, t) ** (2 if part == "cos" else 3)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if a == 0.0:
            g = lambda y, b=b: _shrinking(lambda r: kern(t * r) * f(r), b, y)
            total += _quad_real(g, 0.0, np.inf, rel, floor, 400)[0]
        else:
            g = lambda r: float(kern(t * r) * f(np.asarray(r)))
            total += _quad_real(g, a, b, rel, floor, 400)[0]
    return total


def _far(f, t, part, lo, breaks, rel):
    """``int_lo^inf k(t r) f(r) dr`` with ``k = cos - 1`` or ``sin``.

    Finite pieces integrate ``k`` directly so that ``cos - 1`` never cancels
    against the tail mass; beyond the last piece QUADPACK's Fourier routine
    takes over.
    """
    pts = [lo] + [b for b in breaks if b > lo]
    # QAWF's first cycle spans pi / t; for small t it can step over the whole
    # mass of f and report 0, so cover [pts[-1], FAR_CYCLES pi / t] by decades first
    top = max(10 * pts[-1], FAR_CYCLES * math.pi / t)
    n_dec = max(1, math.ceil(math.log10(top / pts[-1])))
    pts += list(np.geomspace(pts[-1], top, n_dec + 1)[1:])
    kern = (lambda x: -2.0 * np.sin(x / 2) ** 2) if part == "cos" else np.sin
    floor = ABS_FLOOR * rel * min(1.0, t) ** 2
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        g = lambda r: float(kern(t * r) * f(np.asarray(r)))
        total += _quad_real(g, a, b, rel, floor, 400)[0]
    # the tail mass bounds the remaining integral, so it sets the absolute scale
    mass = float(integrate_tail(f, pts[-1], breaks))
    if mass == 0.0:
        return total
    g = lambda r: float(f(np.asarray(r)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        res = integrate.quad(g, pts[-1], np.inf, weight=part, wvar=t, epsabs=rel * mass, limlst=200, limit=400, full_output=1)
    if not (math.isfinite(res[0]) and abs(res[0]) <= 2 * mass and res[1] <= 100 * rel * mass):
        # QAWF gives up on slow oscillation; plain adaptive quadrature copes there
        trig = np.cos if part == "cos" else np.sin
        res = _quad_real(lambda r: float(trig(t * r) * f(np.asarray(r))), pts[-1], np.inf, rel, rel * mass, 2000)
    total += res[0]
    if part == "cos":
        total -= mass
    return total


def levy_khintchine(triple: LevyTriple, t, rel_tol: float = 1e-10) -> np.ndarray:
    """Exponent of ``triple`` at positive ``t`` by direct quadrature."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    spec = triple.spectral
    out = 1j * t * triple.shift - 0.5 * triple.gaussian_var * t**2
    out = out.astype(complex)
    for k, tk in enumerate(t):
        re = im = 0.0
        for d in DIRECTIONS:
            f = spec.density(d)
            if is_zero_density(f):
                continue
            sgn = 1.0 if d == POS else -1.0
            br = spec.breaks_for(d)
            re += _near_zero(f, tk, "cos", 1.0, br, rel_tol) + _far(f, tk, "cos", 1.0, br, rel_tol)
            im += sgn * (_near_zero(f, tk, "sin", 1.0, br, rel_tol) + _far(f, tk, "sin", 1.0, br, rel_tol))
        out[k] += re + 1j * im
    for x, w in spec.atoms:
        out += w * (np.exp(1j * t * x) - 1 - 1j * t * x * (abs(x) <= 1))
    return out


def exponent_from_triple(triple: LevyTriple, rel_tol: float = 1e-10) -> LevyExponent:
    return LevyExponent(lambda t: levy_khintchine(triple, t, rel_tol), provenance="quadrature_derived", name="LK")
