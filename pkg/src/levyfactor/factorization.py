"""Factorization of selfdecomposable laws.

For ``mu`` in class L the background driving law is ``nu = I^{-1}(mu)``.
``mu`` has the factorization property (``mu * nu`` is again selfdecomposable)
exactly when ``nu`` is in class U, i.e. ``nu = J(rho)``; then

    I(nu) * nu = I(rho),  that is  Phi_mu + Phi_nu = Phi_{I(rho)}.

``factorize`` computes ``nu`` along two independent routes (scaling
derivative of the exponent, and the inverse map on the spectral density),
recovers ``rho`` and certifies the identity numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import DIRECTIONS, LevyExponent, LevyTriple, Verdict, tabulate_density
from .errors import NotClassL, RouteDisagreement, Undecidable
from .exponents import apply_I, apply_J, exponent_from_triple, invert_I, invert_J
from .membership import MembershipReport, Witness, classify
from .spectral import log_moment_status, triple_I, triple_invert_I, triple_invert_J

ROUTE_TOL = 1e-5
# phi_rho is a nested finite difference (noise ~ eps / h^2), so its I-transform is
# integrated to a tolerance well below IDENTITY_TOL but above that noise
NUMERIC_EPSREL = 1e-9
NUMERIC_EPSABS = 1e-11
# rho's density is a nested finite difference with noise ~ (1.5 / h)^2 eps ~ 5e-10
RHO_LK_TOL = 1e-7
IDENTITY_TOL = 1e-6
T_MAX = 10.0
CHECK_POINTS = 9
GRID_POINTS = 41


@dataclass(frozen=True)
class Law:
    triple: LevyTriple
    exponent: LevyExponent


@dataclass(frozen=True)
class FactorizationCertificate:
    mu: Law
    nu: Law
    rho: Law | None
    identity_residual: float | None
    nu_report: MembershipReport
    rho_log_moment: Verdict | None
    t_grid: np.ndarray
    tol: float
    route_discrepancy: float
    rho_route_discrepancy: float | None
    witness: Witness | None = None

    @property
    def in_Lf(self) -> Verdict:
        return self.nu_report["U"]

    @property
    def valid(self) -> bool:
        return (
            self.in_Lf is Verdict.YES
            and self.identity_residual is not None
            and self.identity_residual <= self.tol
        )


@dataclass(frozen=True)
class IdentityReport:
    """Sup residuals over ``0 < t <= t_max`` (both identities are Hermitian)."""

    j_residual: float
    factorization_residual: float
    t_grid: np.ndarray
    tol: float

    @property
    def passed(self) -> bool:
        return self.j_residual <= self.tol and self.factorization_residual <= self.tol


def default_t_grid(t_max: float = T_MAX, points: int = GRID_POINTS) -> np.ndarray:
    return np.linspace(t_max / points, t_max, points)


def convolve(a: LevyTriple, b: LevyTriple) -> LevyTriple:
    """Triple of ``a * b``: shifts, variances and spectral measures add."""
    return a + b


def verify_identity(nu: LevyExponent, rho: LevyExponent, t_max: float = T_MAX, tol: float = IDENTITY_TOL, points: int = GRID_POINTS) -> IdentityReport:
    """Residuals of ``nu = J(rho)`` and of ``I(nu) * nu = I(rho)`` in exponent form."""
    t = default_t_grid(t_max, points)
    nu_t = nu(t)
    j_res = float(np.max(np.abs(nu_t - apply_J(rho)(t))))
    f_res = float(np.max(np.abs(apply_I(nu)(t) + nu_t - apply_I(rho)(t))))
    return IdentityReport(j_res, f_res, t, tol)


def _route_gap(triple: LevyTriple, exponent: LevyExponent, t: np.ndarray, rel_tol: float = 1e-10) -> float:
    lk = exponent_from_triple(triple, rel_tol)(t)
    ex = exponent(t)
    return float(np.max(np.abs(lk - ex) / np.maximum(1.0, np.abs(ex))))


def _tabulated(triple: LevyTriple) -> LevyTriple:
    M = triple.spectral
    dens = [
        tabulate_density(M.density(d), M.breaks_for(d), (lambda r, d=d: M.floor(d, r)) if M.floors else None)
        for d in DIRECTIONS
    ]
    return LevyTriple(triple.shift, triple.gaussian_var, replace(M, pos_density=dens[0], neg_density=dens[1]))


def factorize(mu, exponent: LevyExponent | None = None, t_max: float = T_MAX, tol: float = IDENTITY_TOL) -> FactorizationCertificate:
    """Driver ``nu``, factor ``rho`` and the identity residual for a law in class L.

    ``mu`` is a ``LevyTriple`` or anything with ``.triple`` and ``.exponent``
    (a catalog spec).  Without an exponent the Levy-Khintchine quadrature of
    the triple is used.  Raises ``NotClassL`` (with the witness) when ``mu``
    is not selfdecomposable and ``RouteDisagreement`` when the exponent and
    spectral routes to ``nu`` differ by more than ``1e-5``.
    """
    if not isinstance(mu, LevyTriple):
        exponent = exponent or mu.exponent
        mu = mu.triple
    quadrature_mu = exponent is None
    phi_mu = exponent or exponent_from_triple(mu)

    report = classify(mu, max_n=0)
    if report["L"] is Verdict.NO:
        w = report.witness_for("L")
        raise NotClassL(f"law is not selfdecomposable: {w.note if w else ''}", witness=w)
    if report["L"] is Verdict.UNDECIDED:
        raise Undecidable("class-L test is undecided; r m(r) is within rounding of a violation")

    nu_triple = triple_invert_I(mu, check=False)
    phi_nu = invert_I(phi_mu)
    check_t = default_t_grid(t_max, CHECK_POINTS)
    gap = _route_gap(nu_triple, phi_nu, check_t)
    if gap > ROUTE_TOL:
        raise RouteDisagreement(f"exponent and spectral routes to the driver differ by {gap:.3g}", discrepancy=gap)

    nu_report = classify(nu_triple, max_n=0)
    t_grid = default_t_grid(t_max)
    if nu_report["U"] is not Verdict.YES:
        return FactorizationCertificate(
            Law(mu, phi_mu), Law(nu_triple, phi_nu), None, None, nu_report, None, t_grid, tol, gap,
            None, nu_report.witness_for("U"),
        )

    rho_triple = triple_invert_J(nu_triple, check=False)
    phi_rho = invert_J(phi_nu)
    rho_check = check_t[:: max(1, CHECK_POINTS // 4)]
    rho_log, _ = log_moment_status(rho_triple.spectral, 1)
    if quadrature_mu:
        # phi_nu is already a finite difference of a quadrature; a second
        # difference layer under apply_I costs minutes, so rho and I(rho) are
        # taken from tabulated spectral densities and integrated directly
        rho_tab = _tabulated(rho_triple)
        rho_gap = _route_gap(rho_tab, phi_rho, rho_check, RHO_LK_TOL)
        phi_rho = exponent_from_triple(rho_tab, RHO_LK_TOL)
        i_rho = exponent_from_triple(_tabulated(triple_I(rho_tab)), RHO_LK_TOL)
    else:
        rho_gap = _route_gap(rho_triple, phi_rho, rho_check, RHO_LK_TOL)
        i_rho = apply_I(phi_rho, NUMERIC_EPSREL, NUMERIC_EPSABS)
    residual = float(np.max(np.abs(phi_mu(t_grid) + phi_nu(t_grid) - i_rho(t_grid))))
    return FactorizationCertificate(
        Law(mu, phi_mu), Law(nu_triple, phi_nu), Law(rho_triple, phi_rho), residual, nu_report, rho_log,
        t_grid, tol, gap, rho_gap,
    )
