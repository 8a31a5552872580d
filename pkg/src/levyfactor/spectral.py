"""I, J, I∘J and their inverses on Levy spectral measures.

Per direction, with ``tail_G(r) = G((r, inf))``::

    I:   m(r) = tail_G(r) / r
    J:   n(x) = int_{(x, inf)} G(dv) / v
    IJ:  m(r) = int_{(r, inf)} (1/r - 1/v) G(dv)
    I^-1: g(r) = -d/dr [r m(r)]
    J^-1: g(x) = -x n'(x), jumps of n become atoms of mass  x * (size of jump)

Atoms of ``G`` are handled analytically by the forward maps.  Outputs of the
forward maps are quadrature-backed callables; the inverses use log-step
finite differences that never straddle a declared break.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DIRECTIONS,
    EPS,
    NEG,
    POS,
    GridFunction,
    LevyTriple,
    SpectralDensityPair,
    Verdict,
    integrate_tail,
    is_zero_density,
    radial_derivative,
    standard_grid,
    zero_density,
)
from .errors import LogMomentDivergent, NotClassL, NotClassU
from .shape import check_monotone

QUAD_NOISE = 1e-10
FD_STEP = 1e-3
JUMP_REL = 1e-3


def _fd_floor(pair: SpectralDensityPair, d: str, h: float):
    """Absolute error of ``-d/dlog r`` applied to ``pair``'s ``d`` density (or to ``r`` times it, over ``r``)."""
    f = pair.density(d)
    if is_zero_density(f):
        return None
    noise = max(pair.noise, EPS)
    return lambda r: (noise * np.abs(f(r)) + pair.floor(d, r)) * 1.5 / h


@dataclass(frozen=True)
class SpectralTransformResult:
    spectral: SpectralDensityPair
    tails: dict
    method: str


@dataclass(frozen=True)
class LevySpectralFunction:
    """``L_M`` on one half-line, tabulated against the signed abscissa ``x``.

    On both halves ``L_M`` is nondecreasing in ``x``: ``-M((x, inf))`` for
    ``x > 0`` and ``M((-inf, x))`` for ``x < 0``.
    """

    direction: str
    values: GridFunction


# --------------------------------------------------------------------------
# log moments


LOG_R_A, LOG_R_B = math.log(1e4), math.log(1e6)
POWER_TOL = 0.02
# the log-exponent fit is biased by about +0.003 at the borderline q = 1
LOG_Q_NO = 1.01
LOG_Q_YES = 1.3


def _log_moment_direction(f, order):
    """Decay of ``h(r) = log^order(1+r) f(r) r`` on ``[1e4, 1e6]``.

    ``int_1^inf log^order(1+r) f(r) dr = int h d(log r)``.  The log-slopes of
    ``h`` at the two ends are fitted to ``h ~ C r^-p (log r)^-q``; the
    integral converges for ``p > 0`` or ``p = 0, q > 1``.
    """
    if is_zero_density(f):
        return Verdict.YES, None

    def h(y):
        r = math.exp(y)
        return math.log1p(r) ** order * float(f(np.asarray(r))) * r

    def slope(y):
        lo, hi = h(y - 0.5), h(y + 0.5)
        if not (lo > 0 and hi > 0):
            return -np.inf
        return math.log(hi / lo)

    if h(LOG_R_B) == 0.0:
        return Verdict.YES, None
    s_a, s_b = slope(LOG_R_A), slope(LOG_R_B)
    if not math.isfinite(s_b):
        return Verdict.YES, None
    q = (s_b - s_a) / (1 / LOG_R_A - 1 / LOG_R_B)
    p = -s_b - q / LOG_R_B
    if p > POWER_TOL:
        return Verdict.YES, None
    if p < -POWER_TOL:
        return Verdict.NO, f"integrand grows like r^{-p:.3g} beyond r = 1e4"
    if q >= LOG_Q_YES:
        return Verdict.YES, None
    if q <= 0:
        return Verdict.NO, f"integrand grows like (log r)^{-q:.3g}"
    if q <= LOG_Q_NO:
        return Verdict.NO, f"integrand decays like (log r)^-{q:.3g}, too slowly"
    return Verdict.UNDECIDED, f"integrand decays like (log r)^-{q:.3g}, too close to the borderline 1"


def log_moment_status(spec: SpectralDensityPair, order: int = 1) -> tuple[Verdict, str | None]:
    """Is ``int_{|x|>1} log^order(1+|x|) M(dx)`` finite?  Returns verdict and a note.

    Finitely many atoms never matter, so only the densities are examined.
    """
    verdicts, notes = [], []
    for d in DIRECTIONS:
        v, note = _log_moment_direction(spec.density(d), order)
        verdicts.append(v)
        if note:
            notes.append(f"{d}: {note}")
    return Verdict.all_of(*verdicts), "; ".join(notes) or None


def _require_log_moment(G: SpectralDensityPair):
    v, note = log_moment_status(G, 1)
    if v is Verdict.NO:
        raise LogMomentDivergent(f"spectral measure has no finite log moment ({note})")


# --------------------------------------------------------------------------
# forward maps


def _with_atoms(base, atoms, kernel):
    """``base(r) + sum_atoms kernel(r, beta, c)``."""
    if not atoms and base is None:
        return zero_density

    def f(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r) if base is None else base(r)
        for beta, c in atoms:
            out = out + kernel(r, beta, c)
        return out

    return f


def _quad_map(f, breaks, integrand):
    """``r -> int_r^inf integrand(r, v) f(v) dv`` evaluated pointwise."""
    if is_zero_density(f):
        return None

    def out(r):
        r = np.asarray(r, dtype=float)
        res = np.empty(r.shape)
        for idx, r0 in np.ndenumerate(r):
            res[idx] = integrate_tail(lambda v: integrand(r0, v) * f(v), r0, breaks)
        return res

    return out


def _map_pair(G: SpectralDensityPair, integrand, atom_kernel) -> SpectralDensityPair:
    dens = {}
    for d in DIRECTIONS:
        base = _quad_map(G.density(d), G.breaks_for(d), integrand)
        dens[d] = _with_atoms(base, G.atoms_for(d), atom_kernel)
    breaks = set(G.breaks) | {abs(x) for x, _ in G.atoms}
    return SpectralDensityPair(dens[POS], dens[NEG], (), tuple(breaks), max(G.noise, QUAD_NOISE))


def _tail_over_r(f, breaks):
    if is_zero_density(f):
        return None
    return lambda r: integrate_tail(f, r, breaks) / np.asarray(r, dtype=float)


def spectral_I(G: SpectralDensityPair) -> SpectralDensityPair:
    """Spectral measure of ``I(rho)`` from that of ``rho``: density ``tail_G(r) / r``."""
    _require_log_moment(G)
    dens = {d: _with_atoms(_tail_over_r(G.density(d), G.breaks_for(d)), G.atoms_for(d), lambda r, b, c: c * (r < b) / r)
            for d in DIRECTIONS}
    breaks = set(G.breaks) | {abs(x) for x, _ in G.atoms}
    return SpectralDensityPair(dens[POS], dens[NEG], (), tuple(breaks), max(G.noise, QUAD_NOISE))


def spectral_J(G: SpectralDensityPair) -> SpectralDensityPair:
    """Spectral measure of ``J(rho)``: density ``int_x^inf G(dv)/v`` (nonincreasing)."""
    return _map_pair(G, lambda r, v: 1.0 / v, lambda r, b, c: c * (r < b) / b)


def spectral_IJ(G: SpectralDensityPair) -> SpectralDensityPair:
    """Spectral measure of ``I(J(rho))`` by one quadrature per point.

    ``int_r^inf (w - r) / w^2 L_G(w) dw`` differentiated in ``r`` and
    integrated by parts gives the kernel ``1/r - 1/v``.
    """
    _require_log_moment(G)
    return _map_pair(G, lambda r, v: 1.0 / r - 1.0 / v, lambda r, b, c: c * (r < b) * (1.0 / r - 1.0 / b))


# --------------------------------------------------------------------------
# inverses


def _radial(f, breaks, h):
    return lambda r: radial_derivative(f, r, h, breaks)


def _invert_I_density(f, breaks, h):
    if is_zero_density(f):
        return f
    rm = lambda r: np.asarray(r) * f(r)
    d = _radial(rm, breaks, h)
    return lambda r: -d(r)


def spectral_invert_I(M: SpectralDensityPair, grid=None, check: bool = True, h: float = FD_STEP) -> SpectralDensityPair:
    """Driver spectral measure of a selfdecomposable law: ``g = -(r m)'``.

    With ``check`` the class-L structure is verified first (no atoms,
    ``r m(r)`` nonincreasing); failure raises ``NotClassL`` with a witness.
    """
    if check:
        if M.atoms:
            x, w = M.atoms[0]
            raise NotClassL(f"atom at {x} (mass {w}) is incompatible with class L", witness=("atom", x, w))
        grid = standard_grid() if grid is None else grid
        for d in DIRECTIONS:
            f = M.density(d)
            if is_zero_density(f):
                continue
            res = check_monotone(grid, grid * f(grid), noise=M.noise, floor=grid * M.floor(d, grid))
            if res.verdict is Verdict.NO:
                raise NotClassL(
                    f"r m(r) increases on {res.interval} ({d} tail, relative rise {res.magnitude:.3g})",
                    witness=(d, res.interval, res.magnitude),
                )
    dens = {d: _invert_I_density(M.density(d), M.breaks_for(d), h) for d in DIRECTIONS}
    floors = tuple(_fd_floor(M, d, h) for d in DIRECTIONS)
    return SpectralDensityPair(dens[POS], dens[NEG], (), M.breaks, max(M.noise, EPS), floors)


def _locate_jump(f, a, b, size_hint):
    """Bisect ``[a, b]`` (geometrically) toward the largest drop of ``f``."""
    fa, fb = float(f(np.asarray(a))), float(f(np.asarray(b)))
    for _ in range(80):
        if b / a - 1 < 1e-13:
            break
        mid = math.sqrt(a * b)
        fm = float(f(np.asarray(mid)))
        if fa - fm >= fm - fb:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    jump = fa - fb
    if jump > 0.5 * size_hint and jump > JUMP_REL * abs(fa):
        return b, jump
    return None


def jump_at(f, b: float, rel: float = JUMP_REL) -> float:
    """Size of a downward jump of ``f`` at ``b`` (0 when ``f`` is continuous there).

    A jump shows as a left/right difference that does not shrink with the
    gap; a continuous function's difference scales with it.
    """
    right = float(f(np.asarray(b)))
    d1 = float(f(np.asarray(b * (1 - 1e-9)))) - right
    d2 = float(f(np.asarray(b * (1 - 1e-11)))) - right
    local = max(abs(float(f(np.asarray(b * (1 - 1e-3))))), abs(float(f(np.asarray(b * (1 + 1e-3))))), abs(right))
    if d2 > rel * local and abs(d1 - d2) <= 0.5 * d2:
        return d2
    return 0.0


def detect_jumps(f, grid, breaks=(), rel: float = JUMP_REL) -> list[tuple[float, float]]:
    """Downward jumps of a nonincreasing function as ``(location, size)``.

    Declared breaks are probed directly.  On the grid, an interval is a
    candidate when its relative drop exceeds ``rel`` and dwarfs both
    neighbouring drops; candidates are confirmed by bisection, which a
    smooth decrease does not survive.
    """
    found = {}
    for b in breaks:
        size = jump_at(f, b, rel)
        if size > 0:
            found[b] = size
    vals = f(grid)
    drops = vals[:-1] - vals[1:]
    scale = np.maximum(np.abs(vals[:-1]), 1e-300)
    prev = np.concatenate([[0.0], drops[:-1]])
    nxt = np.concatenate([drops[1:], [0.0]])
    cand = np.flatnonzero((drops > rel * scale) & (drops > 4 * np.maximum(prev, nxt)))
    for i in cand:
        if any(grid[i] <= b <= grid[i + 1] for b in found):
            continue
        hit = _locate_jump(f, grid[i], grid[i + 1], drops[i])
        if hit is not None:
            found[hit[0]] = hit[1]
    return sorted(found.items())


def spectral_invert_J(N: SpectralDensityPair, grid=None, check: bool = True, h: float = FD_STEP) -> SpectralDensityPair:
    """Recover ``G`` from ``N = J(G)``: density ``-x n'(x)`` plus atoms at jumps of ``n``."""
    grid = standard_grid() if grid is None else grid
    if check:
        if N.atoms:
            x, w = N.atoms[0]
            raise NotClassU(f"atom at {x} (mass {w}) is incompatible with class U", witness=("atom", x, w))
        for d in DIRECTIONS:
            f = N.density(d)
            if is_zero_density(f):
                continue
            res = check_monotone(grid, f(grid), noise=N.noise, floor=N.floor(d, grid))
            if res.verdict is Verdict.NO:
                raise NotClassU(
                    f"density increases on {res.interval} ({d} tail, relative rise {res.magnitude:.3g})",
                    witness=(d, res.interval, res.magnitude),
                )
    dens, atoms, breaks = {}, [], set(N.breaks)
    for d in DIRECTIONS:
        f = N.density(d)
        if is_zero_density(f):
            dens[d] = f
            continue
        jumps = detect_jumps(f, grid, N.breaks_for(d))
        sign = 1.0 if d == POS else -1.0
        atoms += [(sign * loc, loc * size) for loc, size in jumps]
        br = tuple(sorted(set(N.breaks_for(d)) | {loc for loc, _ in jumps}))
        breaks |= set(br)
        deriv = _radial(f, br, h)
        dens[d] = lambda r, deriv=deriv: -np.asarray(r) * deriv(r)
    floors = tuple(_fd_floor(N, d, h) for d in DIRECTIONS)
    return SpectralDensityPair(dens[POS], dens[NEG], tuple(atoms), tuple(breaks), max(N.noise, EPS), floors)


# --------------------------------------------------------------------------
# spectral functions and tails


def spectral_function(M: SpectralDensityPair, direction: str, grid=None) -> LevySpectralFunction:
    r = standard_grid() if grid is None else np.asarray(grid, dtype=float)
    tail = M.tail(direction, r)
    if direction == POS:
        return LevySpectralFunction(POS, GridFunction(r, -tail))
    return LevySpectralFunction(NEG, GridFunction(-r[::-1], tail[::-1]))


def transform_result(pair: SpectralDensityPair, method: str, grid=None) -> SpectralTransformResult:
    r = standard_grid() if grid is None else np.asarray(grid, dtype=float)
    tails = {d: GridFunction(r, pair.tail(d, r)) for d in DIRECTIONS}
    return SpectralTransformResult(pair, tails, method)


# --------------------------------------------------------------------------
# triples: shift and Gaussian bookkeeping


def _big_jump_mass(G: SpectralDensityPair) -> float:
    """``G((1, inf)) - G((-inf, -1))``."""
    return float(G.tail(POS, 1.0)) - float(G.tail(NEG, 1.0))


def _big_jump_reciprocal(G: SpectralDensityPair) -> float:
    """``int_{|x|>1} G(dx) / x``."""
    total = 0.0
    for d, s in ((POS, 1.0), (NEG, -1.0)):
        f = G.density(d)
        if not is_zero_density(f):
            total += s * float(integrate_tail(lambda v: f(v) / v, 1.0, G.breaks_for(d)))
        total += s * sum(c / b for b, c in G.atoms_for(d) if b > 1)
    return total


def triple_I(rho: LevyTriple) -> LevyTriple:
    G = rho.spectral
    return LevyTriple(rho.shift + _big_jump_mass(G), rho.gaussian_var / 2, spectral_I(G))


def triple_J(rho: LevyTriple) -> LevyTriple:
    G = rho.spectral
    return LevyTriple(rho.shift / 2 + _big_jump_reciprocal(G) / 2, rho.gaussian_var / 3, spectral_J(G))


def triple_IJ(rho: LevyTriple) -> LevyTriple:
    j = triple_J(rho)
    return LevyTriple(j.shift + _big_jump_mass(j.spectral), rho.gaussian_var / 6, spectral_IJ(rho.spectral))


def triple_invert_I(mu: LevyTriple, grid=None, check: bool = True, h: float = FD_STEP) -> LevyTriple:
    M = mu.spectral
    G = spectral_invert_I(M, grid, check, h)
    # G((1, inf)) = 1 * m(1)
    big = float(M.pos_density(np.asarray(1.0))) - float(M.neg_density(np.asarray(1.0)))
    return LevyTriple(mu.shift - big, 2 * mu.gaussian_var, G)


def triple_invert_J(nu: LevyTriple, grid=None, check: bool = True, h: float = FD_STEP) -> LevyTriple:
    N = nu.spectral
    G = spectral_invert_J(N, grid, check, h)
    return LevyTriple(2 * nu.shift - _big_jump_reciprocal(G), 3 * nu.gaussian_var, G)
