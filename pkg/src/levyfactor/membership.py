"""Membership of infinitely divisible laws in the nested classes

    U  >  L  >  L^f  >  L_1  >  L_1^f  >  L_2  > ...

decided from the Levy spectral density, one tail at a time.  With ``m`` the
tail density and ``q(r) = r m(r)``:

* U:      ``m`` nonincreasing
* L:      ``q`` nonincreasing
* L^f:    ``q`` nonincreasing and convex
* L_n:    ``q_k`` nonincreasing for ``k <= n``, where ``q_0 = q`` and
          ``q_{k+1}(r) = -r q_k'(r)`` is ``r`` times the driver density of level k
* L_n^f:  ``m`` nonincreasing and the density ``-r m'(r)`` passes the L_n test

Atoms rule out every class (their spectral function is not continuous).
Shift and Gaussian parts impose no restriction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DIRECTIONS,
    EPS,
    GridFunction,
    LevyTriple,
    Verdict,
    is_zero_density,
    radial_derivative,
    standard_grid,
)
from .errors import NonDifferentiable, ParamOutOfRange, Undecidable
from .shape import check_convex, check_monotone
from .spectral import jump_at, log_moment_status

MAX_LEVEL = 4
CLASSIFY_STEP = 1e-2
JUMP_REL = 1e-6
TINY_VALUE = 1e-250


def chain_order(max_n: int) -> list[str]:
    """Class names from largest to smallest: U, L, Lf, L1, L1f, ..., L{n}, L{n}f."""
    names = ["U", "L", "Lf"]
    for n in range(1, max_n + 1):
        names += [f"L{n}", f"L{n}f"]
    return names


@dataclass(frozen=True)
class Witness:
    cls: str
    direction: str
    interval: tuple[float, float]
    magnitude: float
    note: str = ""


@dataclass(frozen=True)
class MembershipReport:
    verdicts: dict
    criteria: dict
    witnesses: tuple
    max_n: int
    cross_checks: dict = field(default_factory=dict)

    def __getitem__(self, cls: str) -> Verdict:
        return self.verdicts[cls]

    def witness_for(self, cls: str) -> Witness | None:
        return next((w for w in self.witnesses if w.cls == cls), None)

    @property
    def any_undecided(self) -> bool:
        return any(v is Verdict.UNDECIDED for v in self.verdicts.values())


# --------------------------------------------------------------------------
# log moments


def is_ID_log(triple: LevyTriple, order: int = 1) -> Verdict:
    """Does the law have a finite ``log^order`` moment?

    Raises ``Undecidable`` when the tail decays too close to the borderline
    rate for the grid span to settle it.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    verdict, note = log_moment_status(triple.spectral, order)
    if verdict is Verdict.UNDECIDED:
        raise Undecidable(note)
    return verdict


# --------------------------------------------------------------------------
# per-tail criteria


def _times_r(f):
    return lambda r: np.asarray(r) * f(r)


def _next_level(q, breaks, h):
    """``r -> -r q'(r)``."""
    return lambda r: -np.asarray(r) * radial_derivative(q, r, h, breaks)


def _level_chain(q0, breaks, levels, h):
    qs = [q0]
    for _ in range(levels):
        qs.append(_next_level(qs[-1], breaks, h))
    return qs


def _break_jumps(f, breaks):
    """Downward jumps ``(break, relative size)`` of ``f`` at declared breaks."""
    out = []
    for b in breaks:
        size = jump_at(f, b, JUMP_REL)
        if size > 0:
            out.append((b, size / max(abs(float(f(np.asarray(b * (1 - 1e-11))))), size)))
    return out


def _values(f, r):
    v = np.nan_to_num(np.asarray(f(r), dtype=float), nan=0.0, posinf=np.finfo(float).max)
    # near the subnormal range differences are pure rounding; treat as zero
    return np.where(np.abs(v) < TINY_VALUE, 0.0, v)


class _TailTests:
    """All shape tests for one tail density on one grid."""

    def __init__(self, f, breaks, grid, noise, floor_m, max_n, h):
        self.grid = grid
        self.noise = max(noise, EPS)
        self.floor_m = floor_m
        self.amp = 1.5 / h
        r = grid
        self.m = _values(f, r)
        q0 = _times_r(f)
        self.q = [_values(q, r) for q in _level_chain(q0, breaks, max_n, h)]
        # absolute noise of q_k: each differentiation level multiplies by ~1.5 / h
        base = self.noise * np.abs(self.q[0]) + r * floor_m
        self.floor = [base * self.amp**k for k in range(max_n + 1)]
        self.level_jumps = [_break_jumps(q, breaks) for q in _level_chain(q0, breaks, max_n - 1, h)] if max_n else []
        self.m_jumps = _break_jumps(f, breaks)
        # J route: q^J_0 = r * (-r m') = -r^2 m'
        qj0 = _next_level(f, breaks, h)
        qj0 = _times_r(qj0)
        self.qj_funcs = _level_chain(qj0, breaks, max_n, h)
        self.qj = [_values(q, r) for q in self.qj_funcs]
        self.jump_levels_j = [_break_jumps(q, breaks) for q in self.qj_funcs[:-1]]

    def monotone(self, values, floor):
        return check_monotone(self.grid, values, noise=self.noise, floor=floor)


def _first_no(checks):
    """Combined verdict of a list of ``(verdict, witness-or-None)``, NO first."""
    for v, w in checks:
        if v is Verdict.NO:
            return v, w
    for v, w in checks:
        if v is Verdict.UNDECIDED:
            return v, w
    return Verdict.YES, None


def _tail_verdicts(t: _TailTests, d: str, max_n: int):
    """Verdict and optional witness per class for one tail."""
    out = {}
    wit = lambda cls, chk, note: Witness(cls, d, chk.interval, chk.magnitude, note) if chk.interval else None

    def level_list(values, floors, jumps, label):
        # entry k: the level-k monotonicity test plus any atom the level-k driver inherits
        levels = []
        for k, vals in enumerate(values):
            chk = t.monotone(vals, floors[k])
            entry = [(chk.verdict, wit("L", chk, label(k)))]
            if k > 0 and jumps[k - 1]:
                b, size = jumps[k - 1][0]
                entry.append((Verdict.NO, Witness("L", d, (b, b), size, f"level-{k} driver has an atom at {b:.6g}")))
            levels.append(_first_no(entry))
        return levels

    u = t.monotone(t.m, t.floor_m)
    out["U"] = (u.verdict, wit("U", u, "density increases"))
    levels = level_list(
        t.q, t.floor, t.level_jumps, lambda k: "r m(r) increases" if k == 0 else f"r times the level-{k} driver density increases"
    )
    out["L"] = levels[0]
    conv = check_convex(t.grid, t.q[0], noise=t.noise, floor=t.grid * t.floor_m)
    out["Lf"] = _first_no([levels[0], (conv.verdict, wit("Lf", conv, "r m(r) is not convex"))])

    u_pair = out["U"]
    if t.m_jumps:
        b, size = t.m_jumps[0]
        u_pair = _first_no([u_pair, (Verdict.NO, Witness("Lf", d, (b, b), size, f"density jumps at {b:.6g}"))])
    j_levels = level_list(
        t.qj, t.floor[1:] + [t.floor[-1] * t.amp], t.jump_levels_j, lambda k: f"level-{k} test after inverting J fails"
    )
    out["Lf_J"] = _first_no([u_pair, j_levels[0]])
    for n in range(1, max_n + 1):
        out[f"L{n}"] = _first_no(levels[: n + 1])
        out[f"L{n}f"] = _first_no([u_pair] + j_levels[: n + 1])
    return out


# --------------------------------------------------------------------------
# classification


def _relabel(w: Witness | None, cls: str) -> Witness | None:
    return None if w is None else Witness(cls, w.direction, w.interval, w.magnitude, w.note)


def _enforce_chain(verdicts, witnesses, order):
    """A class inside a rejected class is rejected; a class containing an accepted one is accepted."""
    for i, cls in enumerate(order):
        for bigger in order[:i]:
            if verdicts[bigger] is Verdict.NO and verdicts[cls] is not Verdict.NO:
                verdicts[cls] = Verdict.NO
                src = witnesses.get(bigger)
                witnesses[cls] = _relabel(src, cls)
                break
    for i in range(len(order) - 1, -1, -1):
        cls = order[i]
        if verdicts[cls] is Verdict.YES:
            for bigger in order[:i]:
                if verdicts[bigger] is Verdict.UNDECIDED:
                    verdicts[bigger] = Verdict.YES
                    witnesses.pop(bigger, None)


def classify(triple: LevyTriple, max_n: int = 2, grid=None, h: float = CLASSIFY_STEP) -> MembershipReport:
    """Decide ID_log, U, L, L^f and L_n, L_n^f for ``n <= max_n``.

    Every "no" carries a witness: the grid interval (or atom location) where
    the tested quantity breaks the required shape.
    """
    if not 0 <= max_n <= MAX_LEVEL:
        raise ParamOutOfRange(f"max_n must lie in [0, {MAX_LEVEL}], got {max_n}")
    grid = standard_grid() if grid is None else np.asarray(grid, dtype=float)
    spec = triple.spectral
    order = chain_order(max_n)
    verdicts = {cls: Verdict.YES for cls in order}
    witnesses: dict[str, Witness | None] = {}
    criteria: dict[str, dict[str, GridFunction]] = {cls: {} for cls in order}
    lf_j = Verdict.YES

    log_v, log_note = log_moment_status(spec, 1)
    verdicts["ID_log"] = log_v
    if log_note:
        witnesses["ID_log"] = Witness("ID_log", "both", (1e4, 1e6), math.nan, log_note)

    if spec.atoms:
        x, w = spec.atoms[0]
        for cls in order:
            verdicts[cls] = Verdict.NO
            witnesses[cls] = Witness(cls, "pos" if x > 0 else "neg", (abs(x), abs(x)), w, f"atom of mass {w:.6g} at {x:.6g}")
        lf_j = Verdict.NO

    for d in DIRECTIONS:
        f = spec.density(d)
        if is_zero_density(f) or spec.atoms:
            continue
        tests = _TailTests(f, spec.breaks_for(d), grid, spec.noise, spec.floor(d, grid), max_n, h)
        per = _tail_verdicts(tests, d, max_n)
        lf_j = Verdict.all_of(lf_j, per.pop("Lf_J")[0])
        criteria["U"][d] = GridFunction(grid, tests.m)
        criteria["L"][d] = GridFunction(grid, tests.q[0])
        criteria["Lf"][d] = GridFunction(grid, tests.q[0])
        for n in range(1, max_n + 1):
            criteria[f"L{n}"][d] = GridFunction(grid, tests.q[n])
            criteria[f"L{n}f"][d] = GridFunction(grid, tests.qj[n])
        for cls, (v, w) in per.items():
            combined = Verdict.all_of(verdicts[cls], v)
            if combined is not verdicts[cls] and w is not None:
                witnesses[cls] = _relabel(w, cls)
            verdicts[cls] = combined

    _enforce_chain(verdicts, witnesses, order)
    wlist = tuple(w for cls in ["ID_log"] + order if (w := witnesses.get(cls)) is not None and verdicts[cls] is not Verdict.YES)
    ordered = {"ID_log": verdicts["ID_log"], **{cls: verdicts[cls] for cls in order}}
    return MembershipReport(ordered, criteria, wlist, max_n, {"Lf_J": lf_j})


def check_Lf_via_second_derivative(triple: LevyTriple, grid=None, h: float = CLASSIFY_STEP) -> Verdict:
    """L^f by the curvature criterion: ``r m`` nonincreasing and ``r^2 m'(r)`` nondecreasing.

    Raises ``NonDifferentiable`` when the derivative estimates at steps ``h``
    and ``h/2`` disagree away from declared breaks.
    """
    grid = standard_grid() if grid is None else np.asarray(grid, dtype=float)
    spec = triple.spectral
    if spec.atoms:
        return Verdict.NO
    out = []
    for d in DIRECTIONS:
        f = spec.density(d)
        if is_zero_density(f):
            continue
        breaks = spec.breaks_for(d)
        noise = max(spec.noise, EPS)
        q = _values(lambda r: r * f(r), grid)
        base = noise * np.abs(q) + grid * spec.floor(d, grid)
        out.append(check_monotone(grid, q, noise=noise, floor=grid * spec.floor(d, grid)).verdict)
        d1 = radial_derivative(f, grid, h, breaks)
        d2 = radial_derivative(f, grid, h / 2, breaks)
        curv = np.where(q == 0.0, 0.0, grid**2 * d1)
        away = q != 0.0
        for b in breaks:
            away &= np.abs(np.log(grid / b)) > 4 * h
        scale = np.maximum(np.abs(curv), base * 1.5 / h)
        bad = away & (np.abs(grid**2 * (d1 - d2)) > 1e-6 * scale + 64 * base * 3 / h)
        if np.any(bad):
            r0 = float(grid[np.flatnonzero(bad)[0]])
            raise NonDifferentiable(f"{d} density is not differentiable near r = {r0:.6g}", t=r0)
        floor = base * 1.5 / h
        out.append(check_monotone(grid, _finite(curv), increasing=True, noise=noise, floor=floor).verdict)
    return Verdict.all_of(*out)


def _finite(x):
    return np.nan_to_num(x, nan=0.0, posinf=np.finfo(float).max, neginf=-np.finfo(float).max)
