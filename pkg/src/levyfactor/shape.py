"""Discrete monotonicity and convexity tests on (log-spaced) grids.

Each test returns a ``ShapeCheck``.  A difference counts as a violation only
when it exceeds ``slack * local_scale`` plus a rounding allowance driven by
the evaluation noise of the tested values.  Violations within 10x of that
tolerance are reported as undecided rather than flipped to "no".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EPS, GridFunction, Verdict

SLACK = 1e-9
GRAY_FACTOR = 10.0
_ROUND = 64.0


@dataclass(frozen=True)
class ShapeCheck:
    verdict: Verdict
    magnitude: float
    interval: tuple[float, float] | None
    values: GridFunction


def _decide(excess, tol, lo, hi, r, f, magnitude):
    values = GridFunction(r, np.nan_to_num(f))
    if excess.size == 0 or not np.any(excess > 0):
        return ShapeCheck(Verdict.YES, 0.0, None, values)
    k = int(np.argmax(magnitude))
    big = excess > (GRAY_FACTOR - 1.0) * tol
    verdict = Verdict.NO if np.any(big) else Verdict.UNDECIDED
    if np.any(big):
        k = int(np.flatnonzero(big)[np.argmax(magnitude[big])])
    return ShapeCheck(verdict, float(magnitude[k]), (float(lo[k]), float(hi[k])), values)


def _floor(floor, n):
    return np.broadcast_to(np.asarray(floor, dtype=float), (n,))


def check_monotone(r, f, increasing: bool = False, slack: float = SLACK, noise: float = 0.0, floor=0.0) -> ShapeCheck:
    """Is ``f`` nonincreasing (default) or nondecreasing along ``r``?

    ``noise`` is a relative evaluation error, ``floor`` an absolute one
    (scalar or per node).
    """
    r = np.asarray(r, dtype=float)
    f = np.asarray(f, dtype=float)
    fl = _floor(floor, f.size)
    # positive entries are violations
    d = -np.diff(f) if increasing else np.diff(f)
    scale = np.maximum(np.abs(f[:-1]), np.abs(f[1:]))
    noise = max(noise, EPS)
    tol = slack * scale + _ROUND * (noise * scale + np.maximum(fl[:-1], fl[1:]))
    live = (scale > 0) | (tol > 0)
    excess = np.where(live, d - tol, -1.0)
    mag = np.where(scale > 0, d / np.where(scale > 0, scale, 1.0), 0.0)
    return _decide(excess, np.where(live, tol, 1.0), r[:-1], r[1:], r, f, mag)


def check_convex(r, f, concave: bool = False, slack: float = SLACK, noise: float = 0.0, floor=0.0) -> ShapeCheck:
    """Are the chord slopes of ``f`` nondecreasing (convex) or nonincreasing (concave)?"""
    r = np.asarray(r, dtype=float)
    f = np.asarray(f, dtype=float)
    f_eff = -f if concave else f
    dr = np.diff(r)
    s = np.diff(f_eff) / dr
    viol = s[:-1] - s[1:]
    slope_scale = np.maximum(np.abs(s[:-1]), np.abs(s[1:]))
    noise = max(noise, EPS)
    err = noise * np.abs(f) + _floor(floor, f.size)
    emax = np.maximum.reduce([err[:-2], err[1:-1], err[2:]])
    fmax = np.maximum.reduce([np.abs(f[:-2]), np.abs(f[1:-1]), np.abs(f[2:])])
    tol = slack * slope_scale + _ROUND * emax / np.minimum(dr[:-1], dr[1:])
    live = (slope_scale > 0) | (fmax > 0)
    excess = np.where(live, viol - tol, -1.0)
    mag = np.where(slope_scale > 0, viol / np.where(slope_scale > 0, slope_scale, 1.0), 0.0)
    return _decide(excess, np.where(tol > 0, tol, 1e-300), r[:-2], r[2:], r, f, mag)
