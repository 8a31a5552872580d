"""Monte Carlo for random integrals ``int h(t) dY_rho(t)`` of Levy processes.

The integral is an infinitely divisible law itself, so it can be sampled
from the driving triple without building paths:

* the Poisson random measure of jumps is sampled on a fine time grid,
  keeping only jumps whose weighted size ``|h(t) x|`` exceeds ``epsilon``;
* all other jumps, the drift and the Gaussian part are replaced by one
  Gaussian per sample whose mean and variance match them exactly;
* the weights are evaluated as Riemann-Stieltjes sums (midpoint tags) on a
  sequence of nested meshes sharing the same randomness, and the mesh is
  refined until consecutive empirical CFs agree.

Jump sizes come from inverting a tabulated tail mass ``N(r) = M(|x| > r)``
on a log grid.  Sampling is split into fixed-size chunks with their own
``SeedSequence`` children, so a batch depends only on the seed and size.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .core import DIRECTIONS, NEG, POS, GridFunction, LevyTriple, Verdict, integrate_tail, is_zero_density
from .core import _interval_integral
from .errors import NonConvergent, NotClassU

HORIZON = 40.0
EPSILON = 1e-3
MESH = 0.05
REFINEMENTS = 5
CHUNK = 8192
JUMP_BUDGET = 100.0
APPROX_TOL = 2e-3
REFINE_TOL = 2e-3
MC_TOL = 0.03
T_CHECK = 5.0

NODES_PER_DECADE = 64
TABLE_TOP = 1e6
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_TINY = 1e-300


@dataclass(frozen=True)
class SimConfig:
    """Sampling parameters.

    ``epsilon`` is the smallest weighted jump size simulated exactly; with
    ``auto_epsilon`` it is doubled while the expected number of jumps per
    sample exceeds ``jump_budget``, as long as the bound on the error of
    the Gaussian replacement at ``|t| = max|t_grid|`` stays below
    ``approx_tol``.
    """

    n_samples: int = 200_000
    horizon: float = HORIZON
    epsilon: float = EPSILON
    seed: int = 0
    t_grid: np.ndarray = field(default_factory=lambda: np.linspace(-T_CHECK, T_CHECK, 101))
    mesh: float = MESH
    refinements: int = REFINEMENTS
    refine_tol: float = REFINE_TOL
    auto_epsilon: bool = True
    jump_budget: float = JUMP_BUDGET
    approx_tol: float = APPROX_TOL
    workers: int = 1

    def __post_init__(self):
        if int(self.n_samples) < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.mesh > 0 or self.refinements < 0:
            raise ValueError("mesh must be positive and refinements nonnegative")
        object.__setattr__(self, "n_samples", int(self.n_samples))
        object.__setattr__(self, "t_grid", np.asarray(self.t_grid, dtype=float))


@dataclass(frozen=True)
class SampleBatch:
    values: np.ndarray
    config: SimConfig
    diagnostics: dict

    def __post_init__(self):
        if self.values.shape != (self.config.n_samples,):
            raise ValueError("batch length must equal n_samples")

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class MCReport:
    """Sup distance between an empirical CF and its analytic target."""

    distance: float
    tol: float
    t_grid: np.ndarray
    empirical: GridFunction
    target: GridFunction
    n_samples: int
    seed: int
    diagnostics: dict

    @property
    def passed(self) -> bool:
        return self.distance <= self.tol


def _triple(rho) -> LevyTriple:
    return rho if isinstance(rho, LevyTriple) else rho.triple


# --------------------------------------------------------------------------
# tabulated tail mass and truncated moments


class _TailTable:
    """``N(r) = M(x > r)`` and ``int_0^r x^p M(dx)`` on one side, continuous part only."""

    def __init__(self, f, breaks, lo):
        top = max(TABLE_TOP, 10 * lo)
        decades = math.log10(top / lo)
        nodes = np.geomspace(lo, top, max(2, int(math.ceil(decades * NODES_PER_DECADE))) + 1)
        extra = [b for b in breaks if lo < b < top] + ([1.0] if lo < 1.0 < top else [])
        self.x = np.unique(np.concatenate([nodes, extra]))
        y = np.log(self.x)
        # Gauss-Legendre in log r on every cell: int x^p f dx = int e^{(p+1) y} f(e^y) dy
        mid, half = 0.5 * (y[1:] + y[:-1]), 0.5 * np.diff(y)
        yy = mid[:, None] + half[:, None] * _GL_X[None, :]
        xx = np.exp(yy)
        with np.errstate(all="ignore"):
            fx = np.nan_to_num(np.asarray(f(xx.ravel()), dtype=float).reshape(xx.shape), nan=0.0, posinf=0.0)
        cells = [(half[:, None] * _GL_W[None, :] * fx * xx ** (p + 1)).sum(axis=1) for p in range(5)]
        tail_top = float(integrate_tail(f, self.x[-1], breaks))
        n = np.concatenate([np.cumsum(cells[0][::-1])[::-1], [0.0]]) + tail_top
        self.n = np.maximum(n, 0.0)
        self.log_n = np.log(np.maximum(self.n, _TINY))
        heads = [0.0] + [_interval_integral(lambda r, p=p: r**p * f(r), 0.0, lo, breaks) for p in range(2, 5)]
        self.moments = [h + np.concatenate([[0.0], np.cumsum(c)]) for h, c in zip(heads, cells[1:])]
        # power-law continuation of N beyond the table
        self.slope = 0.0
        if self.n[-1] > _TINY and self.n[-2] > self.n[-1]:
            self.slope = (self.log_n[-2] - self.log_n[-1]) / (y[-1] - y[-2])

    def tail(self, r):
        r = np.asarray(r, dtype=float)
        ly = np.log(np.clip(r, self.x[0], None))
        out = np.exp(np.interp(ly, np.log(self.x), self.log_n))
        beyond = r > self.x[-1]
        if np.any(beyond):
            ext = self.n[-1] * (r[beyond] / self.x[-1]) ** (-self.slope) if self.slope > 0 else 0.0
            out[beyond] = ext
        return np.where(out > _TINY, out, 0.0)

    def inverse_tail(self, u):
        """``x`` with ``N(x) = u`` for ``0 < u <= N(lo)``."""
        lu = np.log(np.maximum(u, _TINY))
        lx = np.interp(-lu, -self.log_n, np.log(self.x))
        out = np.exp(lx)
        if self.slope > 0:
            far = u < self.n[-1]
            out[far] = self.x[-1] * (u[far] / self.n[-1]) ** (-1.0 / self.slope)
        return out

    def moment(self, p, r):
        """``int_{lo}^{r} x^p M(dx)`` (``p = 1``) or ``int_0^r`` (``p >= 2``); clamped at the table ends."""
        lr = np.log(np.clip(r, self.x[0], self.x[-1]))
        return np.interp(lr, np.log(self.x), self.moments[p - 1])


class _JumpModel:
    """Everything about the driving measure needed to sample weighted jumps."""

    def __init__(self, triple: LevyTriple, lo: float):
        spec = triple.spectral
        self.shift = triple.shift
        self.var = triple.gaussian_var
        self.tables = {}
        for d in DIRECTIONS:
            f = spec.density(d)
            if not is_zero_density(f):
                self.tables[d] = _TailTable(f, spec.breaks_for(d), lo)
        self.atoms = [(x, w) for x, w in spec.atoms if w > 0]
        self.scale = abs(self.shift) + math.sqrt(self.var + self.truncated(2, np.array([1.0]))[0]) + float(self.tail(np.array([1.0]))[0])

    def side_tail(self, d, r):
        return self.tables[d].tail(r) if d in self.tables else np.zeros_like(r)

    def tail(self, r):
        """Continuous mass beyond ``r`` on both sides."""
        return self.side_tail(POS, r) + self.side_tail(NEG, r)

    def centering(self, r):
        """``int_{1 < |x| <= r} x M(dx) - int_{r < |x| <= 1} x M(dx)`` (atoms included)."""
        out = np.zeros_like(r)
        one = np.array([1.0])
        for d, s in ((POS, 1.0), (NEG, -1.0)):
            if d in self.tables:
                tab = self.tables[d]
                out += s * (tab.moment(1, r) - tab.moment(1, one))
        for x, w in self.atoms:
            out += w * x * ((abs(x) <= r).astype(float) - float(abs(x) <= 1.0))
        return out

    def truncated(self, p, r, signed=False):
        """``int_{|x| <= r} x^p M(dx)``; odd powers carry the sign of ``x`` when ``signed``."""
        out = np.zeros_like(r)
        for d, s in ((POS, 1.0), (NEG, -1.0)):
            if d in self.tables:
                out += (s if signed else 1.0) * self.tables[d].moment(p, r)
        for x, w in self.atoms:
            out += w * (x**p if signed else abs(x) ** p) * (abs(x) <= r)
        return out


# --------------------------------------------------------------------------
# sampling plan


@dataclass
class _Plan:
    model: _JumpModel
    epsilon: float
    delta: float
    coarse_cells: int
    h_levels: list
    cum: np.ndarray
    p_pos: np.ndarray
    cut: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    atom_cells: list
    lam_atoms: list
    diagnostics: dict


def _weights(h, t):
    out = np.asarray(h(t), dtype=float)
    return np.broadcast_to(out, t.shape).astype(float) if out.shape != t.shape else out


def _error_bound(model, hw, delta, cut, t_max):
    """CF error of replacing the dropped jumps by a Gaussian, at ``|t| = t_max``."""
    third = abs(np.sum(delta * hw**3 * model.truncated(3, cut, signed=True)))
    fourth = np.sum(delta * hw**4 * model.truncated(4, cut))
    return t_max**3 / 6 * third + t_max**4 / 24 * fourth


def _kept_rate(model, cut, delta):
    rate = np.sum(delta * model.tail(cut))
    for x, w in model.atoms:
        rate += w * delta * np.count_nonzero(abs(x) > cut)
    return float(rate)


def _cuts(eps, ah):
    with np.errstate(divide="ignore"):
        return np.where(ah > 0, eps / np.where(ah > 0, ah, 1.0), np.inf)


def _make_plan(h, triple: LevyTriple, horizon: float, config: SimConfig, mesh: float, refinements: int) -> _Plan:
    n0 = 1 << max(0, math.ceil(math.log2(horizon / mesh)))
    n_fine = n0 << refinements
    delta = horizon / n_fine
    mids = (np.arange(n_fine) + 0.5) * delta
    h_fine = _weights(h, mids)
    ah = np.abs(h_fine)
    top = float(ah.max()) if ah.size else 0.0
    t_max = float(np.max(np.abs(config.t_grid))) if config.t_grid.size else T_CHECK
    # the table must reach below the smallest cut and below 1 (the centering radius)
    model = _JumpModel(triple, min(config.epsilon / top / 1.0001, 0.5) if top > 0 else 0.5)

    eps = config.epsilon
    if config.auto_epsilon and top > 0:
        while eps < 1.0 and _kept_rate(model, _cuts(eps, ah), delta) > config.jump_budget:
            if _error_bound(model, h_fine, delta, _cuts(2 * eps, ah), t_max) > config.approx_tol:
                break
            eps *= 2
    cut = _cuts(eps, ah)
    finite = np.isfinite(cut)
    cut_f = np.where(finite, cut, 1.0)

    tails = {d: np.where(finite, model.side_tail(d, cut_f), 0.0) for d in DIRECTIONS}
    lam = delta * (tails[POS] + tails[NEG])
    with np.errstate(invalid="ignore", divide="ignore"):
        p_pos = np.where(lam > 0, delta * tails[POS] / np.where(lam > 0, lam, 1.0), 1.0)
    atom_cells = [np.flatnonzero(finite & (abs(x) > cut_f)) for x, _ in model.atoms]
    lam_atoms = [w * delta * c.size for (_, w), c in zip(model.atoms, atom_cells)]

    drift = np.where(finite, delta * (model.shift + model.centering(cut_f)), 0.0)
    small_var = np.where(finite, delta * model.truncated(2, cut_f), 0.0)
    var = small_var + np.where(finite, delta * model.var, 0.0)

    h_levels, means, sds = [], [], []
    for lev in range(refinements + 1):
        n_lev = n0 << lev
        d_lev = horizon / n_lev
        h_lev = _weights(h, (np.arange(n_lev) + 0.5) * d_lev)
        hl = np.repeat(h_lev, n_fine // n_lev)
        h_levels.append(hl)
        means.append(float(np.sum(hl * drift)))
        sds.append(math.sqrt(float(np.sum(hl * hl * var))))

    diag = {
        "epsilon": eps,
        "expected_jumps": float(lam.sum() + sum(lam_atoms)),
        "discarded_variance": float(np.sum(h_fine**2 * small_var)),
        "gaussian_error_bound": float(_error_bound(model, h_fine, delta, cut, t_max)) if top > 0 else 0.0,
        "fine_mesh": delta,
    }
    return _Plan(model, eps, delta, n0, h_levels, np.cumsum(lam), p_pos, cut_f, np.array(means), np.array(sds),
                 atom_cells, lam_atoms, diag)


def _sample_chunk(plan: _Plan, n: int, rng: np.random.Generator):
    """Samples at every refinement level, shape ``(levels, n)``, and the kept-jump count."""
    z = rng.standard_normal(n)
    owners, cells, sizes = [], [], []
    total = plan.cum[-1] if plan.cum.size else 0.0
    if total > 0:
        counts = rng.poisson(total, n)
        m = int(counts.sum())
        cell = np.minimum(np.searchsorted(plan.cum, rng.random(m) * total, side="right"), plan.cum.size - 1)
        pos = rng.random(m) < plan.p_pos[cell]
        u = rng.random(m)
        x = np.empty(m)
        for d, sel, s in ((POS, pos, 1.0), (NEG, ~pos, -1.0)):
            if np.any(sel):
                c = cell[sel]
                tab = plan.model.tables[d]
                x[sel] = s * tab.inverse_tail(u[sel] * tab.tail(plan.cut[c]))
        owners.append(np.repeat(np.arange(n), counts))
        cells.append(cell)
        sizes.append(x)
    for (x0, _), kept, lam in zip(plan.model.atoms, plan.atom_cells, plan.lam_atoms):
        if lam <= 0:
            continue
        counts = rng.poisson(lam, n)
        m = int(counts.sum())
        owners.append(np.repeat(np.arange(n), counts))
        cells.append(kept[rng.integers(0, kept.size, m)])
        sizes.append(np.full(m, x0))
    owner = np.concatenate(owners) if owners else np.zeros(0, dtype=int)
    cell = np.concatenate(cells) if cells else np.zeros(0, dtype=int)
    size = np.concatenate(sizes) if sizes else np.zeros(0)
    out = np.empty((len(plan.h_levels), n))
    for lev, hl in enumerate(plan.h_levels):
        out[lev] = np.bincount(owner, weights=hl[cell] * size, minlength=n) + plan.mean[lev] + plan.sd[lev] * z
    return out, owner.size


def _chunk_sizes(n):
    sizes = [CHUNK] * (n // CHUNK)
    if n % CHUNK:
        sizes.append(n % CHUNK)
    return sizes


def _run(plan: _Plan, config: SimConfig, stream: int):
    sizes = _chunk_sizes(config.n_samples)
    seeds = np.random.SeedSequence(config.seed, spawn_key=(stream,)).spawn(len(sizes))
    job = lambda k: _sample_chunk(plan, sizes[k], np.random.default_rng(seeds[k]))
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(k) for k in range(len(sizes))]
    values = np.concatenate([p[0] for p in parts], axis=1)
    jumps = sum(p[1] for p in parts)
    return values, jumps


# --------------------------------------------------------------------------
# public operations


def _cf_values(x: np.ndarray, t: np.ndarray, block: int = 16384) -> np.ndarray:
    acc = np.zeros(t.shape, dtype=complex)
    for k in range(0, x.size, block):
        acc += np.exp(1j * np.outer(t, x[k : k + block])).sum(axis=1)
    return acc / x.size


def empirical_cf(batch, t_grid) -> GridFunction:
    """``(1/n) sum_j exp(i t X_j)`` on ``t_grid``; ``batch`` is a SampleBatch or an array."""
    x = np.asarray(batch.values if isinstance(batch, SampleBatch) else batch, dtype=float)
    if x.size == 0:
        raise ValueError("empirical CF of an empty batch")
    t = np.asarray(t_grid, dtype=float)
    return GridFunction(t, _cf_values(x, t))


def random_integral(h, rho, config: SimConfig, horizon: float | None = None, stream: int = 0) -> SampleBatch:
    """Samples of ``int_0^T h(t) dY_rho(t)``.

    Without ``horizon`` the integral over ``(0, inf)`` is truncated at
    ``config.horizon`` and ``diagnostics["tail_bound"]`` records
    ``|h(T)|`` times the driver's scale.  ``h`` must accept float arrays.
    Raises ``NonConvergent`` when no two consecutive meshes give empirical
    CFs within ``config.refine_tol``.  ``stream`` selects an independent
    substream of ``config.seed``.
    """
    truncated = horizon is None
    T = config.horizon if truncated else float(horizon)
    if not T > 0:
        raise ValueError(f"horizon must be positive, got {T}")
    plan = _make_plan(h, _triple(rho), T, config, min(config.mesh, T / 16), config.refinements)
    levels, jumps = _run(plan, config, stream)
    t_chk = np.linspace(0.0, max(float(np.max(np.abs(config.t_grid))), 1e-3), 26)
    gaps, chosen = [], None
    cf_prev = _cf_values(levels[0], t_chk)
    for lev in range(1, levels.shape[0]):
        cf = _cf_values(levels[lev], t_chk)
        gaps.append(float(np.max(np.abs(cf - cf_prev))))
        if gaps[-1] <= config.refine_tol:
            chosen = lev
            break
        cf_prev = cf
    if levels.shape[0] == 1:
        chosen = 0
    if chosen is None:
        raise NonConvergent(f"mesh refinement did not stabilise: CF changes {gaps}", estimate=gaps[-1] if gaps else None)
    diag = dict(plan.diagnostics)
    diag.update(
        mean_jumps=jumps / config.n_samples,
        mesh=T / (plan.coarse_cells << chosen),
        refinement_gaps=gaps,
        tail_bound=abs(float(_weights(h, np.array([T]))[0])) * plan.model.scale if truncated else 0.0,
    )
    return SampleBatch(np.ascontiguousarray(levels[chosen]), config, diag)


def sample_levy_increments(rho, dt: float, size: int, rng: np.random.Generator, epsilon: float = EPSILON) -> np.ndarray:
    """``size`` independent draws of ``Y_rho(dt)``.

    Jumps larger than ``epsilon`` are simulated exactly, smaller ones are
    replaced by a Gaussian with their mean and variance.  Symmetric stable
    catalog laws use the Chambers-Mallows-Stuck method (exact).
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if getattr(rho, "family", None) == "stable":
        alpha, scale = rho.params["alpha"], rho.params["scale"]
        return stats.levy_stable.rvs(alpha, 0.0, scale=(scale * dt) ** (1 / alpha), size=size, random_state=rng)
    config = SimConfig(n_samples=max(int(size), 1), epsilon=epsilon, auto_epsilon=False)
    plan = _make_plan(lambda t: np.ones_like(t), _triple(rho), dt, config, dt, 0)
    return _sample_chunk(plan, int(size), rng)[0][0]


def sample_levy_increment(rho, dt: float, rng_stream: np.random.Generator) -> float:
    """One draw of ``Y_rho(dt)``; see ``sample_levy_increments``."""
    return float(sample_levy_increments(rho, dt, 1, rng_stream)[0])


def verify_factorization_mc(mu_spec, config: SimConfig | None = None, certificate=None, tol: float = MC_TOL) -> MCReport:
    """Simulate ``int e^{-s} dY_nu(s) + Y_nu(1)`` and compare with ``exp Phi_{I(rho)}``.

    ``nu`` and ``rho`` come from ``factorize(mu_spec)`` (or the given
    certificate).  The two terms use independent substreams of the seed.
    Raises ``NotClassU`` when the certificate shows ``mu`` is not in
    ``L^f`` and ``NonConvergent`` when its identity residual exceeds its
    tolerance.
    """
    from .exponents import apply_I
    from .factorization import NUMERIC_EPSABS, NUMERIC_EPSREL, factorize

    config = config or SimConfig()
    cert = certificate or factorize(mu_spec)
    if cert.in_Lf is not Verdict.YES:
        raise NotClassU("driver is not s-selfdecomposable; no factor to simulate against", witness=cert.witness)
    if not cert.valid:
        raise NonConvergent(f"identity residual {cert.identity_residual:.3g} exceeds {cert.tol:.3g}")
    nu = cert.nu.triple
    first = random_integral(lambda s: np.exp(-s), nu, config, stream=0)
    second = random_integral(lambda s: np.ones_like(s), nu, config, horizon=1.0, stream=1)
    x = first.values + second.values
    t = config.t_grid
    emp = _cf_values(x, t)
    target = np.exp(apply_I(cert.rho.exponent, NUMERIC_EPSREL, NUMERIC_EPSABS)(t))
    dist = float(np.max(np.abs(emp - target)))
    diag = {"integral": first.diagnostics, "increment": second.diagnostics, "identity_residual": cert.identity_residual}
    return MCReport(dist, tol, t, GridFunction(t, emp), GridFunction(t, target), config.n_samples, config.seed, diag)
