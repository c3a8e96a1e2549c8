"""Empirical-process tools behind both safety-threshold regimes.

Provides exact Kolmogorov-Smirnov statistics, the Kolmogorov limit law, Monte
Carlo estimation of the expected KS sup for finite samples, simulation of the
centered Gaussian process that the scaled empirical CDF converges to when the
radii are merely independent (not identically distributed), the halving
construction of a vanishing envelope sequence, and certified uniform-distance
bounds between monotone functions evaluated on finite grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .distributions import CdfModel, MixtureCdf, NormalCdf, UniformCdf

__all__ = [
    "CovarianceError",
    "MonteCarloEstimate",
    "Ecdf",
    "ecdf",
    "ks_statistic",
    "kolmogorov_cdf",
    "kolmogorov_quantile",
    "BRIDGE_SUP_MEAN",
    "expected_ks_sup",
    "LimitProcessModel",
    "build_limit_model",
    "bridge_model",
    "simulate_limit_sup",
    "c_alpha",
    "VanishingSequence",
    "vanishing_sequence",
    "uniform_gap",
    "modulus_of_continuity",
    "ModulusReport",
    "averaged_modulus",
    "MarginalCheck",
    "CovarianceCheck",
    "FindimReport",
    "findim_gaussian_test",
]

# Mean of the supremum of the absolute Brownian bridge: sqrt(pi/2) * ln 2.
BRIDGE_SUP_MEAN = float(np.sqrt(np.pi / 2.0) * np.log(2.0))

_SERIES_TOL = 1e-12
_NUGGET = 1e-10


class CovarianceError(RuntimeError):
    """Grid covariance matrix is not usable even after regularization."""


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Point estimate with its Monte Carlo standard error."""

    value: float
    se: float
    reps: int

    def interval(self, width: float = 3.0) -> tuple[float, float]:
        return (self.value - width * self.se, self.value + width * self.se)


@dataclass(frozen=True, eq=False)
class Ecdf:
    """Right-continuous empirical CDF of a finite sample."""

    sorted_samples: np.ndarray

    def __post_init__(self) -> None:
        x = np.sort(np.asarray(self.sorted_samples, dtype=float).ravel())
        if x.size < 1:
            raise ValueError("need at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "sorted_samples", x)

    @property
    def n(self) -> int:
        return self.sorted_samples.size

    def cdf(self, x):
        pos = np.searchsorted(self.sorted_samples, np.asarray(x, dtype=float), side="right")
        out = pos / self.n
        return float(out) if np.isscalar(x) else out

    __call__ = cdf


def ecdf(samples) -> Ecdf:
    """Build the empirical CDF of a nonempty sample."""
    return Ecdf(np.asarray(samples, dtype=float))


def _ks_from_probs(sorted_probs: np.ndarray) -> float:
    # sup |ECDF - F| over all reals equals the max over order statistics of
    # the two one-sided gaps, because the difference is extremal just before
    # or at a jump of the ECDF.
    n = sorted_probs.size
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - sorted_probs)
    d_minus = np.max(sorted_probs - (i - 1) / n)
    return float(max(d_plus, d_minus, 0.0))


def ks_statistic(sample, law: CdfModel) -> float:
    """Exact sup distance between a sample's ECDF and a reference CDF.

    Args:
        sample: raw draws or an already-built :class:`Ecdf`.
        law: continuous reference distribution.
    """
    if isinstance(sample, Ecdf):
        xs = sample.sorted_samples
    else:
        xs = np.sort(np.asarray(sample, dtype=float).ravel())
        if xs.size < 1:
            raise ValueError("need at least one sample")
    return _ks_from_probs(np.asarray(law.cdf(xs), dtype=float))


def _kolmogorov_cdf_scalar(x: float) -> float:
    if x < 0.0:
        raise ValueError("Kolmogorov CDF argument must be nonnegative")
    if x < 1e-8:
        return 0.0
    total = 0.0
    sign = 1.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        total += sign * term
        if term < _SERIES_TOL:
            break
        sign = -sign
        k += 1
    return min(1.0, max(0.0, 1.0 - 2.0 * total))


def kolmogorov_cdf(x):
    """Kolmogorov limit law K(x) via its alternating exponential series.

    Terms are summed until they drop below 1e-12. Accepts scalars or arrays.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return _kolmogorov_cdf_scalar(float(arr))
    out = np.array([_kolmogorov_cdf_scalar(float(v)) for v in arr.ravel()])
    return out.reshape(arr.shape)


def kolmogorov_quantile(p: float) -> float:
    """Inverse of :func:`kolmogorov_cdf` by bracketing plus bisection."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError("quantile level must lie strictly inside (0, 1)")
    lo, hi = 0.0, 1.0
    while _kolmogorov_cdf_scalar(hi) < p:
        hi *= 2.0
        if hi > 64.0:
            raise RuntimeError("failed to bracket the Kolmogorov quantile")
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if _kolmogorov_cdf_scalar(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _ks_sups_from_uniform_rows(u: np.ndarray) -> np.ndarray:
    u = np.sort(u, axis=1)
    n = u.shape[1]
    i = np.arange(1, n + 1)
    d_plus = (i / n - u).max(axis=1)
    d_minus = (u - (i - 1) / n).max(axis=1)
    return np.maximum(np.maximum(d_plus, d_minus), 0.0)


def expected_ks_sup(
    n: int,
    law: CdfModel | None = None,
    reps: int = 2000,
    rng: np.random.Generator | None = None,
) -> MonteCarloEstimate:
    """Monte Carlo estimate of E sup |ECDF_n - F| for n iid draws from F.

    The statistic is pivotal for continuous F, so ``law=None`` uses uniform
    draws directly; passing a law draws from it and evaluates it honestly,
    which is how the pivotality claim gets verified rather than assumed.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if reps < 1:
        raise ValueError("need reps >= 1")
    if rng is None:
        raise ValueError("an explicit rng is required")
    rows_per_chunk = max(1, int(4_000_000 // max(n, 1)))
    sums = 0.0
    sumsq = 0.0
    done = 0
    while done < reps:
        r = min(rows_per_chunk, reps - done)
        if law is None:
            u = rng.random((r, n))
        else:
            draws = law.sample(rng, r * n).reshape(r, n)
            u = np.asarray(law.cdf(draws), dtype=float)
        sups = _ks_sups_from_uniform_rows(u)
        sums += sups.sum()
        sumsq += np.square(sups).sum()
        done += r
    mean = sums / reps
    var = max(0.0, sumsq / reps - mean * mean)
    se = math.sqrt(var / reps)
    return MonteCarloEstimate(value=float(mean), se=float(se), reps=reps)


@dataclass(frozen=True, eq=False)
class LimitProcessModel:
    """Grid discretization of the limiting centered Gaussian process.

    ``gram[i, j]`` holds the limit covariance at grid points i, j; for a
    single continuous component it is the Brownian bridge run in CDF time.
    """

    grid: np.ndarray
    gram: np.ndarray
    mean_cdf: CdfModel
    components: tuple
    weights: np.ndarray

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        gram = np.asarray(self.gram, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid must be 1-d with at least two points")
        if np.any(np.diff(grid) <= 0.0):
            raise ValueError("grid must be strictly increasing")
        if gram.shape != (grid.size, grid.size):
            raise ValueError("gram matrix must be square and match the grid")
        if not np.allclose(gram, gram.T, atol=1e-12):
            raise ValueError("gram matrix must be symmetric")
        weights = np.asarray(self.weights, dtype=float)
        grid = grid.copy()
        gram = 0.5 * (gram + gram.T)
        grid.setflags(write=False)
        gram.setflags(write=False)
        weights = weights.copy()
        weights.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "gram", gram)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def grid_size(self) -> int:
        return self.grid.size

    def covariance(self, s: float, t: float) -> float:
        """Limit covariance at arbitrary points, from the component CDFs."""
        lo, hi = (s, t) if s <= t else (t, s)
        total = 0.0
        for w, comp in zip(self.weights, self.components):
            total += w * float(comp.cdf(lo)) * (1.0 - float(comp.cdf(hi)))
        return total


def build_limit_model(
    components,
    grid=None,
    *,
    weights=None,
    grid_points: int = 512,
) -> LimitProcessModel:
    """Assemble the limit-process discretization for a component family.

    The covariance at (s, t) is the weighted average over components of
    F_i(min(s,t)) * (1 - F_i(max(s,t))). The default grid is the interior
    quantile lattice of the mean CDF, which spreads points by equal
    probability mass and makes the simulated sup converge fast.
    """
    components = tuple(components)
    if not components:
        raise ValueError("need at least one component")
    k = len(components)
    if weights is None:
        w = np.full(k, 1.0 / k)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (k,) or np.any(w <= 0.0):
            raise ValueError("weights must be positive, one per component")
        w = w / w.sum()
    if k == 1:
        mean_cdf = components[0]
    else:
        mean_cdf = MixtureCdf(components, tuple(w.tolist()))
    if grid is None:
        if grid_points < 2:
            raise ValueError("grid_points must be >= 2")
        q = np.arange(1, grid_points + 1) / (grid_points + 1.0)
        grid = np.unique(np.asarray(mean_cdf.quantile(q), dtype=float))
    else:
        grid = np.asarray(grid, dtype=float)

    m = grid.size
    gram = np.zeros((m, m))
    for wi, comp in zip(w, components):
        f = np.asarray(comp.cdf(grid), dtype=float)
        gram += wi * (np.minimum.outer(f, f) * (1.0 - np.maximum.outer(f, f)))
    if gram.max() > 0.25 + 1e-9:
        raise ValueError("covariance exceeded the 1/4 bound; component CDFs invalid")
    return LimitProcessModel(
        grid=grid, gram=gram, mean_cdf=mean_cdf, components=components, weights=w
    )


def bridge_model(grid_points: int = 512) -> LimitProcessModel:
    """Brownian-bridge special case: one uniform component on (0, 1)."""
    return build_limit_model([UniformCdf(0.0, 1.0)], grid_points=grid_points)


def _cell_quadratic_variation(gram: np.ndarray) -> np.ndarray:
    # Variance of the process increment across each grid cell, with the two
    # half-open boundary cells anchored at the zero values the process takes
    # outside the support of the mean CDF.
    m = gram.shape[0]
    var = np.diag(gram)
    v = np.empty(m + 1)
    v[0] = var[0]
    v[m] = var[m - 1]
    if m > 1:
        v[1:m] = var[1:] + var[:-1] - 2.0 * np.diag(gram, 1)
    return np.maximum(v, 0.0)


def simulate_limit_sup(
    model: LimitProcessModel,
    paths: int,
    rng: np.random.Generator,
    refine_cells: bool = True,
) -> np.ndarray:
    """Sample the supremum of |U| for the limit process, sorted ascending.

    Values at the grid points are drawn exactly from the multivariate normal
    with the model's Gram matrix. A plain maximum over grid values
    underestimates the continuum supremum by an amount of the order of the
    grid gap; with ``refine_cells`` each cell (including the two boundary
    cells, where the process vanishes) is topped up with a draw of the
    conditional within-cell extremum of a Brownian bridge matching the cell's
    increment variance. That refinement is exact in law for a single
    continuous component and carries only O(gap) bias otherwise, against the
    O(sqrt(gap)) bias of the bare grid maximum.

    Raises:
        CovarianceError: if the Gram matrix fails factorization even after a
            1e-10 diagonal nugget.
    """
    if paths < 1:
        raise ValueError("need paths >= 1")
    gram = model.gram
    m = gram.shape[0]
    var = np.diag(gram)
    if not np.any(var > 0.0):
        return np.zeros(paths)
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        try:
            chol = np.linalg.cholesky(gram + _NUGGET * np.eye(m))
        except np.linalg.LinAlgError as exc:
            raise CovarianceError(
                "covariance grid is not positive semidefinite even after nugget"
            ) from exc
    v = _cell_quadratic_variation(gram)[:, None]
    out = np.empty(paths)
    chunk = max(1, int(4_000_000 // max(m, 1)))
    done = 0
    while done < paths:
        c = min(chunk, paths - done)
        values = chol @ rng.standard_normal((m, c))
        if refine_cells:
            zeros = np.zeros((1, c))
            left = np.vstack([zeros, values])
            right = np.vstack([values, zeros])
            w_hi = np.maximum(rng.random((m + 1, c)), 1e-300)
            w_lo = np.maximum(rng.random((m + 1, c)), 1e-300)
            gap_sq = (right - left) ** 2
            cell_max = 0.5 * (left + right + np.sqrt(gap_sq - 2.0 * v * np.log(w_hi)))
            cell_min = 0.5 * (left + right - np.sqrt(gap_sq - 2.0 * v * np.log(w_lo)))
            sups = np.maximum(cell_max.max(axis=0), -cell_min.min(axis=0))
        else:
            sups = np.abs(values).max(axis=0)
        out[done : done + c] = sups
        done += c
    return np.sort(out)


def c_alpha(
    model: LimitProcessModel,
    alpha: float,
    paths: int = 100_000,
    rng: np.random.Generator | None = None,
    *,
    sups: np.ndarray | None = None,
) -> float:
    """(1 - alpha)-quantile of the limit-process supremum.

    Pass precomputed ``sups`` (from :func:`simulate_limit_sup`) to reuse one
    simulation across several levels; otherwise ``rng`` is required.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    if sups is None:
        if rng is None:
            raise ValueError("an explicit rng is required when sups are not given")
        sups = simulate_limit_sup(model, paths, rng)
    return float(np.quantile(sups, 1.0 - alpha))


@dataclass(frozen=True)
class VanishingSequence:
    """Envelope sequence from the halving construction.

    ``values[i]`` is the envelope at step i + 1; ``change_points`` lists the
    steps where the level advanced; ``stalled`` reports that even the first
    halving never validated within the horizon.
    """

    values: np.ndarray
    change_points: tuple[int, ...]
    stalled: bool

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "change_points", tuple(int(c) for c in self.change_points))


def vanishing_sequence(
    tail_prob,
    a0: float = 1.0,
    horizon: int = 100,
    window: int = 8,
) -> VanishingSequence:
    """Construct a positive nonincreasing envelope with vanishing tail mass.

    Starting at ``a0``, the envelope halves at the first step where the tail
    probability at the halved value stays below the halved threshold over a
    lookahead window: the level-k envelope a0/2^k is accepted at step n when
    tail_prob(j, a0/2^k) < 2^-k for all j in [n, n + window). At most one
    halving happens per step. ``tail_prob(n, a)`` must estimate
    P(|Z_n| > a) and be callable up to horizon + window - 1.
    """
    if a0 <= 0.0:
        raise ValueError("a0 must be positive")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if window < 1:
        raise ValueError("window must be >= 1")
    values = np.empty(horizon)
    level = 0
    changes: list[int] = []
    for n in range(1, horizon + 1):
        cand_level = level + 1
        cand_a = a0 * 2.0 ** (-cand_level)
        threshold = 2.0 ** (-cand_level)
        if all(tail_prob(j, cand_a) < threshold for j in range(n, n + window)):
            level = cand_level
            changes.append(n)
        values[n - 1] = a0 * 2.0 ** (-level)
    return VanishingSequence(values=values, change_points=tuple(changes), stalled=not changes)


def _evaluate_monotone(fn, x: np.ndarray) -> np.ndarray:
    if isinstance(fn, (Ecdf, CdfModel)):
        return np.asarray(fn.cdf(x), dtype=float)
    if hasattr(fn, "cdf"):
        return np.asarray(fn.cdf(x), dtype=float)
    try:
        out = np.asarray(fn(x), dtype=float)
        if out.shape == x.shape:
            return out
    except Exception:
        pass
    return np.array([float(fn(float(t))) for t in x])


def uniform_gap(approx_fn, law: CdfModel, grid_points: int = 512) -> float:
    """Certified upper bound on sup |approx_fn - F| over the whole line.

    Valid whenever ``approx_fn`` is monotone with limits 0 and 1 (an ECDF or
    another CDF): inside any cell of the evaluation grid both functions move
    by at most the reference CDF's increment across that cell, so the true
    supremum is at most the max discrepancy seen at grid points plus the
    largest cell increment, with the two unbounded tail cells included.
    """
    if grid_points < 1:
        raise ValueError("grid_points must be >= 1")
    q = np.arange(1, grid_points + 1) / (grid_points + 1.0)
    x = np.asarray(law.quantile(q), dtype=float)
    fx = np.asarray(law.cdf(x), dtype=float)
    gx = _evaluate_monotone(approx_fn, x)
    grid_sup = float(np.max(np.abs(gx - fx)))
    increments = np.diff(np.concatenate(([0.0], fx, [1.0])))
    return grid_sup + float(np.max(increments))


def modulus_of_continuity(law: CdfModel, delta: float, grid=None, grid_points: int = 4096) -> float:
    """Largest increase of F over any width-delta window, restricted to a grid.

    With monotone F the value equals max over grid points t of
    F(t + delta) - F(t); passing the same grid as an independent scan makes
    the two agree exactly.
    """
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    if delta == 0.0:
        return 0.0
    if grid is None:
        q = np.arange(1, grid_points + 1) / (grid_points + 1.0)
        grid = np.asarray(law.quantile(q), dtype=float)
    g = np.asarray(grid, dtype=float)
    return float(np.max(np.asarray(law.cdf(g + delta)) - np.asarray(law.cdf(g))))


@dataclass(frozen=True)
class ModulusReport:
    """Averaged modulus of continuity across a component family."""

    delta: float
    value: float
    per_component: tuple[float, ...]


def averaged_modulus(
    components,
    delta: float,
    *,
    weights=None,
    grid=None,
    grid_points: int = 2048,
) -> ModulusReport:
    """Weighted average of per-component moduli on a shared grid."""
    components = tuple(components)
    if not components:
        raise ValueError("need at least one component")
    k = len(components)
    if weights is None:
        w = np.full(k, 1.0 / k)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (k,) or np.any(w <= 0.0):
            raise ValueError("weights must be positive, one per component")
        w = w / w.sum()
    if grid is None:
        mix = components[0] if k == 1 else MixtureCdf(components, tuple(w.tolist()))
        q = np.arange(1, grid_points + 1) / (grid_points + 1.0)
        grid = np.asarray(mix.quantile(q), dtype=float)
    per = tuple(modulus_of_continuity(c, delta, grid=grid) for c in components)
    return ModulusReport(delta=float(delta), value=float(np.dot(w, per)), per_component=per)


@dataclass(frozen=True)
class MarginalCheck:
    """One grid time's distribution check for the scaled empirical process."""

    t: float
    variance: float
    lattice_distance: float
    empirical_distance: float
    threshold: float
    degenerate: bool
    passed: bool


@dataclass(frozen=True)
class CovarianceCheck:
    """One grid pair's covariance check."""

    s: float
    t: float
    target: float
    estimate: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class FindimReport:
    """Joint report; fails only when two or more checks reject at once."""

    n: int
    reps: int
    marginals: tuple[MarginalCheck, ...]
    covariances: tuple[CovarianceCheck, ...]
    rejections: int
    passed: bool


def _lattice_law_distance(counts: np.ndarray, probs: np.ndarray, n: int, mean_t: float, sd: float) -> float:
    # Exact law of the indicator count: a convolution of per-component
    # binomials. The scaled process value lives on the induced lattice, so
    # its true distance to the normal limit is computable and becomes part of
    # the test threshold instead of a source of false rejections.
    pmf = np.ones(1)
    for m_j, p_j in zip(counts, probs):
        if m_j == 0:
            continue
        block = stats.binom.pmf(np.arange(m_j + 1), m_j, p_j)
        pmf = np.convolve(pmf, block)
    lattice = np.sqrt(n) * (np.arange(n + 1) / n - mean_t)
    cdf_exact = np.cumsum(pmf)
    cdf_norm = special.ndtr(lattice / sd)
    at_points = np.abs(cdf_exact - cdf_norm)
    left_limits = np.abs((cdf_exact - pmf) - cdf_norm)
    return float(max(at_points.max(), left_limits.max()))


def findim_gaussian_test(
    components,
    t_points,
    n: int,
    reps: int = 4000,
    rng: np.random.Generator | None = None,
    significance: float = 0.01,
) -> FindimReport:
    """Finite-dimensional normality check for the scaled empirical process.

    Simulates ``reps`` independent copies of the scaled centered empirical
    CDF of n independent draws cycling through the component laws, evaluated
    at one to three grid times. Each marginal is compared to its centered
    normal limit by an exact KS distance, with the count lattice's own
    distance to the normal folded into the acceptance threshold; each pair's
    empirical covariance must land within four standard errors of the limit
    covariance. The report rejects only on two or more simultaneous failures.
    """
    components = tuple(components)
    if not components:
        raise ValueError("need at least one component")
    t_arr = np.atleast_1d(np.asarray(t_points, dtype=float))
    if not 1 <= t_arr.size <= 3:
        raise ValueError("between one and three grid times are supported")
    if n < 1:
        raise ValueError("need n >= 1")
    if reps < 2000:
        raise ValueError("need reps >= 2000 for stable rejection rates")
    if rng is None:
        raise ValueError("an explicit rng is required")
    if not 0.0 < significance < 1.0:
        raise ValueError("significance must lie strictly inside (0, 1)")

    k = len(components)
    assignment = np.arange(n) % k
    comp_counts = np.bincount(assignment, minlength=k)
    f_vals = np.array([[float(c.cdf(t)) for t in t_arr] for c in components])  # (k, T)
    mean_t = comp_counts @ f_vals / n  # (T,)
    t_count = t_arr.size
    gmat = np.zeros((t_count, t_count))
    for j in range(k):
        f = f_vals[j]
        gmat += (comp_counts[j] / n) * (
            np.minimum.outer(f, f) * (1.0 - np.maximum.outer(f, f))
        )

    thresholds = f_vals[assignment]  # (n, T)
    process = np.empty((reps, t_count))
    chunk = max(1, int(4_000_000 // max(n, 1)))
    done = 0
    while done < reps:
        r = min(chunk, reps - done)
        u = rng.random((r, n))
        counts_at = (u[:, :, None] <= thresholds[None, :, :]).sum(axis=1)
        process[done : done + r] = np.sqrt(n) * (counts_at / n - mean_t[None, :])
        done += r

    crit = kolmogorov_quantile(1.0 - significance)
    marginals = []
    for ti in range(t_count):
        g_tt = gmat[ti, ti]
        sample = process[:, ti]
        if g_tt <= 1e-15:
            passed = bool(np.all(sample == 0.0))
            marginals.append(
                MarginalCheck(
                    t=float(t_arr[ti]),
                    variance=float(g_tt),
                    lattice_distance=0.0,
                    empirical_distance=float(np.max(np.abs(sample))),
                    threshold=0.0,
                    degenerate=True,
                    passed=passed,
                )
            )
            continue
        sd = math.sqrt(g_tt)
        d_lattice = _lattice_law_distance(
            comp_counts, f_vals[:, ti], n, float(mean_t[ti]), sd
        )
        d_emp = float(ks_statistic(sample, NormalCdf(0.0, sd)))
        threshold = float(d_lattice) + crit / math.sqrt(reps)
        marginals.append(
            MarginalCheck(
                t=float(t_arr[ti]),
                variance=float(g_tt),
                lattice_distance=float(d_lattice),
                empirical_distance=d_emp,
                threshold=threshold,
                degenerate=False,
                passed=bool(d_emp <= threshold),
            )
        )

    covariances = []
    centered = process - process.mean(axis=0, keepdims=True)
    for a in range(t_count):
        for b in range(a + 1, t_count):
            target = gmat[a, b]
            estimate = float(np.mean(centered[:, a] * centered[:, b]))
            se = math.sqrt(
                max(0.0, gmat[a, a] * gmat[b, b] + target * target) / reps
            )
            tol = 4.0 * se
            covariances.append(
                CovarianceCheck(
                    s=float(t_arr[a]),
                    t=float(t_arr[b]),
                    target=float(target),
                    estimate=estimate,
                    tolerance=tol,
                    passed=bool(abs(float(target) - estimate) <= tol),
                )
            )

    rejections = sum(1 for m in marginals if not m.passed) + sum(
        1 for c in covariances if not c.passed
    )
    return FindimReport(
        n=n,
        reps=reps,
        marginals=tuple(marginals),
        covariances=tuple(covariances),
        rejections=rejections,
        passed=rejections <= 1,
    )
