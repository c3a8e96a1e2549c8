"""Safety-threshold estimation from observed growth radii.

Two regimes share one order-statistic scan. With iid radii the empirical tail
is compared against the confidence level minus the expected uniform ECDF
error for that sample size; with independent but heterogeneous radii driven
by a regular covariate sequence, the correction is the scaled high quantile
of the limiting Gaussian process supremum. Infeasibility (the correction
eats the whole tolerance) is a first-class result so that coverage
experiments can tally it instead of dying.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .distributions import CdfModel
from .empirical import (
    BRIDGE_SUP_MEAN,
    LimitProcessModel,
    MonteCarloEstimate,
    c_alpha,
    expected_ks_sup,
)
from .geometry import SafetyArea, SupportSet

__all__ = [
    "NoFeasibleDeltaError",
    "CnMonteCarlo",
    "CnAsymptotic",
    "CnDkw",
    "CnFixed",
    "CnMethod",
    "estimate_cn",
    "IidEstimatorConfig",
    "DependentEstimatorConfig",
    "DeltaResult",
    "delta_iid",
    "delta_dependent",
    "make_safety_area",
]


class NoFeasibleDeltaError(ValueError):
    """No threshold exists at this sample size; carries a minimum-n estimate."""

    def __init__(self, message: str, min_n: int | None = None):
        super().__init__(message)
        self.min_n = min_n


@dataclass(frozen=True)
class CnMonteCarlo:
    """Estimate the expected ECDF sup error by simulation."""

    reps: int = 2000


@dataclass(frozen=True)
class CnAsymptotic:
    """Plug in the limiting value: bridge sup mean divided by sqrt(n)."""


@dataclass(frozen=True)
class CnDkw:
    """Distribution-free concentration bound sqrt(ln(2/beta) / (2n)).

    This bounds the sup error with probability 1 - beta rather than in
    expectation, so it is deliberately conservative.
    """

    beta: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class CnFixed:
    """Externally supplied constant, mainly for tests and what-if runs."""

    value: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.value) and self.value >= 0.0):
            raise ValueError("fixed constant must be finite and nonnegative")


CnMethod = Union[CnMonteCarlo, CnAsymptotic, CnDkw, CnFixed]


def _method_name(method: CnMethod) -> str:
    return {
        CnMonteCarlo: "monte_carlo",
        CnAsymptotic: "asymptotic",
        CnDkw: "dkw",
        CnFixed: "fixed",
    }[type(method)]


def estimate_cn(
    n: int,
    method: CnMethod,
    rng: np.random.Generator | None = None,
    law: CdfModel | None = None,
) -> MonteCarloEstimate:
    """Expected-sup correction constant for sample size n, per method.

    Deterministic methods return a zero standard error. The Monte Carlo
    method needs an rng; the statistic is pivotal for continuous laws, so
    ``law`` only matters as the sampling vehicle.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if isinstance(method, CnMonteCarlo):
        if rng is None:
            raise ValueError("Monte Carlo constant estimation needs an rng")
        return expected_ks_sup(n, law, reps=method.reps, rng=rng)
    if isinstance(method, CnAsymptotic):
        return MonteCarloEstimate(value=BRIDGE_SUP_MEAN / math.sqrt(n), se=0.0, reps=0)
    if isinstance(method, CnDkw):
        value = math.sqrt(math.log(2.0 / method.beta) / (2.0 * n))
        return MonteCarloEstimate(value=value, se=0.0, reps=0)
    if isinstance(method, CnFixed):
        return MonteCarloEstimate(value=float(method.value), se=0.0, reps=0)
    raise TypeError(f"unknown constant method: {method!r}")


def _min_n_iid(alpha: float, method: CnMethod) -> int | None:
    # Smallest n making the correction drop below alpha, inverted per method.
    # The Monte Carlo constant tracks the asymptotic value closely for n
    # beyond a few dozen, so its inversion reuses the asymptotic formula.
    if isinstance(method, (CnMonteCarlo, CnAsymptotic)):
        return int(math.ceil((BRIDGE_SUP_MEAN / alpha) ** 2))
    if isinstance(method, CnDkw):
        return int(math.ceil(math.log(2.0 / method.beta) / (2.0 * alpha * alpha)))
    return None


@dataclass(frozen=True)
class IidEstimatorConfig:
    """Settings for the identically distributed radii regime."""

    alpha: float
    cn_method: CnMethod = CnMonteCarlo()
    radius_law: CdfModel | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class DependentEstimatorConfig:
    """Settings for the covariate-driven (independent, non-identical) regime."""

    alpha: float
    epsilon: float
    limit_model: LimitProcessModel
    paths: int = 100_000

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly inside (0, 1)")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie strictly inside (0, 1)")
        if self.paths < 1:
            raise ValueError("paths must be >= 1")


@dataclass(frozen=True)
class DeltaResult:
    """Outcome of one threshold estimation, feasible or not."""

    mode: str
    n: int
    alpha: float
    epsilon: float | None
    feasible: bool
    delta: float | None
    threshold: float
    count_above: int | None
    constant: float
    constant_se: float | None
    constant_method: str
    min_n: int | None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n": self.n,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "feasible": self.feasible,
            "delta": self.delta,
            "threshold": self.threshold,
            "count_above": self.count_above,
            "constant": {
                "value": self.constant,
                "se": self.constant_se,
                "method": self.constant_method,
            },
            "min_n": self.min_n,
        }


def _clean_radii(radii) -> np.ndarray:
    r = np.asarray(radii, dtype=float).ravel()
    if r.size < 1:
        raise ValueError("need at least one radius")
    if not np.all(np.isfinite(r)):
        raise ValueError("radii must be finite")
    if np.any(r < 0.0):
        raise ValueError("radii must be nonnegative")
    return np.sort(r)


def _scan(sorted_radii: np.ndarray, threshold: float) -> tuple[float, int]:
    """Smallest candidate t with a strictly-above fraction under the threshold.

    The survival fraction is a right-continuous step function that only
    changes at sample values, so the minimizer is 0 or an order statistic.
    """
    n = sorted_radii.size
    candidates = np.concatenate(([0.0], sorted_radii))
    counts = n - np.searchsorted(sorted_radii, candidates, side="right")
    hits = np.nonzero(counts < threshold * n)[0]
    # counts ends at 0, and threshold * n > 0, so a hit always exists.
    first = int(hits[0])
    return float(candidates[first]), int(counts[first])


def delta_iid(
    radii,
    cfg: IidEstimatorConfig,
    rng: np.random.Generator | None = None,
    cn: MonteCarloEstimate | None = None,
) -> DeltaResult:
    """Safety threshold for iid radii at confidence ``cfg.alpha``.

    Pass a precomputed ``cn`` to reuse one constant across replications with
    the same n (it only depends on n, not on the sample).
    """
    r = _clean_radii(radii)
    n = r.size
    if cn is None:
        cn = estimate_cn(n, cfg.cn_method, rng=rng, law=cfg.radius_law)
    threshold = cfg.alpha - cn.value
    method_name = _method_name(cfg.cn_method)
    if threshold <= 0.0:
        return DeltaResult(
            mode="iid",
            n=n,
            alpha=cfg.alpha,
            epsilon=None,
            feasible=False,
            delta=None,
            threshold=threshold,
            count_above=None,
            constant=cn.value,
            constant_se=cn.se if cn.reps else None,
            constant_method=method_name,
            min_n=_min_n_iid(cfg.alpha, cfg.cn_method),
        )
    delta, count = _scan(r, threshold)
    return DeltaResult(
        mode="iid",
        n=n,
        alpha=cfg.alpha,
        epsilon=None,
        feasible=True,
        delta=delta,
        threshold=threshold,
        count_above=count,
        constant=cn.value,
        constant_se=cn.se if cn.reps else None,
        constant_method=method_name,
        min_n=None,
    )


def delta_dependent(
    radii,
    cfg: DependentEstimatorConfig,
    rng: np.random.Generator | None = None,
    c_alpha_value: float | None = None,
) -> DeltaResult:
    """Safety threshold for covariate-driven radii at level (alpha, epsilon).

    The correction scales as the alpha-tail quantile of the limit-process
    supremum over sqrt(n). Pass ``c_alpha_value`` to reuse one simulated
    quantile across replications; otherwise an rng is required.
    """
    r = _clean_radii(radii)
    n = r.size
    if c_alpha_value is None:
        if rng is None:
            raise ValueError("an explicit rng is required to simulate the quantile")
        c_alpha_value = c_alpha(cfg.limit_model, cfg.alpha, cfg.paths, rng)
    threshold = cfg.epsilon - c_alpha_value / math.sqrt(n)
    min_n = int(math.ceil((c_alpha_value / cfg.epsilon) ** 2))
    if threshold <= 0.0:
        return DeltaResult(
            mode="dependent",
            n=n,
            alpha=cfg.alpha,
            epsilon=cfg.epsilon,
            feasible=False,
            delta=None,
            threshold=threshold,
            count_above=None,
            constant=c_alpha_value,
            constant_se=None,
            constant_method="limit_quantile",
            min_n=min_n,
        )
    delta, count = _scan(r, threshold)
    return DeltaResult(
        mode="dependent",
        n=n,
        alpha=cfg.alpha,
        epsilon=cfg.epsilon,
        feasible=True,
        delta=delta,
        threshold=threshold,
        count_above=count,
        constant=c_alpha_value,
        constant_se=None,
        constant_method="limit_quantile",
        min_n=None,
    )


def make_safety_area(
    base: SupportSet, result: DeltaResult, level: float | None = None
) -> SafetyArea:
    """Turn a feasible threshold into the region guaranteed safe at its level.

    Raises:
        NoFeasibleDeltaError: when the result is infeasible; the attached
            ``min_n`` says how many observations would be needed.
    """
    if not result.feasible or result.delta is None:
        raise NoFeasibleDeltaError(
            f"no feasible threshold at n={result.n}"
            + (f"; need n >= {result.min_n}" if result.min_n else ""),
            min_n=result.min_n,
        )
    return SafetyArea(
        base,
        result.delta,
        level=result.alpha if level is None else level,
        epsilon=result.epsilon,
    )
