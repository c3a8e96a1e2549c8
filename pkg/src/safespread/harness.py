"""Monte Carlo coverage experiments validating both safety-threshold regimes.

The iid experiment replays the exact guarantee event: estimate a threshold
from n radii, then check whether radius n+1 jumps past it. The dependent
experiment checks the tail-mass event: whether the limit law's mass above the
estimated threshold exceeds the tolerated fraction. Replications derive their
random streams from namespaced seed material, so reports are reproducible
bit-for-bit for a given (config, seed), serial or parallel.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import CdfModel
from .empirical import build_limit_model, simulate_limit_sup
from .estimator import (
    CnMethod,
    CnMonteCarlo,
    DependentEstimatorConfig,
    IidEstimatorConfig,
    _method_name,
    _min_n_iid,
    delta_dependent,
    delta_iid,
    estimate_cn,
)
from .evolution import EpidemicConfig, run_epidemic
from .geometry import SafetyArea, SupportSet, breach, dilate, dimension
from .kernels import (
    RADIUS_FLOOR,
    ConstantCovariate,
    CovariateProcess,
    CycleCovariate,
    DegenerateKernelError,
    IidViolatingCovariate,
    KernelSpec,
    LowDiscrepancyCovariate,
    NoiseDriver,
    covariate_atoms,
)

__all__ = [
    "EstimatorSettings",
    "ScenarioConfig",
    "IidRepRecord",
    "DependentRepRecord",
    "CoverageReport",
    "run_coverage_iid",
    "run_coverage_dependent",
    "limit_components_for",
    "radius_law_for",
]

_QUADRATURE_NODES = 64


@dataclass(frozen=True)
class EstimatorSettings:
    """Estimation knobs carried by a scenario, before any run-time objects."""

    alpha: float = 0.05
    epsilon: Optional[float] = None
    cn_method: CnMethod = CnMonteCarlo()
    paths: int = 100_000
    grid_points: int = 512

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly inside (0, 1)")
        if self.epsilon is not None and not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie strictly inside (0, 1)")
        if self.paths < 1:
            raise ValueError("paths must be >= 1")
        if self.grid_points < 2:
            raise ValueError("grid_points must be >= 2")


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one coverage experiment."""

    kernel: KernelSpec
    noise: NoiseDriver
    covariate: CovariateProcess
    initial_support: SupportSet
    estimator: EstimatorSettings
    mode: str = "iid"
    horizon: int = 100
    replications: int = 1000
    seed: int = 0
    particles: int = 2000
    simulate_full: bool = False
    workers: int = 1
    geometric_check_fraction: float = 0.01
    n_ladder: Optional[tuple[int, ...]] = None
    allow_violations: bool = False

    def __post_init__(self) -> None:
        if self.mode not in ("iid", "dependent"):
            raise ValueError("mode must be 'iid' or 'dependent'")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.particles < 1:
            raise ValueError("particles must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not 0.0 <= self.geometric_check_fraction <= 1.0:
            raise ValueError("geometric_check_fraction must lie in [0, 1]")
        if dimension(self.initial_support) != self.kernel.dimension:
            raise ValueError("initial support and kernel dimensions differ")
        if self.mode == "iid":
            if not isinstance(self.covariate, ConstantCovariate):
                raise ValueError(
                    "iid mode needs a constant covariate; radii are otherwise "
                    "not identically distributed"
                )
        else:
            if self.estimator.epsilon is None:
                raise ValueError("dependent mode needs estimator.epsilon")
            if getattr(self.covariate, "assumption_violating", False) and not self.allow_violations:
                raise ValueError(
                    "covariate mode violates the regularity assumption; set "
                    "allow_violations to run it anyway (no guarantee asserted)"
                )
        if self.n_ladder is not None:
            ladder = tuple(int(n) for n in self.n_ladder)
            if not ladder or any(n < 1 for n in ladder):
                raise ValueError("n_ladder must hold positive sample sizes")
            object.__setattr__(self, "n_ladder", ladder)

    @property
    def ladder(self) -> tuple[int, ...]:
        return self.n_ladder if self.n_ladder is not None else (self.horizon,)


@dataclass(frozen=True)
class IidRepRecord:
    rep: int
    feasible: bool
    delta: Optional[float]
    next_radius: float
    breach: Optional[bool]


@dataclass(frozen=True)
class DependentRepRecord:
    rep: int
    feasible: bool
    delta: Optional[float]
    tail_mass: Optional[float]
    exceed: Optional[bool]


@dataclass(frozen=True, eq=False)
class CoverageReport:
    """Aggregated outcome of one coverage experiment.

    ``timings`` holds measured wall-clock seconds; they stay in memory and
    serialize as null by default so that rerunning a seeded experiment
    produces byte-identical files.
    """

    mode: str
    n: int
    alpha: float
    epsilon: Optional[float]
    replications: int
    feasible_count: int
    event_count: int
    coverage_estimate: Optional[float]
    standard_error: Optional[float]
    threshold: float
    constant: float
    constant_se: Optional[float]
    constant_method: str
    min_n: Optional[int]
    violation_flag: bool
    geometric_checked: int
    geometric_mismatches: int
    seed: int
    records: tuple
    timings: Optional[dict] = None

    def to_json_dict(self, with_records: bool = True, with_timings: bool = False) -> dict:
        event_key = "breach_count" if self.mode == "iid" else "exceed_count"
        doc = {
            "kind": "coverage_report",
            "mode": self.mode,
            "n": self.n,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "replications": self.replications,
            "feasible": self.feasible_count,
            "infeasible": self.replications - self.feasible_count,
            event_key: self.event_count,
            "coverage_estimate": self.coverage_estimate,
            "standard_error": self.standard_error,
            "threshold": self.threshold,
            "constant": {
                "value": self.constant,
                "se": self.constant_se,
                "method": self.constant_method,
            },
            "min_n": self.min_n,
            "violation_flag": self.violation_flag,
            "geometric_check": {
                "checked": self.geometric_checked,
                "mismatches": self.geometric_mismatches,
            },
            "seed": self.seed,
            "timings": (self.timings if with_timings else None),
        }
        if with_records:
            if self.mode == "iid":
                doc["records"] = [
                    {
                        "rep": r.rep,
                        "feasible": r.feasible,
                        "delta": r.delta,
                        "next_radius": r.next_radius,
                        "breach": r.breach,
                    }
                    for r in self.records
                ]
            else:
                doc["records"] = [
                    {
                        "rep": r.rep,
                        "feasible": r.feasible,
                        "delta": r.delta,
                        "tail_mass": r.tail_mass,
                        "exceed": r.exceed,
                    }
                    for r in self.records
                ]
        return doc


def radius_law_for(scenario: ScenarioConfig, y: float) -> CdfModel:
    """Radius law at a fixed covariate value under the scenario's kernel."""
    return scenario.kernel.radius_law(y, scenario.noise.law)


def limit_components_for(scenario: ScenarioConfig) -> tuple[tuple, np.ndarray]:
    """Per-covariate-value radius laws and their limit weights.

    Discrete covariate modes give exact atoms. Continuous limit laws
    (low-discrepancy targets, iid draws) are approximated by an equal-weight
    quantile quadrature; for the iid mode this is a descriptive device only,
    since that mode violates the estimator's convergence assumption.
    """
    cov = scenario.covariate
    if isinstance(cov, (ConstantCovariate, CycleCovariate)):
        atoms, weights = covariate_atoms(cov)
    elif isinstance(cov, LowDiscrepancyCovariate):
        q = (np.arange(_QUADRATURE_NODES) + 0.5) / _QUADRATURE_NODES
        atoms = np.asarray(cov.target.quantile(q), dtype=float)
        weights = np.full(atoms.size, 1.0 / atoms.size)
    elif isinstance(cov, IidViolatingCovariate):
        q = (np.arange(_QUADRATURE_NODES) + 0.5) / _QUADRATURE_NODES
        atoms = np.asarray(cov.law.quantile(q), dtype=float)
        weights = np.full(atoms.size, 1.0 / atoms.size)
    else:
        raise ValueError(f"unknown covariate mode {type(cov).__name__}")
    components = tuple(radius_law_for(scenario, float(y)) for y in atoms)
    return components, weights


def _rep_seed(scenario: ScenarioConfig, namespace: tuple[int, ...]) -> np.random.SeedSequence:
    return np.random.SeedSequence(scenario.seed, spawn_key=namespace)


def _radii_from_streams(
    scenario: ScenarioConfig, rep_ss: np.random.SeedSequence, count: int, ys: np.ndarray
) -> np.ndarray:
    # Mirrors run_epidemic's stream layout (noise, covariate, particles) so
    # radii-only replications produce bit-identical radii to full simulation
    # under the same seed material.
    streams = rep_ss.spawn(3)
    noise_rng = np.random.default_rng(streams[0])
    u = noise_rng.random(count)
    xi = np.asarray(scenario.noise.law.quantile(u), dtype=float)
    raw = scenario.kernel.map_radius(xi, ys)
    if not np.all(np.isfinite(raw)) or np.any(raw <= 0.0):
        raise DegenerateKernelError("radius map produced a nonpositive radius")
    return np.maximum(raw, RADIUS_FLOOR)


def _geometric_breach_check(
    scenario: ScenarioConfig, radii: np.ndarray, delta: float, alpha: float
) -> bool:
    # Rebuild the supports around the estimation step by analytic dilation
    # and ask the geometry layer for its independent breach verdict.
    n = radii.size - 1
    cum = np.cumsum(radii)
    base = (
        dilate(scenario.initial_support, float(cum[n - 1]))
        if n >= 1
        else scenario.initial_support
    )
    nxt = dilate(scenario.initial_support, float(cum[n]))
    area = SafetyArea(base, delta, level=alpha)
    return breach(area, nxt)


def _iid_block(payload) -> tuple[list[IidRepRecord], int, int]:
    scenario, est_cfg, cn, check_upto, indices = payload
    records: list[IidRepRecord] = []
    checked = 0
    mismatches = 0
    y_value = float(scenario.covariate.value)
    for i in indices:
        rep_ss = _rep_seed(scenario, (1, int(i)))
        count = scenario.horizon + 1
        if scenario.simulate_full:
            epi = EpidemicConfig(
                initial_support=scenario.initial_support,
                kernel=scenario.kernel,
                noise=scenario.noise,
                covariate=scenario.covariate,
                particles=scenario.particles,
            )
            trace = run_epidemic(epi, count, seed=rep_ss)
            radii = trace.true_radii
        else:
            trace = None
            ys = np.full(count, y_value)
            radii = _radii_from_streams(scenario, rep_ss, count, ys)
        next_radius = float(radii[scenario.horizon])
        result = delta_iid(radii[: scenario.horizon], est_cfg, cn=cn)
        if not result.feasible:
            records.append(
                IidRepRecord(
                    rep=int(i),
                    feasible=False,
                    delta=None,
                    next_radius=next_radius,
                    breach=None,
                )
            )
            continue
        hit = next_radius > result.delta
        records.append(
            IidRepRecord(
                rep=int(i),
                feasible=True,
                delta=result.delta,
                next_radius=next_radius,
                breach=bool(hit),
            )
        )
        if i < check_upto:
            checked += 1
            if trace is not None:
                area = SafetyArea(
                    trace.analytic_supports[scenario.horizon],
                    result.delta,
                    level=est_cfg.alpha,
                )
                geo = breach(area, trace.analytic_supports[scenario.horizon + 1])
            else:
                geo = _geometric_breach_check(scenario, radii, result.delta, est_cfg.alpha)
            if geo != hit:
                mismatches += 1
    return records, checked, mismatches


def _split_indices(total: int, blocks: int) -> list[np.ndarray]:
    return [idx for idx in np.array_split(np.arange(total), blocks) if idx.size]


def _run_blocks(worker, payloads, workers: int):
    if workers <= 1 or len(payloads) <= 1:
        return [worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, payloads))


def run_coverage_iid(scenario: ScenarioConfig) -> CoverageReport:
    """Estimate how often the next radius escapes the iid-regime threshold.

    The correction constant depends only on the sample size, so it is
    estimated once and shared by every replication; feasibility is therefore
    uniform across replications.
    """
    if scenario.mode != "iid":
        raise ValueError("scenario mode must be 'iid'")
    t0 = time.perf_counter()
    settings = scenario.estimator
    est_cfg = IidEstimatorConfig(
        alpha=settings.alpha,
        cn_method=settings.cn_method,
        radius_law=radius_law_for(scenario, float(scenario.covariate.value)),
    )
    const_rng = np.random.default_rng(_rep_seed(scenario, (0,)))
    cn = estimate_cn(
        scenario.horizon, settings.cn_method, rng=const_rng, law=est_cfg.radius_law
    )
    threshold = settings.alpha - cn.value
    t1 = time.perf_counter()

    m = scenario.replications
    check_upto = (
        int(math.ceil(scenario.geometric_check_fraction * m))
        if scenario.geometric_check_fraction > 0
        else 0
    )
    blocks = _split_indices(m, max(1, min(scenario.workers * 4, m)))
    payloads = [(scenario, est_cfg, cn, check_upto, idx) for idx in blocks]
    results = _run_blocks(_iid_block, payloads, scenario.workers)
    records: list[IidRepRecord] = []
    checked = 0
    mismatches = 0
    for rec, c, mm in results:
        records.extend(rec)
        checked += c
        mismatches += mm
    records.sort(key=lambda r: r.rep)
    t2 = time.perf_counter()

    feasible = threshold > 0.0
    feasible_count = m if feasible else 0
    breaches = sum(1 for r in records if r.breach)
    coverage = breaches / feasible_count if feasible_count else None
    se = (
        math.sqrt(coverage * (1.0 - coverage) / feasible_count)
        if coverage is not None
        else None
    )
    return CoverageReport(
        mode="iid",
        n=scenario.horizon,
        alpha=settings.alpha,
        epsilon=None,
        replications=m,
        feasible_count=feasible_count,
        event_count=breaches,
        coverage_estimate=coverage,
        standard_error=se,
        threshold=threshold,
        constant=cn.value,
        constant_se=cn.se if cn.reps else None,
        constant_method=_method_name(settings.cn_method),
        min_n=None if feasible else _min_n_iid(settings.alpha, settings.cn_method),
        violation_flag=False,
        geometric_checked=checked,
        geometric_mismatches=mismatches,
        seed=scenario.seed,
        records=tuple(records),
        timings={
            "constant_seconds": t1 - t0,
            "replications_seconds": t2 - t1,
            "total_seconds": t2 - t0,
        },
    )


def _dependent_block(payload) -> list[DependentRepRecord]:
    scenario, dep_cfg, n, c_value, indices = payload
    records: list[DependentRepRecord] = []
    deterministic_path = not isinstance(scenario.covariate, IidViolatingCovariate)
    ys_shared = scenario.covariate.path(n) if deterministic_path else None
    mean_cdf = dep_cfg.limit_model.mean_cdf
    epsilon = dep_cfg.epsilon
    for i in indices:
        rep_ss = _rep_seed(scenario, (2, int(n), int(i)))
        if ys_shared is None:
            cov_rng = np.random.default_rng(
                np.random.SeedSequence(scenario.seed, spawn_key=(3, int(n), int(i)))
            )
            y_path = scenario.covariate.path(n, cov_rng)
        else:
            y_path = ys_shared
        radii = _radii_from_streams(scenario, rep_ss, n, y_path)
        result = delta_dependent(radii, dep_cfg, c_alpha_value=c_value)
        if not result.feasible:
            records.append(
                DependentRepRecord(
                    rep=int(i), feasible=False, delta=None, tail_mass=None, exceed=None
                )
            )
            continue
        tail = float(1.0 - mean_cdf.cdf(result.delta))
        records.append(
            DependentRepRecord(
                rep=int(i),
                feasible=True,
                delta=result.delta,
                tail_mass=tail,
                exceed=bool(tail > epsilon),
            )
        )
    return records


def run_coverage_dependent(scenario: ScenarioConfig) -> list[CoverageReport]:
    """Tail-mass coverage across the scenario's sample-size ladder.

    Returns one report per ladder entry. The limit-process quantile is
    simulated once and shared; the guarantee is asymptotic, so the smaller
    rungs exist to make the trend visible and the final rung is the binding
    one.
    """
    if scenario.mode != "dependent":
        raise ValueError("scenario mode must be 'dependent'")
    settings = scenario.estimator
    epsilon = settings.epsilon
    t0 = time.perf_counter()
    components, weights = limit_components_for(scenario)
    model = build_limit_model(
        components, weights=weights, grid_points=settings.grid_points
    )
    const_rng = np.random.default_rng(_rep_seed(scenario, (0,)))
    sups = simulate_limit_sup(model, settings.paths, const_rng)
    c_value = float(np.quantile(sups, 1.0 - settings.alpha))
    dep_cfg = DependentEstimatorConfig(
        alpha=settings.alpha,
        epsilon=epsilon,
        limit_model=model,
        paths=settings.paths,
    )
    t1 = time.perf_counter()

    violation = bool(getattr(scenario.covariate, "assumption_violating", False))
    reports: list[CoverageReport] = []
    for n in scenario.ladder:
        tn0 = time.perf_counter()
        threshold = epsilon - c_value / math.sqrt(n)
        m = scenario.replications
        blocks = _split_indices(m, max(1, min(scenario.workers * 4, m)))
        payloads = [(scenario, dep_cfg, int(n), c_value, idx) for idx in blocks]
        results = _run_blocks(_dependent_block, payloads, scenario.workers)
        records: list[DependentRepRecord] = []
        for rec in results:
            records.extend(rec)
        records.sort(key=lambda r: r.rep)
        tn1 = time.perf_counter()

        feasible = threshold > 0.0
        feasible_count = m if feasible else 0
        exceeds = sum(1 for r in records if r.exceed)
        coverage = exceeds / feasible_count if feasible_count else None
        se = (
            math.sqrt(coverage * (1.0 - coverage) / feasible_count)
            if coverage is not None
            else None
        )
        reports.append(
            CoverageReport(
                mode="dependent",
                n=int(n),
                alpha=settings.alpha,
                epsilon=epsilon,
                replications=m,
                feasible_count=feasible_count,
                event_count=exceeds,
                coverage_estimate=coverage,
                standard_error=se,
                threshold=threshold,
                constant=c_value,
                constant_se=None,
                constant_method="limit_quantile",
                min_n=None if feasible else int(math.ceil((c_value / epsilon) ** 2)),
                violation_flag=violation,
                geometric_checked=0,
                geometric_mismatches=0,
                seed=scenario.seed,
                records=tuple(records),
                timings={
                    "constant_seconds": t1 - t0,
                    "replications_seconds": tn1 - tn0,
                    "total_seconds": (t1 - t0) + (tn1 - tn0),
                },
            )
        )
    return reports
