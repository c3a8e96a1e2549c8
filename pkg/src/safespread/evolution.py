"""Forward simulation of the spread measure and diameter bookkeeping.

Two synchronized views of the same run are kept. The analytic view tracks the
exact support set, which under a ball kernel of radius r grows by one
r-dilation per step, so consecutive support diameters differ by exactly twice
the step radius. The particle view tracks a finite sample of the spread
measure itself and is subject to Monte Carlo error; its diameters
underestimate the support diameter and need not be monotone.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass

import numpy as np

from .geometry import (
    Ball,
    DilatedBase,
    PointCloud,
    SupportSet,
    diameter,
    dilate,
    dimension,
    support_to_json,
)
from .kernels import (
    CovariateProcess,
    KernelSpec,
    NoiseDriver,
    RealizedKernel,
    covariate_path,
    realize_kernel,
    sample_transition,
)

__all__ = [
    "InconsistentTraceError",
    "ParticleMeasure",
    "EpidemicConfig",
    "EpidemicTrace",
    "run_epidemic",
    "step_measure",
    "sample_initial_measure",
    "radii_from_diameters",
    "extract_radii",
    "trace_to_csv",
    "read_trace_csv",
    "trace_to_json",
    "TRACE_CSV_COLUMNS",
]

TRACE_CSV_COLUMNS = (
    "step",
    "diameter_analytic",
    "diameter_particle",
    "radius_true",
    "radius_recovered",
)

_WEIGHT_TOL = 1e-9


class InconsistentTraceError(ValueError):
    """Diameters claimed to come from dilation steps but decreased."""


@dataclass(frozen=True, eq=False)
class ParticleMeasure:
    """Weighted particle approximation of the spread measure at one step."""

    sites: np.ndarray
    weights: np.ndarray
    generation: int = 0

    def __post_init__(self) -> None:
        sites = np.asarray(self.sites, dtype=float)
        if sites.ndim == 1:
            sites = sites[:, None]
        if sites.ndim != 2 or sites.shape[0] < 1:
            raise ValueError("sites must be a nonempty (n, d) array")
        if not np.all(np.isfinite(sites)):
            raise ValueError("sites must be finite")
        weights = np.asarray(self.weights, dtype=float)
        if weights.shape != (sites.shape[0],):
            raise ValueError("weights must be one per site")
        if np.any(weights < 0.0):
            raise ValueError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > _WEIGHT_TOL:
            raise ValueError("weights must sum to one")
        sites = sites.copy()
        weights = weights.copy()
        sites.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, sites: np.ndarray, generation: int = 0) -> "ParticleMeasure":
        sites = np.asarray(sites, dtype=float)
        n = sites.shape[0]
        return cls(sites, np.full(n, 1.0 / n), generation)

    @property
    def count(self) -> int:
        return self.sites.shape[0]

    @property
    def dimension(self) -> int:
        return self.sites.shape[1]

    def as_cloud(self) -> PointCloud:
        return PointCloud(self.sites)


@dataclass(frozen=True)
class EpidemicConfig:
    """Everything needed to run one spread simulation."""

    initial_support: SupportSet
    kernel: KernelSpec
    noise: NoiseDriver
    covariate: CovariateProcess
    particles: int = 10_000

    def __post_init__(self) -> None:
        if self.particles < 1:
            raise ValueError("particles must be >= 1")
        if dimension(self.initial_support) != self.kernel.dimension:
            raise ValueError(
                "initial support dimension does not match the kernel dimension"
            )
        if isinstance(self.initial_support, DilatedBase):
            raise ValueError(
                "start from a ball or point cloud; dilated sets have no sampler"
            )


@dataclass(frozen=True, eq=False)
class EpidemicTrace:
    """Complete record of one run: supports, clouds, diameters, radii."""

    dimension: int
    analytic_supports: tuple
    particle_clouds: tuple
    diameters_analytic: np.ndarray
    diameters_particle: np.ndarray
    true_radii: np.ndarray
    noise_values: np.ndarray
    covariate_values: np.ndarray

    @property
    def horizon(self) -> int:
        return int(self.true_radii.size)

    @property
    def recovered_radii(self) -> np.ndarray:
        """Radii recovered from consecutive analytic diameters."""
        return radii_from_diameters(self.diameters_analytic)


def sample_initial_measure(
    support: SupportSet, count: int, rng: np.random.Generator
) -> ParticleMeasure:
    """Draw an equal-weight particle cloud spread over the initial support.

    Balls are sampled uniformly by volume (a zero-radius ball is a point
    mass), point clouds uniformly over their atoms. Dilated sets are refused:
    there is no generic uniform sampler for them.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if isinstance(support, Ball):
        d = support.center.size
        gauss = rng.standard_normal((count, d))
        norms = np.linalg.norm(gauss, axis=1, keepdims=True)
        np.maximum(norms, 1e-300, out=norms)
        frac = rng.random(count) ** (1.0 / d)
        sites = support.center[None, :] + gauss / norms * (support.radius * frac)[:, None]
        return ParticleMeasure.uniform(sites)
    if isinstance(support, PointCloud):
        idx = rng.integers(0, support.points.shape[0], size=count)
        return ParticleMeasure.uniform(support.points[idx])
    raise ValueError("cannot sample from a dilated support")


def step_measure(
    measure: ParticleMeasure,
    kernel: RealizedKernel,
    rng: np.random.Generator,
    count: int | None = None,
) -> ParticleMeasure:
    """One transition: resample sources by weight, jump each through the kernel."""
    if count is None:
        count = measure.count
    if count < 1:
        raise ValueError("count must be >= 1")
    cum = np.cumsum(measure.weights)
    cum[-1] = 1.0
    idx = np.searchsorted(cum, rng.random(count), side="right")
    sources = measure.sites[idx]
    dest = sample_transition(kernel, sources, rng)
    return ParticleMeasure.uniform(dest, generation=measure.generation + 1)


def _three_streams(seed) -> tuple[np.random.Generator, ...]:
    # Independent streams for noise, covariate, and particles so that the
    # radius sequence is unchanged by the particle count and the noise is
    # structurally independent of any random covariate draws.
    if isinstance(seed, np.random.Generator):
        seeds = seed.integers(0, 2**63 - 1, size=3)
        return tuple(np.random.default_rng(int(s)) for s in seeds)
    if isinstance(seed, np.random.SeedSequence):
        children = seed.spawn(3)
    else:
        children = np.random.SeedSequence(seed).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)


def run_epidemic(config: EpidemicConfig, horizon: int, seed=None) -> EpidemicTrace:
    """Simulate ``horizon`` transition steps from the configured start.

    Args:
        config: model specification, including the particle resolution.
        horizon: number of steps, at least 1.
        seed: anything ``numpy.random.SeedSequence`` accepts, an existing
            ``SeedSequence``, or a ``Generator``.

    Returns:
        The full trace. Analytic diameters satisfy the exact one-dilation
        growth per step; particle diameters are sampled underestimates.

    Raises:
        DegenerateKernelError: if a (noise, covariate) pair maps to a
            nonpositive radius.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng_noise, rng_cov, rng_particles = _three_streams(seed)

    ys = covariate_path(config.covariate, horizon, rng_cov)
    xis = config.noise.sample(rng_noise, horizon)
    kernels = [
        realize_kernel(config.kernel, xis[i], ys[i]) for i in range(horizon)
    ]
    radii = np.array([k.radius for k in kernels])

    supports: list[SupportSet] = [config.initial_support]
    for r in radii:
        supports.append(dilate(supports[-1], float(r)))

    measure = sample_initial_measure(config.initial_support, config.particles, rng_particles)
    clouds = [measure.sites]
    for k in kernels:
        measure = step_measure(measure, k, rng_particles)
        clouds.append(measure.sites)

    diam_a = np.array([diameter(s) for s in supports])
    diam_p = np.array([diameter(PointCloud(c)) for c in clouds])

    return EpidemicTrace(
        dimension=config.kernel.dimension,
        analytic_supports=tuple(supports),
        particle_clouds=tuple(clouds),
        diameters_analytic=diam_a,
        diameters_particle=diam_p,
        true_radii=radii,
        noise_values=np.asarray(xis, dtype=float),
        covariate_values=np.asarray(ys, dtype=float),
    )


def radii_from_diameters(diams, tol: float = 1e-9, strict: bool = True) -> np.ndarray:
    """Recover step radii from a diameter sequence via half the increments.

    Args:
        diams: diameters after 0..n steps, length n + 1.
        tol: relative slack before a decrease counts as inconsistent.
        strict: raise on a real decrease instead of clamping. Particle-view
            diameters are noisy underestimates, so callers of that view pass
            ``strict=False``.

    Raises:
        InconsistentTraceError: in strict mode, when some diameter shrinks by
            more than the tolerance.
    """
    d = np.asarray(diams, dtype=float)
    if d.ndim != 1 or d.size < 2:
        raise ValueError("need a 1-d sequence of at least two diameters")
    diffs = np.diff(d)
    if strict:
        slack = tol * np.maximum(1.0, np.abs(d[:-1]))
        bad = np.nonzero(diffs < -slack)[0]
        if bad.size:
            i = int(bad[0])
            raise InconsistentTraceError(
                f"diameter decreased at step {i + 1}: {d[i]!r} -> {d[i + 1]!r}"
            )
    return np.maximum(diffs, 0.0) / 2.0


def extract_radii(trace: EpidemicTrace, view: str = "true") -> np.ndarray:
    """Radius sequence under one of the three views.

    ``"true"`` returns the realized kernel radii, ``"analytic"`` recovers them
    from exact support diameters (equal to the true ones up to float error),
    ``"particle"`` recovers them from sampled cloud diameters.
    """
    if view == "true":
        return trace.true_radii.copy()
    if view == "analytic":
        return radii_from_diameters(trace.diameters_analytic)
    if view == "particle":
        return radii_from_diameters(trace.diameters_particle, strict=False)
    raise ValueError("view must be one of 'true', 'analytic', 'particle'")


def trace_to_csv(trace: EpidemicTrace) -> str:
    """Render the per-step table as CSV text.

    Row 0 is the initial state, so its radius cells are empty. Floats use
    ``repr`` for exact round-trips.
    """
    recovered = trace.recovered_radii
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_CSV_COLUMNS)
    for i in range(trace.horizon + 1):
        row = [
            str(i),
            repr(float(trace.diameters_analytic[i])),
            repr(float(trace.diameters_particle[i])),
            "" if i == 0 else repr(float(trace.true_radii[i - 1])),
            "" if i == 0 else repr(float(recovered[i - 1])),
        ]
        writer.writerow(row)
    return buf.getvalue()


def read_trace_csv(source) -> dict[str, np.ndarray]:
    """Parse a trace CSV back into arrays; blank cells become NaN.

    Args:
        source: path or open text file.
    """
    if hasattr(source, "read"):
        rows = list(csv.reader(source))
    else:
        with open(os.fspath(source), newline="") as fh:
            rows = list(csv.reader(fh))
    if not rows or rows[0] != list(TRACE_CSV_COLUMNS):
        raise ValueError("not a trace CSV: header mismatch")
    body = rows[1:]
    if not body:
        raise ValueError("trace CSV has no data rows")
    cols = {name: [] for name in TRACE_CSV_COLUMNS}
    for row in body:
        if len(row) != len(TRACE_CSV_COLUMNS):
            raise ValueError("trace CSV row has wrong arity")
        for name, cell in zip(TRACE_CSV_COLUMNS, row):
            cols[name].append(float(cell) if cell != "" else np.nan)
    out = {name: np.asarray(vals) for name, vals in cols.items()}
    out["step"] = out["step"].astype(int)
    return out


def trace_to_json(trace: EpidemicTrace, include_points: bool = False) -> dict:
    """JSON-ready dict for one trace.

    Supports are stored compactly: the initial set plus cumulative dilation
    offsets, from which every intermediate support is reconstructible.
    Particle clouds are large and only included on request.
    """
    doc = {
        "kind": "epidemic_trace",
        "dimension": trace.dimension,
        "horizon": trace.horizon,
        "initial_support": support_to_json(trace.analytic_supports[0]),
        "cumulative_dilations": np.cumsum(trace.true_radii).tolist(),
        "diameters": {
            "analytic": trace.diameters_analytic.tolist(),
            "particle": trace.diameters_particle.tolist(),
        },
        "radii": {
            "true": trace.true_radii.tolist(),
            "recovered": trace.recovered_radii.tolist(),
        },
        "noise_values": trace.noise_values.tolist(),
        "covariate_values": trace.covariate_values.tolist(),
        "particles": int(trace.particle_clouds[0].shape[0]),
    }
    if include_points:
        doc["particle_clouds"] = [c.tolist() for c in trace.particle_clouds]
    return doc
