"""Random ball-kernel families, the noise sequence, and covariate processes.

A transition kernel here is fully determined by one positive radius together
with a mass profile inside the ball; the radius is produced by a named map of
an iid noise draw and a covariate value. Covariate processes come in two
qualities: "regular" ones whose empirical CDF converges to a known limit
faster than 1/sqrt(n) (constant, cycle, low-discrepancy), and an intentionally
violating iid mode kept for stress tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .distributions import CdfModel, MixtureCdf

__all__ = [
    "DegenerateKernelError",
    "UnsupportedCovariateError",
    "NoiseDriver",
    "ConstantCovariate",
    "CycleCovariate",
    "LowDiscrepancyCovariate",
    "IidViolatingCovariate",
    "CovariateProcess",
    "KernelSpec",
    "RealizedKernel",
    "realize_kernel",
    "sample_transition",
    "displacement_cdf",
    "covariate_path",
    "covariate_atoms",
    "covariate_ecdf_gap",
    "van_der_corput",
    "RADIUS_MAPS",
    "PROFILES",
    "RADIUS_FLOOR",
]

RADIUS_MAPS = ("identity", "scaled", "shifted")
PROFILES = ("uniform_ball", "triangular_radial")

# Guard against float underflow only; genuinely nonpositive radii are errors.
RADIUS_FLOOR = 1e-12


class DegenerateKernelError(ValueError):
    """A radius map produced a nonpositive radius."""


class UnsupportedCovariateError(ValueError):
    """The requested operation needs a covariate limit law this mode lacks."""


@dataclass(frozen=True)
class NoiseDriver:
    """Iid noise sequence specification.

    The law must have a finite upper support bound so every realized kernel
    has compact support. ``seed`` is an optional default stream identity;
    all sampling entry points also accept an explicit generator.
    """

    law: CdfModel
    seed: int | None = None

    def __post_init__(self) -> None:
        lo, hi = self.law.support()
        if not np.isfinite(hi):
            raise ValueError("noise law must have a bounded upper support")
        if not np.isfinite(lo):
            raise ValueError("noise law must have a bounded lower support")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.law.sample(rng, size)

    def fresh_rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def van_der_corput(n: int, start: int = 0) -> np.ndarray:
    """First ``n`` terms of the base-2 van der Corput sequence after ``start``.

    Values lie strictly inside (0, 1); the star discrepancy of the first n
    terms is O(log n / n), which is what makes the low-discrepancy covariate
    mode satisfy the fast empirical-convergence requirement.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    out = np.zeros(n, dtype=float)
    denom = 2.0
    while idx.any():
        out += (idx & np.uint64(1)) / denom
        idx >>= np.uint64(1)
        denom *= 2.0
    return out


@dataclass(frozen=True)
class ConstantCovariate:
    """Covariate pinned to a single value."""

    value: float

    assumption_violating = False

    def path(self, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
        if n < 1:
            raise ValueError("need n >= 1")
        return np.full(n, float(self.value))


@dataclass(frozen=True)
class CycleCovariate:
    """Deterministic cycle through a finite list of values."""

    values: tuple[float, ...]
    start_index: int = 0

    assumption_violating = False

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("cycle needs at least one value")
        object.__setattr__(self, "values", vals)
        if self.start_index < 0:
            raise ValueError("start_index must be nonnegative")

    @property
    def period(self) -> int:
        return len(self.values)

    def path(self, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
        if n < 1:
            raise ValueError("need n >= 1")
        idx = (np.arange(self.start_index, self.start_index + n)) % self.period
        return np.asarray(self.values, dtype=float)[idx]


@dataclass(frozen=True)
class LowDiscrepancyCovariate:
    """Quantile transform of the van der Corput sequence into a target law."""

    target: CdfModel
    start_index: int = 0

    assumption_violating = False

    def __post_init__(self) -> None:
        if self.start_index < 0:
            raise ValueError("start_index must be nonnegative")

    def path(self, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
        return self.target.quantile(van_der_corput(n, start=self.start_index))


@dataclass(frozen=True)
class IidViolatingCovariate:
    """Iid covariate draws; deliberately breaks the fast-convergence condition.

    An iid empirical CDF converges at exactly the 1/sqrt(n) rate, so the
    scaled gap does not vanish. Kept for demonstrating that the dependent
    estimator's assumptions are real, and rejected by estimation entry points.
    """

    law: CdfModel

    assumption_violating = True

    def path(self, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
        if n < 1:
            raise ValueError("need n >= 1")
        if rng is None:
            raise ValueError("iid covariate mode needs an explicit rng")
        return self.law.sample(rng, n)


CovariateProcess = Union[
    ConstantCovariate, CycleCovariate, LowDiscrepancyCovariate, IidViolatingCovariate
]


def covariate_path(cov: CovariateProcess, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Materialize the first ``n`` covariate values."""
    return cov.path(n, rng)


def covariate_atoms(cov: CovariateProcess) -> tuple[np.ndarray, np.ndarray]:
    """Atoms and weights of the covariate limit law for the discrete modes.

    Raises:
        UnsupportedCovariateError: for modes whose limit is not a finite
            atomic measure (low-discrepancy, iid).
    """
    if isinstance(cov, ConstantCovariate):
        return np.array([cov.value]), np.array([1.0])
    if isinstance(cov, CycleCovariate):
        values, counts = np.unique(np.asarray(cov.values, dtype=float), return_counts=True)
        return values, counts / counts.sum()
    raise UnsupportedCovariateError(
        f"{type(cov).__name__} has no finite atomic limit law"
    )


def _gap_vs_atoms(path: np.ndarray, atoms: np.ndarray, weights: np.ndarray) -> float:
    """Exact sup gap between the path's ECDF and an atomic CDF.

    Both functions are steps with jumps only at the atoms (every path value is
    an atom), so the sup is attained at an atom or its left limit.
    """
    n = path.size
    srt = np.sort(path)
    ecdf_at = np.searchsorted(srt, atoms, side="right") / n
    ecdf_before = np.searchsorted(srt, atoms, side="left") / n
    cdf_at = np.cumsum(weights)
    cdf_before = cdf_at - weights
    return float(
        max(np.abs(ecdf_at - cdf_at).max(), np.abs(ecdf_before - cdf_before).max())
    )


def covariate_ecdf_gap(cov: CovariateProcess, n: int, rng: np.random.Generator | None = None) -> float:
    """Scaled empirical gap sqrt(n) * sup |ECDF_n - limit CDF|.

    Regular modes drive this to 0; the iid mode keeps it at a nondegenerate
    law. The sup is computed exactly: by atom counting for discrete limits and
    by the order-statistic scan for continuous ones.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    path = cov.path(n, rng)
    if isinstance(cov, (ConstantCovariate, CycleCovariate)):
        atoms, weights = covariate_atoms(cov)
        gap = _gap_vs_atoms(path, atoms, weights)
    elif isinstance(cov, LowDiscrepancyCovariate):
        from .empirical import ks_statistic

        gap = ks_statistic(path, cov.target)
    elif isinstance(cov, IidViolatingCovariate):
        from .empirical import ks_statistic

        gap = ks_statistic(path, cov.law)
    else:
        raise UnsupportedCovariateError(f"unknown covariate mode {type(cov).__name__}")
    return float(np.sqrt(n) * gap)


@dataclass(frozen=True)
class KernelSpec:
    """Family of ball kernels: a radius map plus a within-ball profile."""

    radius_map: str
    profile: str
    dimension: int

    def __post_init__(self) -> None:
        if self.radius_map not in RADIUS_MAPS:
            raise ValueError(f"radius_map must be one of {RADIUS_MAPS}")
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {PROFILES}")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")

    def map_radius(self, xi, y):
        """Raw radius map value(s); positivity is enforced by the callers."""
        xi = np.asarray(xi, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.radius_map == "identity":
            out = xi * np.ones_like(y)
        elif self.radius_map == "scaled":
            out = xi * y
        else:
            out = xi + y
        return out

    def radius_law(self, y: float, noise_law: CdfModel) -> CdfModel:
        """Law of the radius for a fixed covariate value.

        All three maps are affine in the noise draw, so the law is an affine
        image of the noise law. Laws that reach nonpositive radii are refused
        because they cannot drive a ball kernel.

        Raises:
            DegenerateKernelError: if the law puts mass on radii <= 0.
        """
        y = float(y)
        if self.radius_map == "identity":
            law = noise_law
        elif self.radius_map == "scaled":
            if y <= 0.0:
                raise DegenerateKernelError("scaled map needs a positive covariate")
            law = noise_law.affine(y, 0.0)
        else:
            law = noise_law.affine(1.0, y)
        lo, _ = law.support()
        if lo < 0.0:
            raise DegenerateKernelError(
                f"radius law for map {self.radius_map!r} reaches negative values"
            )
        return law


@dataclass(frozen=True)
class RealizedKernel:
    """One concrete kernel: a positive radius applied around any source site."""

    radius: float
    profile: str
    dimension: int

    def __post_init__(self) -> None:
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {PROFILES}")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        r = float(self.radius)
        if not (np.isfinite(r) and r > 0.0):
            raise ValueError("realized kernel radius must be positive")
        object.__setattr__(self, "radius", r)


def realize_kernel(spec: KernelSpec, xi: float, y: float) -> RealizedKernel:
    """Produce the concrete kernel for one (noise, covariate) pair.

    Deterministic in its inputs. The radius is floored at a tiny positive
    value purely as an underflow guard.

    Raises:
        DegenerateKernelError: when the mapped radius is not strictly positive.
    """
    raw = float(spec.map_radius(float(xi), float(y)))
    if not np.isfinite(raw) or raw <= 0.0:
        raise DegenerateKernelError(
            f"radius map {spec.radius_map!r} gave {raw!r} for xi={xi!r}, y={y!r}"
        )
    return RealizedKernel(max(raw, RADIUS_FLOOR), spec.profile, spec.dimension)


def sample_transition(kernel: RealizedKernel, source, rng: np.random.Generator):
    """Sample destination site(s) for one or many sources under one kernel.

    The destination is source + rho * direction with direction uniform on the
    sphere and rho/radius drawn from the profile's radial law:
    ``uniform_ball`` gives mass uniform over the ball volume,
    ``triangular_radial`` gives the radial fraction a density 2(1-u) with mode
    at the center. Both laws keep rho strictly below the radius, so samples
    stay in the open ball.

    Args:
        kernel: realized kernel shared by all sources.
        source: one site of shape (d,) or a batch of shape (m, d).
        rng: generator consumed for directions and radii.

    Returns:
        Array with the same shape as ``source``.
    """
    src = np.asarray(source, dtype=float)
    single = src.ndim == 1
    pts = src[None, :] if single else src
    if pts.ndim != 2 or pts.shape[1] != kernel.dimension:
        raise ValueError("source sites must match the kernel dimension")
    m, d = pts.shape
    gauss = rng.standard_normal((m, d))
    norms = np.linalg.norm(gauss, axis=1, keepdims=True)
    np.maximum(norms, 1e-300, out=norms)
    direction = gauss / norms
    u = rng.random(m)
    if kernel.profile == "uniform_ball":
        frac = u ** (1.0 / d)
    else:
        frac = 1.0 - np.sqrt(1.0 - u)
    out = pts + direction * (kernel.radius * frac)[:, None]
    return out[0] if single else out


def displacement_cdf(profile: str, radius: float, x) -> np.ndarray:
    """CDF of the signed 1-d displacement for a given profile and radius.

    Used to check one-step particle output against the profile it claims.
    """
    if profile not in PROFILES:
        raise ValueError(f"profile must be one of {PROFILES}")
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    t = np.clip(np.asarray(x, dtype=float) / radius, -1.0, 1.0)
    if profile == "uniform_ball":
        return (t + 1.0) / 2.0
    # triangular radial fraction, symmetric in sign: for t >= 0 the CDF is
    # 1/2 + (2t - t^2)/2 and mirrors below zero.
    hump = 2.0 * np.abs(t) - t * t
    return np.where(t >= 0.0, 0.5 + 0.5 * hump, 0.5 - 0.5 * hump)
