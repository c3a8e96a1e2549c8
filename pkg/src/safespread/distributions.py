"""Scalar distribution models with exact CDF, quantile, and seeded sampling.

Everything downstream (radius laws, limit models, coverage harnesses) draws by
quantile transform, one uniform per sample, so that a fixed seed produces the
same values regardless of which representation of a law is being sampled. Each
family therefore exposes ``cdf``, ``quantile``, and ``sample`` built from the
same special functions, plus ``affine`` for positive rescaling and shifting,
which is how per-covariate radius laws are derived from a noise law.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "CdfModel",
    "UniformCdf",
    "BetaCdf",
    "TruncExpCdf",
    "NormalCdf",
    "MixtureCdf",
]


def _eval(func, x):
    """Apply an array function to scalar or array input, preserving shape."""
    arr = np.asarray(x, dtype=float)
    out = func(arr)
    return float(out) if arr.ndim == 0 else out


class CdfModel:
    """Common interface for the distribution families used in this package."""

    def cdf(self, x):
        raise NotImplementedError

    def quantile(self, p):
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        """Closed support bounds (may be infinite)."""
        raise NotImplementedError

    def affine(self, scale: float, shift: float) -> "CdfModel":
        """Distribution of ``scale * X + shift`` for ``scale > 0``."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw by quantile transform of ``rng.random(size)``."""
        return self.quantile(rng.random(size))


def _check_prob(p) -> None:
    arr = np.asarray(p, dtype=float)
    if np.any((arr < 0.0) | (arr > 1.0)) or np.any(~np.isfinite(arr)):
        raise ValueError("probabilities must lie in [0, 1]")


def _check_scale(scale: float) -> None:
    if not (np.isfinite(scale) and scale > 0.0):
        raise ValueError("affine scale must be positive and finite")


@dataclass(frozen=True)
class UniformCdf(CdfModel):
    """Uniform distribution on (low, high)."""

    low: float
    high: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.low) and np.isfinite(self.high)):
            raise ValueError("uniform bounds must be finite")
        if not self.low < self.high:
            raise ValueError("uniform requires low < high")

    def cdf(self, x):
        width = self.high - self.low
        return _eval(lambda a: np.clip((a - self.low) / width, 0.0, 1.0), x)

    def quantile(self, p):
        _check_prob(p)
        return _eval(lambda q: self.low + q * (self.high - self.low), p)

    def support(self) -> tuple[float, float]:
        return (self.low, self.high)

    def affine(self, scale: float, shift: float) -> "UniformCdf":
        _check_scale(scale)
        return UniformCdf(self.low * scale + shift, self.high * scale + shift)


@dataclass(frozen=True)
class BetaCdf(CdfModel):
    """Beta(shape_a, shape_b) stretched onto (loc, loc + scale)."""

    shape_a: float
    shape_b: float
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        if not (self.shape_a > 0.0 and self.shape_b > 0.0):
            raise ValueError("beta shapes must be positive")
        if not (np.isfinite(self.loc) and np.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError("beta loc must be finite and scale positive")

    def cdf(self, x):
        def f(a):
            z = np.clip((a - self.loc) / self.scale, 0.0, 1.0)
            return special.betainc(self.shape_a, self.shape_b, z)

        return _eval(f, x)

    def quantile(self, p):
        _check_prob(p)
        return _eval(
            lambda q: self.loc + self.scale * special.betaincinv(self.shape_a, self.shape_b, q),
            p,
        )

    def support(self) -> tuple[float, float]:
        return (self.loc, self.loc + self.scale)

    def affine(self, scale: float, shift: float) -> "BetaCdf":
        _check_scale(scale)
        return BetaCdf(self.shape_a, self.shape_b, self.loc * scale + shift, self.scale * scale)


@dataclass(frozen=True)
class TruncExpCdf(CdfModel):
    """Exponential(rate) conditioned on [0, cap], then mapped by loc/scale.

    The conditioning keeps the support compact, which the kernel machinery
    requires of every radius law.
    """

    rate: float
    cap: float
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.rate) and self.rate > 0.0):
            raise ValueError("rate must be positive and finite")
        if not (np.isfinite(self.cap) and self.cap > 0.0):
            raise ValueError("cap must be positive and finite")
        if not (np.isfinite(self.loc) and np.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError("loc must be finite and scale positive")

    def cdf(self, x):
        denom = -np.expm1(-self.rate * self.cap)

        def f(a):
            z = np.clip((a - self.loc) / self.scale, 0.0, self.cap)
            return -np.expm1(-self.rate * z) / denom

        return _eval(f, x)

    def quantile(self, p):
        # F^{-1}(q) = -log(1 + q*(exp(-rate*cap) - 1)) / rate on the base scale
        _check_prob(p)
        denom = np.expm1(-self.rate * self.cap)
        return _eval(lambda q: self.loc + self.scale * (-np.log1p(q * denom) / self.rate), p)

    def support(self) -> tuple[float, float]:
        return (self.loc, self.loc + self.scale * self.cap)

    def affine(self, scale: float, shift: float) -> "TruncExpCdf":
        _check_scale(scale)
        return TruncExpCdf(self.rate, self.cap, self.loc * scale + shift, self.scale * scale)


@dataclass(frozen=True)
class NormalCdf(CdfModel):
    """Gaussian reference law, used by the finite-dimensional limit checks."""

    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.mean) and np.isfinite(self.sd) and self.sd > 0.0):
            raise ValueError("normal needs finite mean and positive sd")

    def cdf(self, x):
        return _eval(lambda a: special.ndtr((a - self.mean) / self.sd), x)

    def quantile(self, p):
        _check_prob(p)
        return _eval(lambda q: self.mean + self.sd * special.ndtri(q), p)

    def support(self) -> tuple[float, float]:
        return (-np.inf, np.inf)

    def affine(self, scale: float, shift: float) -> "NormalCdf":
        _check_scale(scale)
        return NormalCdf(self.mean * scale + shift, self.sd * scale)


def _bracket(components: tuple[CdfModel, ...]) -> tuple[float, float]:
    """Finite bracketing interval covering essentially all mixture mass."""
    lows, highs = [], []
    for comp in components:
        lo, hi = comp.support()
        lows.append(lo if np.isfinite(lo) else float(comp.quantile(1e-15)))
        highs.append(hi if np.isfinite(hi) else float(comp.quantile(1.0 - 1e-15)))
    return min(lows), max(highs)


@dataclass(frozen=True)
class MixtureCdf(CdfModel):
    """Finite mixture of component laws with fixed weights."""

    components: tuple[CdfModel, ...]
    weights: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("mixture needs at least one component")
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if self.weights is None:
            w = tuple(1.0 / len(comps) for _ in comps)
        else:
            w = tuple(float(v) for v in self.weights)
            if len(w) != len(comps):
                raise ValueError("one weight per component required")
            if any(v <= 0.0 for v in w):
                raise ValueError("mixture weights must be positive")
            total = sum(w)
            if abs(total - 1.0) > 1e-9:
                raise ValueError("mixture weights must sum to 1")
            w = tuple(v / total for v in w)
        object.__setattr__(self, "weights", w)

    def cdf(self, x):
        def f(a):
            out = np.zeros_like(a, dtype=float)
            for w, comp in zip(self.weights, self.components):
                out += w * comp.cdf(a)
            return out

        return _eval(f, x)

    def quantile(self, p):
        _check_prob(p)
        lo, hi = _bracket(self.components)

        def f(q):
            lo_arr = np.full_like(q, lo, dtype=float)
            hi_arr = np.full_like(q, hi, dtype=float)
            for _ in range(80):
                mid = 0.5 * (lo_arr + hi_arr)
                below = self.cdf(mid) < q
                lo_arr = np.where(below, mid, lo_arr)
                hi_arr = np.where(below, hi_arr, mid)
            return 0.5 * (lo_arr + hi_arr)

        return _eval(f, np.asarray(p, dtype=float))

    def support(self) -> tuple[float, float]:
        lows, highs = zip(*(c.support() for c in self.components))
        return (min(lows), max(highs))

    def affine(self, scale: float, shift: float) -> "MixtureCdf":
        _check_scale(scale)
        return MixtureCdf(tuple(c.affine(scale, shift) for c in self.components), self.weights)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Component pick by one uniform, then component quantile of a second."""
        cum = np.cumsum(self.weights)
        idx = np.searchsorted(cum, rng.random(size), side="right")
        idx = np.minimum(idx, len(self.components) - 1)
        u = rng.random(size)
        out = np.empty(size, dtype=float)
        for j, comp in enumerate(self.components):
            mask = idx == j
            if mask.any():
                out[mask] = comp.quantile(u[mask])
        return out
