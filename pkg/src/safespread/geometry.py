"""Euclidean support sets and safety areas.

Supports come in three representations: exact balls, exact dilations of a base
set (the analytic view of a spreading support), and finite point clouds (the
particle view). Sites are plain 1-d float arrays; the helpers here keep all
set operations consistent across the three representations so that breach
logic can compare any pair of views.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.spatial import ConvexHull, QhullError

__all__ = [
    "Ball",
    "PointCloud",
    "DilatedBase",
    "SupportSet",
    "SafetyArea",
    "as_site",
    "dimension",
    "diameter",
    "distance",
    "dilate",
    "breach",
    "support_to_json",
    "support_from_json",
    "area_to_json",
    "area_from_json",
]

# Point clouds larger than this go through a convex hull before the pairwise
# diameter scan; below it the plain scan is cheaper than qhull setup.
HULL_MIN_POINTS = 64

_BRUTE_BLOCK = 512


def as_site(coords, dim: int | None = None) -> np.ndarray:
    """Validate and convert coordinates to a finite 1-d float array.

    Args:
        coords: scalar or sequence of coordinates.
        dim: when given, the required dimension.

    Returns:
        A read-only float64 array of shape (d,).

    Raises:
        ValueError: on non-finite values or a dimension mismatch.
    """
    arr = np.atleast_1d(np.asarray(coords, dtype=float))
    if arr.ndim != 1:
        raise ValueError("a site must be a single coordinate vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError("site coordinates must be finite")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"site has dimension {arr.shape[0]}, expected {dim}")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def _frozen_array(values, ndim: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("coordinates must be finite")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Ball:
    """Closed ball with the given center and radius (radius 0 is a point)."""

    center: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _frozen_array(np.atleast_1d(self.center), 1))
        radius = float(self.radius)
        if not (np.isfinite(radius) and radius >= 0.0):
            raise ValueError("ball radius must be finite and nonnegative")
        object.__setattr__(self, "radius", radius)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Finite set of sites, shape (count, dim)."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        object.__setattr__(self, "points", _frozen_array(pts, 2))
        if self.points.shape[0] < 1:
            raise ValueError("a point cloud needs at least one point")


@dataclass(frozen=True, eq=False)
class DilatedBase:
    """All sites within ``delta`` of a base support (closed dilation)."""

    base: "SupportSet"
    delta: float

    def __post_init__(self) -> None:
        _check_support(self.base)
        delta = float(self.delta)
        if not (np.isfinite(delta) and delta >= 0.0):
            raise ValueError("dilation margin must be finite and nonnegative")
        object.__setattr__(self, "delta", delta)


SupportSet = Union[Ball, PointCloud, DilatedBase]


def _check_support(s) -> None:
    if not isinstance(s, (Ball, PointCloud, DilatedBase)):
        raise ValueError(f"not a support set: {type(s).__name__}")


def dimension(s: SupportSet) -> int:
    """Ambient dimension of a support set."""
    if isinstance(s, Ball):
        return int(s.center.shape[0])
    if isinstance(s, PointCloud):
        return int(s.points.shape[1])
    if isinstance(s, DilatedBase):
        return dimension(s.base)
    _check_support(s)
    raise AssertionError


def _brute_diameter(pts: np.ndarray) -> float:
    n = pts.shape[0]
    if n <= _BRUTE_BLOCK * 4:
        diff = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt((diff * diff).sum(axis=-1).max()))
    sq = (pts * pts).sum(axis=1)
    best = 0.0
    for start in range(0, n, _BRUTE_BLOCK):
        block = pts[start : start + _BRUTE_BLOCK]
        d2 = sq[start : start + _BRUTE_BLOCK, None] + sq[None, :] - 2.0 * (block @ pts.T)
        best = max(best, float(d2.max()))
    return float(np.sqrt(max(best, 0.0)))


def _cloud_diameter(pts: np.ndarray) -> float:
    n, d = pts.shape
    if n == 1:
        return 0.0
    if d == 1:
        return float(pts.max() - pts.min())
    if n > HULL_MIN_POINTS:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            pass  # degenerate cloud (collinear etc.); fall through to the scan
    return _brute_diameter(pts)


def diameter(s: SupportSet) -> float:
    """Diameter of a support set, exact for the analytic representations."""
    if isinstance(s, Ball):
        return 2.0 * s.radius
    if isinstance(s, PointCloud):
        return _cloud_diameter(s.points)
    if isinstance(s, DilatedBase):
        return diameter(s.base) + 2.0 * s.delta
    _check_support(s)
    raise AssertionError


def _distances(points: np.ndarray, s: SupportSet) -> np.ndarray:
    """Distances from each row of ``points`` to the set (0 inside)."""
    if isinstance(s, Ball):
        gap = np.linalg.norm(points - s.center[None, :], axis=1) - s.radius
        return np.maximum(gap, 0.0)
    if isinstance(s, PointCloud):
        targets = s.points
        out = np.full(points.shape[0], np.inf)
        for start in range(0, targets.shape[0], _BRUTE_BLOCK * 4):
            block = targets[start : start + _BRUTE_BLOCK * 4]
            diff = points[:, None, :] - block[None, :, :]
            out = np.minimum(out, np.sqrt((diff * diff).sum(axis=-1)).min(axis=1))
        return out
    if isinstance(s, DilatedBase):
        return np.maximum(_distances(points, s.base) - s.delta, 0.0)
    _check_support(s)
    raise AssertionError


def distance(site, s: SupportSet) -> float:
    """Euclidean distance from a site to a support set (0 if inside)."""
    pt = as_site(site, dim=dimension(s))
    return float(_distances(pt[None, :], s)[0])


def dilate(s: SupportSet, delta: float) -> SupportSet:
    """Closed dilation of a support by ``delta >= 0``.

    Dilating by 0 returns the set itself. Consecutive dilations merge, so the
    analytic chain built by the simulator stays flat rather than nesting.
    """
    _check_support(s)
    delta = float(delta)
    if not (np.isfinite(delta) and delta >= 0.0):
        raise ValueError("dilation margin must be finite and nonnegative")
    if delta == 0.0:
        return s
    if isinstance(s, Ball):
        return Ball(s.center, s.radius + delta)
    if isinstance(s, DilatedBase):
        return DilatedBase(s.base, s.delta + delta)
    return DilatedBase(s, delta)


@dataclass(frozen=True, eq=False)
class SafetyArea:
    """Complement of the closed ``delta``-dilation of an observed support.

    A site belongs to the area exactly when its distance to the base support
    strictly exceeds ``delta``; sites on the dilation boundary are excluded.
    ``level`` records the confidence parameter the margin was computed for,
    and ``epsilon`` additionally records the tolerated mass fraction when the
    margin came from the dependent-radii regime.
    """

    base: SupportSet
    delta: float
    level: float = 0.05
    epsilon: float | None = None

    def __post_init__(self) -> None:
        _check_support(self.base)
        delta = float(self.delta)
        if not (np.isfinite(delta) and delta >= 0.0):
            raise ValueError("safety margin must be finite and nonnegative")
        level = float(self.level)
        if not 0.0 < level < 1.0:
            raise ValueError("level must lie strictly inside (0, 1)")
        eps = self.epsilon
        if eps is not None:
            eps = float(eps)
            if not 0.0 < eps < 1.0:
                raise ValueError("epsilon must lie strictly inside (0, 1)")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "epsilon", eps)

    def contains(self, site) -> bool:
        return distance(site, self.base) > self.delta


def breach(area: SafetyArea, next_support: SupportSet) -> bool:
    """Whether the next support reaches into the safety area.

    For a point-cloud view the check is directly geometric: any particle
    strictly farther than ``area.delta`` from the base. For analytic views the
    one-step growth radius implied by the diameters is compared against the
    margin; this assumes ``next_support`` was produced from ``area.base`` by a
    single dilation step.
    """
    if not isinstance(area, SafetyArea):
        raise ValueError("breach expects a SafetyArea")
    _check_support(next_support)
    if isinstance(next_support, PointCloud):
        return bool((_distances(next_support.points, area.base) > area.delta).any())
    implied = 0.5 * (diameter(next_support) - diameter(area.base))
    return implied > area.delta


def support_to_json(s: SupportSet) -> dict:
    """Plain-dict form with a ``kind`` tag, suitable for ``json.dump``."""
    if isinstance(s, Ball):
        return {"kind": "ball", "center": s.center.tolist(), "radius": s.radius}
    if isinstance(s, PointCloud):
        return {"kind": "point_cloud", "points": s.points.tolist()}
    if isinstance(s, DilatedBase):
        return {"kind": "dilated", "base": support_to_json(s.base), "delta": s.delta}
    _check_support(s)
    raise AssertionError


def support_from_json(data) -> SupportSet:
    """Inverse of :func:`support_to_json`.

    Accepts a dict or a JSON string.

    Raises:
        ValueError: unknown kind tag or malformed fields.
    """
    if isinstance(data, str):
        data = json.loads(data)
    if not isinstance(data, dict) or "kind" not in data:
        raise ValueError("support JSON must be an object with a 'kind' tag")
    kind = data["kind"]
    try:
        if kind == "ball":
            return Ball(np.asarray(data["center"], dtype=float), float(data["radius"]))
        if kind == "point_cloud":
            return PointCloud(np.asarray(data["points"], dtype=float))
        if kind == "dilated":
            return DilatedBase(support_from_json(data["base"]), float(data["delta"]))
    except KeyError as exc:
        raise ValueError(f"support JSON missing field: {exc}") from exc
    raise ValueError(f"unknown support kind: {kind!r}")


def area_to_json(area: SafetyArea) -> dict:
    return {
        "kind": "safety_area",
        "base": support_to_json(area.base),
        "delta": area.delta,
        "level": area.level,
        "epsilon": area.epsilon,
    }


def area_from_json(data) -> SafetyArea:
    if isinstance(data, str):
        data = json.loads(data)
    if not isinstance(data, dict) or data.get("kind") != "safety_area":
        raise ValueError("safety-area JSON must be tagged kind='safety_area'")
    eps = data.get("epsilon")
    return SafetyArea(
        support_from_json(data["base"]),
        float(data["delta"]),
        level=float(data.get("level", 0.05)),
        epsilon=None if eps is None else float(eps),
    )
