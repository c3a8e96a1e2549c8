"""Scenario files: a strict TOML schema with an embedded-defaults template.

Every coverage experiment is describable as one TOML document, so runs are
reproducible from version-controlled text. Parsing is strict: unknown keys
and missing required keys are hard errors naming the offending table.
"""

from __future__ import annotations

import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .distributions import BetaCdf, CdfModel, NormalCdf, TruncExpCdf, UniformCdf
from .estimator import CnAsymptotic, CnDkw, CnFixed, CnMethod, CnMonteCarlo
from .geometry import Ball, PointCloud, SupportSet
from .harness import EstimatorSettings, ScenarioConfig
from .kernels import (
    ConstantCovariate,
    CovariateProcess,
    CycleCovariate,
    IidViolatingCovariate,
    KernelSpec,
    LowDiscrepancyCovariate,
    NoiseDriver,
)

__all__ = [
    "ConfigError",
    "load_scenario",
    "parse_scenario",
    "default_toml_template",
]


class ConfigError(ValueError):
    """Scenario file failed schema validation."""


def _check_keys(table: dict, allowed: set[str], where: str) -> None:
    extras = set(table) - allowed
    if extras:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(extras))}")


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"[{where}] is missing required key '{key}'")
    return table[key]


def _as_number(value, key: str, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{where}] key '{key}' must be a number")
    return float(value)


def _as_int(value, key: str, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"[{where}] key '{key}' must be an integer")
    return value


def _as_bool(value, key: str, where: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"[{where}] key '{key}' must be a boolean")
    return value


def _as_str(value, key: str, where: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"[{where}] key '{key}' must be a string")
    return value


def _parse_law(table: dict, where: str) -> CdfModel:
    family = _as_str(_require(table, "family", where), "family", where)
    try:
        if family == "uniform":
            _check_keys(table, {"family", "low", "high"}, where)
            return UniformCdf(
                _as_number(table.get("low", 0.0), "low", where),
                _as_number(table.get("high", 1.0), "high", where),
            )
        if family == "beta":
            _check_keys(table, {"family", "shape_a", "shape_b", "lower", "upper"}, where)
            lower = _as_number(table.get("lower", 0.0), "lower", where)
            upper = _as_number(table.get("upper", 1.0), "upper", where)
            if upper <= lower:
                raise ConfigError(f"[{where}] needs upper > lower")
            return BetaCdf(
                _as_number(_require(table, "shape_a", where), "shape_a", where),
                _as_number(_require(table, "shape_b", where), "shape_b", where),
                loc=lower,
                scale=upper - lower,
            )
        if family == "trunc_exp":
            _check_keys(table, {"family", "rate", "cap", "lower", "scale"}, where)
            return TruncExpCdf(
                _as_number(_require(table, "rate", where), "rate", where),
                _as_number(_require(table, "cap", where), "cap", where),
                loc=_as_number(table.get("lower", 0.0), "lower", where),
                scale=_as_number(table.get("scale", 1.0), "scale", where),
            )
        if family == "normal":
            _check_keys(table, {"family", "mean", "sd"}, where)
            return NormalCdf(
                _as_number(table.get("mean", 0.0), "mean", where),
                _as_number(table.get("sd", 1.0), "sd", where),
            )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"[{where}] invalid parameters: {exc}") from exc
    raise ConfigError(
        f"[{where}] unknown family {family!r}; expected uniform, beta, "
        "trunc_exp, or normal"
    )


def _parse_initial(table: dict) -> SupportSet:
    where = "scenario.initial"
    kind = _as_str(_require(table, "kind", where), "kind", where)
    try:
        if kind == "ball":
            _check_keys(table, {"kind", "center", "radius"}, where)
            center = np.asarray(_require(table, "center", where), dtype=float)
            return Ball(center, _as_number(table.get("radius", 0.0), "radius", where))
        if kind == "point":
            _check_keys(table, {"kind", "coords"}, where)
            return Ball(np.asarray(_require(table, "coords", where), dtype=float), 0.0)
        if kind == "point_cloud":
            _check_keys(table, {"kind", "points"}, where)
            return PointCloud(np.asarray(_require(table, "points", where), dtype=float))
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{where}] invalid geometry: {exc}") from exc
    raise ConfigError(f"[{where}] unknown kind {kind!r}")


def _parse_covariate(table: dict) -> CovariateProcess:
    where = "covariate"
    mode = _as_str(_require(table, "mode", where), "mode", where)
    if mode == "constant":
        _check_keys(table, {"mode", "value"}, where)
        return ConstantCovariate(_as_number(table.get("value", 1.0), "value", where))
    if mode == "cycle":
        _check_keys(table, {"mode", "values", "start_index"}, where)
        values = _require(table, "values", where)
        if not isinstance(values, list) or not values:
            raise ConfigError(f"[{where}] 'values' must be a nonempty array")
        try:
            return CycleCovariate(
                tuple(float(v) for v in values),
                start_index=_as_int(table.get("start_index", 0), "start_index", where),
            )
        except ValueError as exc:
            raise ConfigError(f"[{where}] invalid cycle: {exc}") from exc
    if mode in ("low_discrepancy", "iid"):
        law_keys = {"family", "low", "high", "shape_a", "shape_b", "lower", "upper",
                    "rate", "cap", "scale", "mean", "sd"}
        _check_keys(table, {"mode", "start_index"} | law_keys, where)
        law_table = {k: v for k, v in table.items() if k in law_keys}
        law = _parse_law(law_table, where)
        if mode == "low_discrepancy":
            return LowDiscrepancyCovariate(
                law, start_index=_as_int(table.get("start_index", 0), "start_index", where)
            )
        return IidViolatingCovariate(law)
    raise ConfigError(
        f"[{where}] unknown mode {mode!r}; expected constant, cycle, "
        "low_discrepancy, or iid"
    )


def _parse_estimator(table: dict) -> EstimatorSettings:
    where = "estimator"
    _check_keys(
        table,
        {"alpha", "epsilon", "cn_method", "cn_reps", "dkw_beta", "cn_value",
         "paths", "grid_points"},
        where,
    )
    method_name = _as_str(table.get("cn_method", "monte_carlo"), "cn_method", where)
    method: CnMethod
    try:
        if method_name == "monte_carlo":
            method = CnMonteCarlo(reps=_as_int(table.get("cn_reps", 2000), "cn_reps", where))
        elif method_name == "asymptotic":
            method = CnAsymptotic()
        elif method_name == "dkw":
            method = CnDkw(beta=_as_number(table.get("dkw_beta", 0.05), "dkw_beta", where))
        elif method_name == "fixed":
            method = CnFixed(value=_as_number(_require(table, "cn_value", where), "cn_value", where))
        else:
            raise ConfigError(
                f"[{where}] unknown cn_method {method_name!r}; expected "
                "monte_carlo, asymptotic, dkw, or fixed"
            )
        epsilon = table.get("epsilon")
        return EstimatorSettings(
            alpha=_as_number(table.get("alpha", 0.05), "alpha", where),
            epsilon=None if epsilon is None else _as_number(epsilon, "epsilon", where),
            cn_method=method,
            paths=_as_int(table.get("paths", 100_000), "paths", where),
            grid_points=_as_int(table.get("grid_points", 512), "grid_points", where),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"[{where}] invalid settings: {exc}") from exc


def parse_scenario(data: dict) -> ScenarioConfig:
    """Validate a parsed TOML document and assemble the runtime scenario."""
    if not isinstance(data, dict):
        raise ConfigError("scenario document must be a table")
    _check_keys(data, {"scenario", "kernel", "noise", "covariate", "estimator"}, "root")
    scen = _require(data, "scenario", "root")
    kern = _require(data, "kernel", "root")
    noise_tbl = _require(data, "noise", "root")
    cov_tbl = _require(data, "covariate", "root")
    est_tbl = data.get("estimator", {})
    for name, tbl in (
        ("scenario", scen),
        ("kernel", kern),
        ("noise", noise_tbl),
        ("covariate", cov_tbl),
        ("estimator", est_tbl),
    ):
        if not isinstance(tbl, dict):
            raise ConfigError(f"[{name}] must be a table")

    where = "scenario"
    _check_keys(
        scen,
        {"mode", "dimension", "horizon", "replications", "seed", "particles",
         "simulate_full", "workers", "geometric_check_fraction", "n_ladder",
         "allow_violations", "initial"},
        where,
    )
    dimension = _as_int(scen.get("dimension", 1), "dimension", where)
    if dimension < 1:
        raise ConfigError("[scenario] dimension must be >= 1")
    initial_tbl = _require(scen, "initial", where)
    if not isinstance(initial_tbl, dict):
        raise ConfigError("[scenario.initial] must be a table")
    initial = _parse_initial(initial_tbl)

    _check_keys(kern, {"radius_map", "profile"}, "kernel")
    try:
        kernel = KernelSpec(
            radius_map=_as_str(kern.get("radius_map", "identity"), "radius_map", "kernel"),
            profile=_as_str(kern.get("profile", "uniform_ball"), "profile", "kernel"),
            dimension=dimension,
        )
        noise = NoiseDriver(_parse_law(noise_tbl, "noise"))
        covariate = _parse_covariate(cov_tbl)
        estimator = _parse_estimator(est_tbl)
        n_ladder = scen.get("n_ladder")
        if n_ladder is not None:
            if not isinstance(n_ladder, list) or not all(
                isinstance(v, int) and not isinstance(v, bool) for v in n_ladder
            ):
                raise ConfigError("[scenario] n_ladder must be an array of integers")
            n_ladder = tuple(n_ladder)
        return ScenarioConfig(
            kernel=kernel,
            noise=noise,
            covariate=covariate,
            initial_support=initial,
            estimator=estimator,
            mode=_as_str(scen.get("mode", "iid"), "mode", where),
            horizon=_as_int(scen.get("horizon", 100), "horizon", where),
            replications=_as_int(scen.get("replications", 1000), "replications", where),
            seed=_as_int(scen.get("seed", 0), "seed", where),
            particles=_as_int(scen.get("particles", 2000), "particles", where),
            simulate_full=_as_bool(scen.get("simulate_full", False), "simulate_full", where),
            workers=_as_int(scen.get("workers", 1), "workers", where),
            geometric_check_fraction=_as_number(
                scen.get("geometric_check_fraction", 0.01),
                "geometric_check_fraction",
                where,
            ),
            n_ladder=n_ladder,
            allow_violations=_as_bool(
                scen.get("allow_violations", False), "allow_violations", where
            ),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"scenario rejected: {exc}") from exc


def load_scenario(path) -> ScenarioConfig:
    """Read and validate a scenario TOML file."""
    with open(os.fspath(path), "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"TOML syntax error in {path}: {exc}") from exc
    return parse_scenario(data)


def default_toml_template() -> str:
    """Commented scenario template emitted by the CLI's --init flag."""
    return """\
# Coverage-experiment scenario: a complete, runnable reference configuration.

[scenario]
mode = "iid"                    # "iid" or "dependent"
dimension = 1
horizon = 400                   # number of observed radii n (alpha = 0.05 needs ~320+)
replications = 2000
seed = 7
particles = 2000                # particle resolution when simulate_full = true
simulate_full = false           # run the full measure evolution per replication
workers = 1                     # process count for replication blocks
geometric_check_fraction = 0.01 # share of replications cross-checked geometrically
# n_ladder = [400, 1600]        # dependent mode: sample-size ladder (default: [horizon])
allow_violations = false        # permit assumption-violating covariates (no guarantee)

[scenario.initial]
kind = "ball"                   # "ball", "point", or "point_cloud"
center = [0.0]
radius = 0.0
# kind = "point"      requires: coords = [0.0]
# kind = "point_cloud" requires: points = [[0.0], [1.0]]

[kernel]
radius_map = "identity"         # "identity", "scaled" (noise * covariate), "shifted" (noise + covariate)
profile = "uniform_ball"        # "uniform_ball" or "triangular_radial"

[noise]
family = "uniform"              # "uniform", "beta", or "trunc_exp" (bounded support required)
low = 0.0
high = 1.0
# family = "beta"      requires: shape_a, shape_b; optional lower, upper
# family = "trunc_exp" requires: rate, cap; optional lower, scale

[covariate]
mode = "constant"               # "constant", "cycle", "low_discrepancy", or "iid"
value = 1.0
# mode = "cycle"           requires: values = [1.0, 2.0]; optional start_index
# mode = "low_discrepancy" requires: a law (family = ... as in [noise]); optional start_index
# mode = "iid"             requires: a law; violates the regularity assumption

[estimator]
alpha = 0.05
# epsilon = 0.1                 # dependent mode: tolerated tail mass
cn_method = "monte_carlo"       # "monte_carlo", "asymptotic", "dkw", or "fixed"
cn_reps = 2000                  # monte_carlo only
# dkw_beta = 0.05               # dkw only
# cn_value = 0.05               # fixed only
paths = 100000                  # dependent mode: limit-process sample paths
grid_points = 512               # dependent mode: covariance grid resolution
"""
