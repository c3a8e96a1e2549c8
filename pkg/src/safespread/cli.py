"""Command-line interface.

Subcommands: ``simulate`` (one spread run, CSV or JSON trace), ``radii``
(radius recovery from a trace file), ``estimate`` (safety threshold from
radii), ``coverage`` (Monte Carlo validation of the guarantees), ``dist``
(Kolmogorov and limit-sup tables), ``limit-check`` (normality and covariate
regularity diagnostics). All randomness is seed-driven and all output writers
are deterministic: rerunning any subcommand with the same inputs and seed
produces byte-identical files. Wall-clock timings go to standard error only,
unless explicitly opted into the JSON.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace

import numpy as np

from .config import ConfigError, default_toml_template, load_scenario
from .empirical import (
    bridge_model,
    build_limit_model,
    findim_gaussian_test,
    kolmogorov_cdf,
    kolmogorov_quantile,
    simulate_limit_sup,
)
from .estimator import (
    CnAsymptotic,
    CnDkw,
    CnFixed,
    CnMonteCarlo,
    DependentEstimatorConfig,
    IidEstimatorConfig,
    delta_dependent,
    delta_iid,
)
from .evolution import (
    EpidemicConfig,
    TRACE_CSV_COLUMNS,
    radii_from_diameters,
    read_trace_csv,
    run_epidemic,
    trace_to_csv,
    trace_to_json,
)
from .harness import (
    ScenarioConfig,
    limit_components_for,
    radius_law_for,
    run_coverage_dependent,
    run_coverage_iid,
)
from .kernels import (
    ConstantCovariate,
    CycleCovariate,
    covariate_ecdf_gap,
)

__all__ = ["main"]


def _write_text(text: str, output: str | None) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        with open(output, "w", newline="") as fh:
            fh.write(text)


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _parse_floats(raw: str, flag: str) -> list[float]:
    try:
        values = [float(tok) for tok in raw.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ValueError(f"{flag} expects comma-separated numbers: {exc}") from exc
    if not values:
        raise ValueError(f"{flag} got no values")
    return values


def _parse_ints(raw: str, flag: str) -> list[int]:
    try:
        values = [int(tok) for tok in raw.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ValueError(f"{flag} expects comma-separated integers: {exc}") from exc
    if not values:
        raise ValueError(f"{flag} got no values")
    return values


def _scenario_with_overrides(args) -> ScenarioConfig:
    scenario = load_scenario(args.config)
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        updates["workers"] = args.workers
    return replace(scenario, **updates) if updates else scenario


def _cmd_simulate(args) -> int:
    scenario = _scenario_with_overrides(args)
    horizon = args.horizon if args.horizon is not None else scenario.horizon
    epi = EpidemicConfig(
        initial_support=scenario.initial_support,
        kernel=scenario.kernel,
        noise=scenario.noise,
        covariate=scenario.covariate,
        particles=args.particles if args.particles is not None else scenario.particles,
    )
    trace = run_epidemic(epi, horizon, seed=scenario.seed)
    if args.format == "csv":
        _write_text(trace_to_csv(trace), args.output)
    else:
        _write_text(
            _json_text(trace_to_json(trace, include_points=args.include_points)),
            args.output,
        )
    return 0


def _read_radii_input(path: str, view: str) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    if header == list(TRACE_CSV_COLUMNS):
        fh2 = io.StringIO("".join(",".join(r) + "\n" for r in rows))
        cols = read_trace_csv(fh2)
        if view == "true":
            vals = cols["radius_true"][1:]
        elif view == "analytic":
            vals = radii_from_diameters(cols["diameter_analytic"])
        elif view == "particle":
            vals = radii_from_diameters(cols["diameter_particle"], strict=False)
        else:
            raise ValueError("view must be one of 'true', 'analytic', 'particle'")
        if np.any(np.isnan(vals)):
            raise ValueError(f"{path}: trace has missing radius cells")
        return np.asarray(vals, dtype=float)
    if header == ["radius"]:
        try:
            return np.array([float(r[0]) for r in rows[1:]])
        except (IndexError, ValueError) as exc:
            raise ValueError(f"{path}: malformed radius rows: {exc}") from exc
    raise ValueError(
        f"{path}: expected a trace CSV or a one-column 'radius' CSV"
    )


def _cmd_radii(args) -> int:
    values = _read_radii_input(args.trace, args.view)
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "radius"])
        for i, v in enumerate(values, start=1):
            writer.writerow([str(i), repr(float(v))])
        _write_text(buf.getvalue(), args.output)
    else:
        doc = {"kind": "radii", "view": args.view, "values": [float(v) for v in values]}
        _write_text(_json_text(doc), args.output)
    return 0


def _cn_method_from_args(args):
    name = args.cn_method
    if name == "monte_carlo":
        return CnMonteCarlo(reps=args.cn_reps)
    if name == "asymptotic":
        return CnAsymptotic()
    if name == "dkw":
        return CnDkw(beta=args.dkw_beta)
    if name == "fixed":
        if args.cn_value is None:
            raise ValueError("--cn-method fixed requires --cn-value")
        return CnFixed(value=args.cn_value)
    raise ValueError(f"unknown cn method {name!r}")


def _cmd_estimate(args) -> int:
    radii = _read_radii_input(args.radii, args.view)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(0,)))
    if args.mode == "iid":
        cfg = IidEstimatorConfig(alpha=args.alpha, cn_method=_cn_method_from_args(args))
        result = delta_iid(radii, cfg, rng=rng)
    else:
        if args.config is None:
            raise ValueError(
                "dependent mode needs --config to derive the limit model"
            )
        scenario = load_scenario(args.config)
        epsilon = args.epsilon
        if epsilon is None:
            epsilon = scenario.estimator.epsilon
        if epsilon is None:
            raise ValueError("dependent mode needs --epsilon (or one in the config)")
        components, weights = limit_components_for(scenario)
        model = build_limit_model(
            components, weights=weights, grid_points=args.grid_points
        )
        cfg = DependentEstimatorConfig(
            alpha=args.alpha, epsilon=epsilon, limit_model=model, paths=args.paths
        )
        result = delta_dependent(radii, cfg, rng=rng)
    _write_text(_json_text(result.to_dict()), args.output)
    return 0


def _cmd_coverage(args) -> int:
    if args.init:
        _write_text(default_toml_template(), args.output)
        return 0
    if args.config is None:
        raise ValueError("coverage needs --config (or --init to emit a template)")
    scenario = _scenario_with_overrides(args)
    if scenario.mode == "iid":
        report = run_coverage_iid(scenario)
        reports = [report]
        doc = report.to_json_dict(
            with_records=not args.no_records, with_timings=args.timings
        )
    else:
        reports = run_coverage_dependent(scenario)
        doc = {
            "kind": "coverage_report_ladder",
            "reports": [
                r.to_json_dict(
                    with_records=not args.no_records, with_timings=args.timings
                )
                for r in reports
            ],
        }
    for r in reports:
        t = r.timings or {}
        print(
            f"timing n={r.n}: constant={t.get('constant_seconds', 0.0):.3f}s "
            f"replications={t.get('replications_seconds', 0.0):.3f}s "
            f"total={t.get('total_seconds', 0.0):.3f}s",
            file=sys.stderr,
        )
    _write_text(_json_text(doc), args.output)
    return 0


def _cmd_dist(args) -> int:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if args.kolmogorov:
        if (args.x is None) == (args.p is None):
            raise ValueError("--kolmogorov needs exactly one of --x or --p")
        if args.x is not None:
            writer.writerow(["x", "cdf"])
            for x in _parse_floats(args.x, "--x"):
                writer.writerow([repr(float(x)), repr(float(kolmogorov_cdf(x)))])
        else:
            writer.writerow(["p", "quantile"])
            for p in _parse_floats(args.p, "--p"):
                writer.writerow([repr(float(p)), repr(float(kolmogorov_quantile(p)))])
        _write_text(buf.getvalue(), args.output)
        return 0
    # limit-sup sampling
    if args.config is not None:
        scenario = load_scenario(args.config)
        components, weights = limit_components_for(scenario)
        model = build_limit_model(
            components, weights=weights, grid_points=args.grid_points
        )
    else:
        from .empirical import bridge_model

        model = bridge_model(grid_points=args.grid_points)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(0,)))
    sups = simulate_limit_sup(model, args.paths, rng)
    if args.quantiles is not None:
        writer.writerow(["p", "quantile"])
        for p in _parse_floats(args.quantiles, "--quantiles"):
            if not 0.0 < p < 1.0:
                raise ValueError("--quantiles values must lie strictly inside (0, 1)")
            writer.writerow([repr(float(p)), repr(float(np.quantile(sups, p)))])
    else:
        writer.writerow(["sup"])
        for v in sups:
            writer.writerow([repr(float(v))])
    _write_text(buf.getvalue(), args.output)
    return 0


def _findim_components(scenario: ScenarioConfig):
    # Per-step laws in path order: a cycle is represented by one component
    # per position so the equal cycling inside the test matches the process.
    cov = scenario.covariate
    if isinstance(cov, ConstantCovariate):
        return (radius_law_for(scenario, float(cov.value)),)
    if isinstance(cov, CycleCovariate):
        return tuple(radius_law_for(scenario, float(y)) for y in cov.values)
    components, _ = limit_components_for(scenario)
    return components


def _cmd_limit_check(args) -> int:
    scenario = _scenario_with_overrides(args)
    components = _findim_components(scenario)
    comps_model, weights = limit_components_for(scenario)
    model = build_limit_model(comps_model, weights=weights, grid_points=512)
    if args.t_points is not None:
        t_points = _parse_floats(args.t_points, "--t-points")
    else:
        t_points = [float(model.mean_cdf.quantile(q)) for q in (0.25, 0.5, 0.75)]
    rng = np.random.default_rng(np.random.SeedSequence(scenario.seed, spawn_key=(8,)))
    report = findim_gaussian_test(
        components, t_points, n=args.n, reps=args.reps, rng=rng
    )
    gap_rows = []
    for n in _parse_ints(args.gap_sizes, "--gap-sizes"):
        gap_rng = np.random.default_rng(
            np.random.SeedSequence(scenario.seed, spawn_key=(9, int(n)))
        )
        gap_rows.append(
            {
                "n": int(n),
                "scaled_gap": float(
                    covariate_ecdf_gap(scenario.covariate, int(n), gap_rng)
                ),
            }
        )
    doc = {
        "kind": "limit_check",
        "normality": {
            "n": report.n,
            "reps": report.reps,
            "passed": report.passed,
            "rejections": report.rejections,
            "marginals": [
                {
                    "t": m.t,
                    "variance": m.variance,
                    "lattice_distance": m.lattice_distance,
                    "empirical_distance": m.empirical_distance,
                    "threshold": m.threshold,
                    "degenerate": m.degenerate,
                    "passed": m.passed,
                }
                for m in report.marginals
            ],
            "covariances": [
                {
                    "s": c.s,
                    "t": c.t,
                    "target": c.target,
                    "estimate": c.estimate,
                    "tolerance": c.tolerance,
                    "passed": c.passed,
                }
                for c in report.covariances
            ],
        },
        "covariate_regularity": {
            "assumption_violating": bool(
                getattr(scenario.covariate, "assumption_violating", False)
            ),
            "scaled_gaps": gap_rows,
        },
    }
    _write_text(_json_text(doc), args.output)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="safespread",
        description=(
            "Simulate measure-valued spread through random ball kernels and "
            "estimate next-step safety areas with coverage guarantees."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one spread simulation")
    p_sim.add_argument("--config", required=True, help="scenario TOML file")
    p_sim.add_argument("--horizon", type=int, default=None, help="steps to run")
    p_sim.add_argument("--particles", type=int, default=None)
    p_sim.add_argument("--seed", type=int, default=None, help="override scenario seed")
    p_sim.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sim.add_argument("--include-points", action="store_true",
                       help="embed particle clouds in JSON output")
    p_sim.add_argument("--output", default=None, help="file path, or - for stdout")
    p_sim.set_defaults(func=_cmd_simulate)

    p_rad = sub.add_parser("radii", help="recover step radii from a trace file")
    p_rad.add_argument("trace", help="trace CSV produced by simulate")
    p_rad.add_argument("--view", choices=("true", "analytic", "particle"),
                       default="analytic")
    p_rad.add_argument("--format", choices=("csv", "json"), default="csv")
    p_rad.add_argument("--output", default=None)
    p_rad.set_defaults(func=_cmd_radii)

    p_est = sub.add_parser("estimate", help="estimate the safety threshold")
    p_est.add_argument("radii", help="radius CSV (column 'radius') or trace CSV")
    p_est.add_argument("--view", choices=("true", "analytic", "particle"),
                       default="true", help="radius view when given a trace CSV")
    p_est.add_argument("--mode", choices=("iid", "dependent"), default="iid")
    p_est.add_argument("--alpha", type=float, default=0.05)
    p_est.add_argument("--epsilon", type=float, default=None)
    p_est.add_argument("--cn-method",
                       choices=("monte_carlo", "asymptotic", "dkw", "fixed"),
                       default="monte_carlo")
    p_est.add_argument("--cn-reps", type=int, default=2000)
    p_est.add_argument("--dkw-beta", type=float, default=0.05)
    p_est.add_argument("--cn-value", type=float, default=None)
    p_est.add_argument("--paths", type=int, default=100_000)
    p_est.add_argument("--grid-points", type=int, default=512)
    p_est.add_argument("--config", default=None,
                       help="scenario TOML (required for dependent mode)")
    p_est.add_argument("--seed", type=int, default=0)
    p_est.add_argument("--output", default=None)
    p_est.set_defaults(func=_cmd_estimate)

    p_cov = sub.add_parser("coverage", help="run a Monte Carlo coverage experiment")
    p_cov.add_argument("--config", default=None, help="scenario TOML file")
    p_cov.add_argument("--init", action="store_true",
                       help="write a commented scenario template and exit")
    p_cov.add_argument("--seed", type=int, default=None, help="override scenario seed")
    p_cov.add_argument("--workers", type=int, default=None)
    p_cov.add_argument("--timings", action="store_true",
                       help="embed wall-clock timings in the JSON report")
    p_cov.add_argument("--no-records", action="store_true",
                       help="omit per-replication records")
    p_cov.add_argument("--output", default=None)
    p_cov.set_defaults(func=_cmd_coverage)

    p_dist = sub.add_parser("dist", help="distribution tables and samples")
    group = p_dist.add_mutually_exclusive_group(required=True)
    group.add_argument("--kolmogorov", action="store_true",
                       help="Kolmogorov CDF/quantile table")
    group.add_argument("--limit-sup", action="store_true",
                       help="sample the limit-process supremum")
    p_dist.add_argument("--x", default=None, help="comma-separated CDF arguments")
    p_dist.add_argument("--p", default=None, help="comma-separated quantile levels")
    p_dist.add_argument("--config", default=None,
                        help="scenario TOML for the limit model (default: bridge)")
    p_dist.add_argument("--grid-points", type=int, default=512)
    p_dist.add_argument("--paths", type=int, default=100_000)
    p_dist.add_argument("--quantiles", default=None,
                        help="emit these quantiles instead of raw samples")
    p_dist.add_argument("--seed", type=int, default=0)
    p_dist.add_argument("--output", default=None)
    p_dist.set_defaults(func=_cmd_dist)

    p_chk = sub.add_parser("limit-check",
                           help="normality and covariate regularity diagnostics")
    p_chk.add_argument("--config", required=True, help="scenario TOML file")
    p_chk.add_argument("--n", type=int, default=500, help="sample size per replicate")
    p_chk.add_argument("--reps", type=int, default=4000)
    p_chk.add_argument("--t-points", default=None,
                       help="comma-separated evaluation points (at most 3)")
    p_chk.add_argument("--gap-sizes", default="100,400,1600",
                       help="covariate path lengths for the scaled ECDF gap")
    p_chk.add_argument("--seed", type=int, default=None, help="override scenario seed")
    p_chk.add_argument("--output", default=None)
    p_chk.set_defaults(func=_cmd_limit_check)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures, covariance errors included
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
