"""Safety areas for measure-valued spread driven by random ball kernels.

The package simulates a spread process whose support grows by randomly
scaled ball dilations, estimates one-step safety thresholds from observed
radii under both independent and dependent step distributions, and checks
the advertised coverage guarantees by Monte Carlo.
"""

from .distributions import (
    BetaCdf,
    CdfModel,
    MixtureCdf,
    NormalCdf,
    TruncExpCdf,
    UniformCdf,
)
from .geometry import (
    Ball,
    DilatedBase,
    PointCloud,
    SafetyArea,
    area_from_json,
    area_to_json,
    breach,
    diameter,
    dilate,
    support_from_json,
    support_to_json,
)
from .kernels import (
    ConstantCovariate,
    CycleCovariate,
    DegenerateKernelError,
    IidViolatingCovariate,
    KernelSpec,
    LowDiscrepancyCovariate,
    NoiseDriver,
    RealizedKernel,
    UnsupportedCovariateError,
    covariate_atoms,
    covariate_ecdf_gap,
    covariate_path,
    displacement_cdf,
    realize_kernel,
    sample_transition,
)
from .evolution import (
    EpidemicConfig,
    EpidemicTrace,
    InconsistentTraceError,
    ParticleMeasure,
    extract_radii,
    radii_from_diameters,
    read_trace_csv,
    run_epidemic,
    sample_initial_measure,
    step_measure,
    trace_to_csv,
    trace_to_json,
)
from .empirical import (
    BRIDGE_SUP_MEAN,
    CovarianceError,
    Ecdf,
    FindimReport,
    LimitProcessModel,
    ModulusReport,
    MonteCarloEstimate,
    VanishingSequence,
    averaged_modulus,
    bridge_model,
    build_limit_model,
    c_alpha,
    ecdf,
    expected_ks_sup,
    findim_gaussian_test,
    kolmogorov_cdf,
    kolmogorov_quantile,
    ks_statistic,
    modulus_of_continuity,
    simulate_limit_sup,
    uniform_gap,
    vanishing_sequence,
)
from .estimator import (
    CnAsymptotic,
    CnDkw,
    CnFixed,
    CnMonteCarlo,
    DeltaResult,
    DependentEstimatorConfig,
    IidEstimatorConfig,
    NoFeasibleDeltaError,
    delta_dependent,
    delta_iid,
    estimate_cn,
    make_safety_area,
)
from .harness import (
    CoverageReport,
    EstimatorSettings,
    ScenarioConfig,
    run_coverage_dependent,
    run_coverage_iid,
)
from .config import ConfigError, default_toml_template, load_scenario, parse_scenario

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # distributions
    "CdfModel", "UniformCdf", "BetaCdf", "TruncExpCdf", "NormalCdf", "MixtureCdf",
    # geometry
    "Ball", "PointCloud", "DilatedBase", "SafetyArea",
    "diameter", "dilate", "breach",
    "support_to_json", "support_from_json", "area_to_json", "area_from_json",
    # kernels
    "KernelSpec", "RealizedKernel", "NoiseDriver",
    "ConstantCovariate", "CycleCovariate", "LowDiscrepancyCovariate",
    "IidViolatingCovariate",
    "DegenerateKernelError", "UnsupportedCovariateError",
    "realize_kernel", "sample_transition", "displacement_cdf",
    "covariate_path", "covariate_atoms", "covariate_ecdf_gap",
    # evolution
    "ParticleMeasure", "EpidemicConfig", "EpidemicTrace", "InconsistentTraceError",
    "sample_initial_measure", "step_measure", "run_epidemic",
    "radii_from_diameters", "extract_radii",
    "trace_to_csv", "read_trace_csv", "trace_to_json",
    # empirical process toolkit
    "BRIDGE_SUP_MEAN", "MonteCarloEstimate", "Ecdf", "ecdf", "ks_statistic",
    "kolmogorov_cdf", "kolmogorov_quantile", "expected_ks_sup",
    "LimitProcessModel", "build_limit_model", "bridge_model",
    "simulate_limit_sup", "c_alpha", "CovarianceError",
    "VanishingSequence", "vanishing_sequence", "uniform_gap",
    "modulus_of_continuity", "averaged_modulus", "ModulusReport",
    "findim_gaussian_test", "FindimReport",
    # estimator
    "CnMonteCarlo", "CnAsymptotic", "CnDkw", "CnFixed", "estimate_cn",
    "IidEstimatorConfig", "DependentEstimatorConfig", "DeltaResult",
    "NoFeasibleDeltaError", "delta_iid", "delta_dependent", "make_safety_area",
    # harness
    "EstimatorSettings", "ScenarioConfig", "CoverageReport",
    "run_coverage_iid", "run_coverage_dependent",
    # config
    "ConfigError", "parse_scenario", "load_scenario", "default_toml_template",
]
