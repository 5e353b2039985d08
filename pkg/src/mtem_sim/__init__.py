"""Multiscale truncated Euler-Maruyama simulation of slow-fast SDEs.

The package splits along the method's moving parts: system definitions
(:mod:`.systems`), deterministic noise streams (:mod:`.noise`), the frozen
fast chain and its diagnostics (:mod:`.micro`), the slow-component
integrators (:mod:`.macro`), statistical post-processing (:mod:`.analysis`),
and the experiment CLI (:mod:`.config`, :mod:`.experiments`, :mod:`.cli`).
"""

__version__ = "0.1.0"

from .analysis import (
    AveragedDriftEstimate,
    ConvergenceReport,
    EstimatorErrorCurve,
    LevelResult,
    SmseSeries,
    estimate_averaged_drift,
    estimator_error_curve,
    fit_slope,
    smse,
    w2_1d,
)
from .config import ExperimentConfig, validate_config
from .errors import (
    ConfigurationError,
    DegenerateFitError,
    DivergenceError,
    EstimatorError,
    MtemError,
    NoisePlanningError,
    ProbeError,
    UnsupportedSystemError,
    ValidationError,
)
from .experiments import ResultBundle, run_experiment
from .macro import (
    ExactAveragedPath,
    MacroTrajectory,
    TruncationMap,
    coupled_reference_run,
    exact_averaged_path,
    mtem_run,
    pi_baseline_run,
    tem_run,
    truncate,
)
from .micro import (
    ContractionCurve,
    DriftEstimate,
    FrozenPath,
    contraction_probe,
    decorrelating_thinning,
    default_burn_in,
    empirical_invariant,
    estimate_drift,
    frozen_em,
    stability_threshold,
)
from .noise import (
    IncrementGrid,
    NoisePlan,
    StreamKind,
    fast_increments,
    macro_increments,
    micro_increments,
)
from .systems import (
    DIVERGENCE_THRESHOLD,
    AssumptionReport,
    CoefficientSet,
    GrowthExponents,
    ScalarCoefficients,
    SolverConfig,
    SystemSpec,
    builtin_example_7_1,
    builtin_linear_1d,
    growth_profile,
    growth_profile_inverse,
    make_system,
    probe_assumptions,
    SYSTEM_REGISTRY,
)

__all__ = [
    "__version__",
    # systems
    "CoefficientSet",
    "GrowthExponents",
    "ScalarCoefficients",
    "SystemSpec",
    "SolverConfig",
    "AssumptionReport",
    "probe_assumptions",
    "builtin_example_7_1",
    "builtin_linear_1d",
    "make_system",
    "SYSTEM_REGISTRY",
    "growth_profile",
    "growth_profile_inverse",
    "DIVERGENCE_THRESHOLD",
    # noise
    "NoisePlan",
    "IncrementGrid",
    "StreamKind",
    "macro_increments",
    "micro_increments",
    "fast_increments",
    # micro
    "FrozenPath",
    "DriftEstimate",
    "ContractionCurve",
    "frozen_em",
    "estimate_drift",
    "contraction_probe",
    "empirical_invariant",
    "default_burn_in",
    "decorrelating_thinning",
    "stability_threshold",
    # macro
    "TruncationMap",
    "MacroTrajectory",
    "ExactAveragedPath",
    "truncate",
    "mtem_run",
    "tem_run",
    "pi_baseline_run",
    "coupled_reference_run",
    "exact_averaged_path",
    # analysis
    "SmseSeries",
    "ConvergenceReport",
    "LevelResult",
    "EstimatorErrorCurve",
    "AveragedDriftEstimate",
    "smse",
    "fit_slope",
    "w2_1d",
    "estimator_error_curve",
    "estimate_averaged_drift",
    # experiments / config
    "ExperimentConfig",
    "validate_config",
    "ResultBundle",
    "run_experiment",
    # errors
    "MtemError",
    "ConfigurationError",
    "ValidationError",
    "ProbeError",
    "EstimatorError",
    "DivergenceError",
    "NoisePlanningError",
    "UnsupportedSystemError",
    "DegenerateFitError",
]
