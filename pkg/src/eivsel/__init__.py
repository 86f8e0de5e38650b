"""Sparse linear regression when the design is observed with noise.

The package fits a family of l1-based selectors that stay consistent when
the regressors carry additive measurement noise, by inflating the residual
constraint with terms driven by the l1, l2, and sup norms of the candidate
coefficient vector. It bundles the deviation-threshold calculus that sets
the penalty levels, a certified cone-program solver for all the estimator
shapes, exact small-scale sensitivity oracles, and a seeded Monte Carlo lab
with a command line front end.
"""

from .model import (
    ESTIMATOR_TAGS,
    SOLUTION_STATUSES,
    DimensionMismatchError,
    EivDataset,
    EivselError,
    EmptyInputError,
    EstimatorKind,
    InconsistentSpecError,
    MissingDesignError,
    NonFiniteError,
    Solution,
    ThetaSet,
    load_dataset_csv,
    validate_dataset,
)
from .thresholds import (
    DomainError,
    NoiseConstants,
    ThresholdSet,
    compute_m2,
    lemma1_thresholds,
    lemma2_thresholds,
    simulation_tuning,
    tuning_from_lemmas,
)
from .solver import (
    SelectorProgram,
    SolverBackendError,
    SolverOptions,
    dump_program,
    feasibility_residual,
    solve,
)
from .estimators import EstimatorSpec, build_program, default_label, estimate
from .sensitivity import (
    DimensionCapError,
    SensitivityQuery,
    SensitivityResult,
    check_kappa_condition,
    cone_membership,
    kappa_bruteforce,
)
from .simlab import (
    MetricsRow,
    SimConfig,
    benchmark_estimators,
    benchmark_tuning,
    compute_metrics,
    generate_dataset,
    run_experiment,
    safeguard_comparison_estimators,
    write_metrics_csv,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "ESTIMATOR_TAGS",
    "SOLUTION_STATUSES",
    "DimensionMismatchError",
    "EivDataset",
    "EivselError",
    "EmptyInputError",
    "EstimatorKind",
    "InconsistentSpecError",
    "MissingDesignError",
    "NonFiniteError",
    "Solution",
    "ThetaSet",
    "load_dataset_csv",
    "validate_dataset",
    # thresholds
    "DomainError",
    "NoiseConstants",
    "ThresholdSet",
    "compute_m2",
    "lemma1_thresholds",
    "lemma2_thresholds",
    "simulation_tuning",
    "tuning_from_lemmas",
    # solver
    "SelectorProgram",
    "SolverBackendError",
    "SolverOptions",
    "dump_program",
    "feasibility_residual",
    "solve",
    # estimators
    "EstimatorSpec",
    "build_program",
    "default_label",
    "estimate",
    # sensitivity
    "DimensionCapError",
    "SensitivityQuery",
    "SensitivityResult",
    "check_kappa_condition",
    "cone_membership",
    "kappa_bruteforce",
    # simlab
    "MetricsRow",
    "SimConfig",
    "benchmark_estimators",
    "benchmark_tuning",
    "compute_metrics",
    "generate_dataset",
    "run_experiment",
    "safeguard_comparison_estimators",
    "write_metrics_csv",
]
