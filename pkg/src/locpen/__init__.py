"""Data-dependent complexity penalties for model selection over interval
classes, with exact small-scale oracles and Monte Carlo verification suites
for every bound the penalties rest on."""

from .classes import (
    ErmResult,
    ErrorVectorSet,
    EnumerationInfeasible,
    IntervalClassifier,
    ModelClass,
    block_structure,
    empirical_loss,
    enumerate_error_vectors,
    erm,
    interval_pattern_count,
    parse_class_token,
    parse_hierarchy,
    worst_case_log_shatter,
)
from .complexity import (
    ConstantProfile,
    LocalizationResult,
    PAPER_PROFILE,
    RademacherEstimate,
    epsilon_k,
    estimate_expected_log_shatter,
    localization_threshold,
    localized_subclass,
    rademacher_exact,
    rademacher_mc,
    random_shatter,
    u_bar,
    u_hat,
    u_pop,
)
from .concentration import (
    TailCheckReport,
    check_rademacher_concentration,
    check_relative_vc,
    check_shatter_concentration,
    check_symmetrization_and_massart,
    check_talagrand,
)
from .config import build_experiment, load_experiment, parse_pairs
from .data import (
    LabeledSample,
    NoisyRegionDistribution,
    bayes_risk,
    class_optimal_loss,
    class_optimal_region,
    generate_sample,
    max_class_loss,
    read_sample_csv,
    true_loss,
    write_sample_csv,
)
from .harness import (
    ExperimentAborted,
    ExperimentConfig,
    ExperimentReport,
    emit_report,
    run_lemma_check,
    run_oracle_experiment,
)
from .penalties import (
    KINDS,
    PenaltyBreakdown,
    PenaltyOptions,
    SelectModelError,
    SelectionResult,
    compute_penalty,
    penalty_global_rademacher,
    penalty_localized,
    penalty_simple,
    penalty_vapnik,
    select_model,
)

__version__ = "0.1.0"

__all__ = [
    "ConstantProfile",
    "EnumerationInfeasible",
    "ErmResult",
    "ErrorVectorSet",
    "ExperimentAborted",
    "ExperimentConfig",
    "ExperimentReport",
    "IntervalClassifier",
    "KINDS",
    "LabeledSample",
    "LocalizationResult",
    "ModelClass",
    "NoisyRegionDistribution",
    "PAPER_PROFILE",
    "PenaltyBreakdown",
    "PenaltyOptions",
    "RademacherEstimate",
    "SelectModelError",
    "SelectionResult",
    "TailCheckReport",
    "bayes_risk",
    "block_structure",
    "build_experiment",
    "check_rademacher_concentration",
    "check_relative_vc",
    "check_shatter_concentration",
    "check_symmetrization_and_massart",
    "check_talagrand",
    "class_optimal_loss",
    "class_optimal_region",
    "compute_penalty",
    "emit_report",
    "empirical_loss",
    "enumerate_error_vectors",
    "epsilon_k",
    "erm",
    "estimate_expected_log_shatter",
    "generate_sample",
    "interval_pattern_count",
    "load_experiment",
    "localization_threshold",
    "localized_subclass",
    "max_class_loss",
    "parse_class_token",
    "parse_hierarchy",
    "parse_pairs",
    "penalty_global_rademacher",
    "penalty_localized",
    "penalty_simple",
    "penalty_vapnik",
    "rademacher_exact",
    "rademacher_mc",
    "random_shatter",
    "read_sample_csv",
    "run_lemma_check",
    "run_oracle_experiment",
    "select_model",
    "true_loss",
    "u_bar",
    "u_hat",
    "u_pop",
    "write_sample_csv",
]
