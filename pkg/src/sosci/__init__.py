"""Confidence intervals with simultaneous coverage over data-selected
parameters: the k-largest-of-m delta family, bivariate larger-of-two and
abs-max constructions, classical baselines, and a seeded Monte-Carlo
coverage engine."""

from .baselines import (
    MethodLabel,
    bonferroni_halfwidth,
    fcr_selection_aware_interval,
    fcr_selection_aware_offsets,
    fcw_constants,
    method_length,
    method_offsets,
    method_tail_levels,
    sidak_halfwidth,
)
from .bivariate import (
    CPlusCurve,
    QuadratureError,
    abs_max_interval,
    b_region_probability,
    c_plus,
    cplus_curve,
    larger_of_two_interval,
)
from .dist import (
    NORMAL,
    CovarianceModel,
    NotPositiveDefiniteError,
    ShiftFamily,
    cholesky,
    normal_family,
    sample_mvn,
    sample_mvt,
    seeded_rng,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
    student_t_cdf,
    student_t_family,
    student_t_quantile,
)
from .mc import (
    CoverageReport,
    Scenario,
    build_covariance,
    estimate_b_probability,
    load_scenario,
    resolve_theta,
    run_coverage,
    scenario_from_dict,
)
from .select import SelectionResult, select_abs_max, select_top_k
from .sos import (
    ConfidenceInterval,
    IntervalSpec,
    OptimizationError,
    interval_length,
    k_of_m_intervals,
    optimize_delta,
    spec_from_delta,
    symmetric_delta,
)

__version__ = "0.1.0"

# keep a flat, explicit public surface
__all__ = [
    "__version__",
    # dist
    "NORMAL", "ShiftFamily", "CovarianceModel", "NotPositiveDefiniteError",
    "normal_family", "student_t_family", "std_normal_cdf", "std_normal_pdf",
    "std_normal_quantile", "student_t_cdf", "student_t_quantile",
    "cholesky", "sample_mvn", "sample_mvt", "seeded_rng",
    # select
    "SelectionResult", "select_top_k", "select_abs_max",
    # sos
    "ConfidenceInterval", "IntervalSpec", "OptimizationError",
    "spec_from_delta", "symmetric_delta", "interval_length",
    "optimize_delta", "k_of_m_intervals",
    # bivariate
    "QuadratureError", "CPlusCurve", "larger_of_two_interval",
    "b_region_probability", "c_plus", "cplus_curve", "abs_max_interval",
    # baselines
    "MethodLabel", "bonferroni_halfwidth", "sidak_halfwidth", "fcw_constants",
    "fcr_selection_aware_offsets", "fcr_selection_aware_interval",
    "method_tail_levels", "method_offsets", "method_length",
    # mc
    "Scenario", "CoverageReport", "build_covariance", "resolve_theta",
    "run_coverage", "estimate_b_probability", "scenario_from_dict",
    "load_scenario",
]
