"""Multivariate normal and Student-t CDFs by perturbation about a one-factor correlation matrix."""

__version__ = "0.1.0"

from .corr_matrix import (
    ConvergenceMetrics,
    CorrelationMatrix,
    build_correlation_matrix,
    convergence_metrics,
    distance_from_singular,
    equicorrelated,
    heuristic_estimates,
    internal_variance,
    regularize,
)
from .gauss_engine import (
    ExpandOptions,
    ExpansionResult,
    correlation_sensitivity,
    expand,
    order0,
    order1,
    order2,
    prepare,
)
from .one_factor import OneFactorModel, fit_constant_factor, fit_one_factor, fit_pc_k_factor
from .pade import extrapolate_infinity, pade_sequence
from .quadrature import QuadratureConfig, YQuadrature
from .student_t import StudentTRequest, gaussian_limit_check, student_t_expand

__all__ = [
    "ConvergenceMetrics",
    "CorrelationMatrix",
    "ExpandOptions",
    "ExpansionResult",
    "OneFactorModel",
    "QuadratureConfig",
    "StudentTRequest",
    "YQuadrature",
    "build_correlation_matrix",
    "convergence_metrics",
    "correlation_sensitivity",
    "distance_from_singular",
    "equicorrelated",
    "expand",
    "extrapolate_infinity",
    "fit_constant_factor",
    "fit_one_factor",
    "fit_pc_k_factor",
    "gaussian_limit_check",
    "heuristic_estimates",
    "internal_variance",
    "order0",
    "order1",
    "order2",
    "pade_sequence",
    "prepare",
    "regularize",
    "student_t_expand",
]
