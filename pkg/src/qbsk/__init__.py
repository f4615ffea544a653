"""Stancu-type q-Bernstein-Schurer-Kantorovich operators.

Brute-force operator evaluation via Riemann-type q-integrals, closed-form
moments checked against it, grid moduli of continuity, error-bound checks,
A-statistical convergence, the tensor-product bivariate operator and a
command-line harness (``qbsk``).
"""

from .bivariate import (BivariateParams, BivGridPolicy, biv_apply, biv_bound_check, biv_moment,
                        partial_modulus, total_modulus)
from .estimators import (BivariateStancuKantorovichApproximator, QBernsteinFeatures,
                         StancuKantorovichApproximator)
from .funcspec import FunctionSpecError, parse_function_spec
from .functions import BivariateFunction, DomainError, ScalarFunction, monomial
from .moduli import (BoundReport, GridPolicy, UnboundedCalibrationError, bound_check, calibrate_C,
                     lip_class_constant, lipschitz_maximal, omega, omega2)
from .operators import (MomentReport, OperatorParams, ParameterRangeWarning, apply, basis,
                        basis_matrix, central_moment, moment, moment_report, sup_norm_check)
from .qcore import (QIntegralConvergenceError, TruncationPolicy, jackson_integral, q_binomial,
                    q_factorial, q_integer, q_pochhammer_plus, riemann_q_integral)
from .summability import (QSequence, SummabilityMatrix, a_transform, cesaro, cesaro_row,
                          exceedance_weight, make_q_sequence, stat_convergence_report)

__all__ = ["BivariateParams", "BivGridPolicy", "biv_apply", "biv_bound_check", "biv_moment",
    "partial_modulus", "total_modulus", "BivariateStancuKantorovichApproximator", "QBernsteinFeatures",
    "StancuKantorovichApproximator", "FunctionSpecError", "parse_function_spec", "BivariateFunction",
    "DomainError", "ScalarFunction", "monomial", "BoundReport", "GridPolicy",
    "UnboundedCalibrationError", "bound_check", "calibrate_C", "lip_class_constant",
    "lipschitz_maximal", "omega", "omega2", "MomentReport", "OperatorParams", "ParameterRangeWarning",
    "apply", "basis", "basis_matrix", "central_moment", "moment", "moment_report", "sup_norm_check",
    "QIntegralConvergenceError", "TruncationPolicy", "jackson_integral", "q_binomial", "q_factorial",
    "q_integer", "q_pochhammer_plus", "riemann_q_integral", "QSequence", "SummabilityMatrix",
    "a_transform", "cesaro", "cesaro_row", "exceedance_weight", "make_q_sequence",
    "stat_convergence_report"]

__version__ = "0.1.0"
