"""
Steady-state solvers for the three market classes.
"""

from .results import (ConditionPReport, NoConvergence, NoSteadyState, SolverError, SolverMethod,
                      SteadySolution, ToleranceUnreachable, check_residual, residual_limit)
from .nonsegmented import F, solve_nonsegmented
from .partially_segmented import fixed_point_map, fixed_point_update, gauss_seidel, solve_partially_segmented
from .heterogeneous import (check_condition_P, counterexample_root, existence_verdict,
                            heterogeneous_reduced_map, is_counterexample_family,
                            reduced_residual_heterogeneous, solve_heterogeneous)
from .dispatch import solve_steady

__all__ = [
    'SteadySolution',
    'ConditionPReport',
    'NoSteadyState',
    'SolverMethod',
    'SolverError',
    'ToleranceUnreachable',
    'NoConvergence',
    'residual_limit',
    'check_residual',
    'F',
    'solve_nonsegmented',
    'fixed_point_map',
    'fixed_point_update',
    'gauss_seidel',
    'solve_partially_segmented',
    'reduced_residual_heterogeneous',
    'heterogeneous_reduced_map',
    'check_condition_P',
    'counterexample_root',
    'existence_verdict',
    'is_counterexample_family',
    'solve_heterogeneous',
    'solve_steady',
]
