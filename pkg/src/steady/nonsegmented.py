"""
Steady state of the non-segmented market.

The steady state reduces to one scalar unknown x = mu(h,n): once x is known,
every owner proportion follows from mu(li,o) = gamma_di m_i / (lambda_i x + gamma_i).
x is the unique zero of the strictly decreasing function F on [0, 1 - sum(m)].
"""

import logging

import numpy as np
from scipy.optimize import root_scalar

from src.markets.dynamics import rhs_nonsegmented
from src.markets.params import NonSegmentedParams
from src.markets.state import ModelClass, StateDistribution
from src.steady.results import (SolverError, SolverMethod, SteadySolution, ToleranceUnreachable,
                                check_residual, residual_limit)

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12


def F(x: float, params: NonSegmentedParams) -> float:
    """
    Scalar steady-state function of the non-segmented market.

    Args:
        x: Candidate mu(h,n), x >= 0
        params: Market parameters

    Returns:
        sum_i gamma_i gamma_di m_i / (lambda_i x + gamma_i) - sum_i gamma_di m_i
        + gamma_u (1 - sum m) - gamma x
    """
    gamma_i = params.gamma_i
    weighted = params.gamma_di * params.m
    return float(
        np.sum(gamma_i * weighted / (params.lam * x + gamma_i))
        - np.sum(weighted)
        + params.gamma_u * params.free_mass
        - params.gamma * x
    )


def F_prime(x: float, params: NonSegmentedParams) -> float:
    gamma_i = params.gamma_i
    weighted = params.gamma_di * params.m
    return float(
        -np.sum(gamma_i * weighted * params.lam / (params.lam * x + gamma_i) ** 2)
        - params.gamma
    )


def _rate_total(params: NonSegmentedParams) -> float:
    return float(np.sum(params.lam) + params.gamma_u + params.gamma_d
                 + np.sum(params.gamma_ui) + np.sum(params.gamma_di))


def steady_state_from_buyers(params: NonSegmentedParams, x: float) -> StateDistribution:
    """Back-substitute mu(h,n) = x into the full non-segmented state."""
    low = params.gamma_di * params.m / (params.lam * x + params.gamma_i)
    values = np.empty(2 * params.K + 2)
    values[0] = x
    values[1] = params.free_mass - x
    values[2::2] = params.m - low
    values[3::2] = low
    return StateDistribution(ModelClass.NON_SEGMENTED, values)


def _bisect(params: NonSegmentedParams, upper: float, tol: float):
    try:
        result = root_scalar(F, args=(params,), bracket=[0.0, upper], method='bisect', xtol=tol)
    except ValueError as e:
        raise SolverError(f"F does not change sign on [0, {upper:.6g}]: {e}") from e
    return result.root, result.iterations


def _newton(params: NonSegmentedParams, upper: float, tol: float):
    """Newton from the bracket midpoint; falls back to bisection when it leaves the bracket."""
    try:
        result = root_scalar(F, args=(params,), fprime=F_prime, x0=0.5 * upper,
                             method='newton', xtol=tol)
        if result.converged and 0.0 <= result.root <= upper:
            return result.root, result.iterations
    except (RuntimeError, ZeroDivisionError, OverflowError) as e:
        logger.debug(f"Newton failed ({e}), bisecting")
    logger.warning("Newton iterate left the bracket, falling back to bisection")
    return _bisect(params, upper, tol)


def solve_nonsegmented(params: NonSegmentedParams, tol: float = DEFAULT_TOL,
                       method: str = 'bisect') -> SteadySolution:
    """
    Compute the unique steady state of a non-segmented market.

    Args:
        params: Market parameters (lambda = 0 is accepted)
        tol: Bracket width at which bisection stops
        method: 'bisect' (default) or 'newton' (bisection-safeguarded)

    Returns:
        SteadySolution with method scalar-root

    Raises:
        ToleranceUnreachable: If tol is below the floating-point resolution of the bracket
        SolverError: If F does not change sign on the bracket
        NoConvergence: If the drift at the returned state exceeds the accepted residual
    """
    if tol <= 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")
    if method not in ('bisect', 'newton'):
        raise ValueError(f"Unknown scalar method: {method}")

    upper = params.free_mass
    if tol < 2.0 * np.spacing(upper):
        raise ToleranceUnreachable(
            f"Tolerance {tol:.3e} is below the resolution {2.0 * np.spacing(upper):.3e} "
            f"of the bracket [0, {upper:.6g}]"
        )

    if method == 'newton':
        x, iterations = _newton(params, upper, tol)
    else:
        x, iterations = _bisect(params, upper, tol)

    state = steady_state_from_buyers(params, x)
    residual = float(np.max(np.abs(rhs_nonsegmented(params, state))))
    limit = residual_limit(tol, _rate_total(params))
    check_residual(residual, limit, "Non-segmented steady state")
    logger.info(
        f"Non-segmented steady state: mu(h,n)={x:.12g}, residual={residual:.3e}, "
        f"{iterations} iterations ({method})"
    )

    return SteadySolution(
        state=state,
        residual_inf_norm=residual,
        method=SolverMethod.SCALAR_ROOT,
        tolerance=tol,
        iterations=iterations,
        metadata={'scalar_method': method, 'F_at_root': F(x, params), 'bracket': [0.0, upper],
                  'residual_limit': limit},
    )
