"""
Steady state of the partially segmented market.

The unknowns are the buyer proportions x_i = mu(hi,n). They solve f(x) = 0
for the map f of `fixed_point_map`, whose faces on [0,1]^K satisfy the
Poincare-Miranda sign conditions. The solver runs a damped Gauss-Seidel
sweep over the closed-form single-coordinate update and falls back to box
subdivision followed by a Newton-type polish when the sweep stalls.
"""

import logging
from typing import Optional

import numpy as np
from scipy.optimize import root

from src.markets.dynamics import rhs_partially_segmented
from src.markets.params import PartiallySegmentedParams
from src.markets.state import ModelClass, StateDistribution
from src.steady.results import NoConvergence, SolverMethod, SteadySolution, check_residual, residual_limit
from src.subdivision.box import Box
from src.subdivision.engine import DEFAULT_GRID, SubdivisionError, refine

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
DEFAULT_DAMPING = 0.5
MAX_SWEEPS = 100000
STALL_CHANGE = 1e-15
STALL_SWEEPS = 50
FALLBACK_WIDTH = 1e-3


def _coefficients(params: PartiallySegmentedParams):
    beta = params.gamma_di * params.m / params.gamma_tilde_i
    rho = params.gamma_tilde_ui / params.gamma_tilde_i
    return beta, rho


def fixed_point_map(params: PartiallySegmentedParams, x) -> np.ndarray:
    """
    Evaluate the K-dimensional steady-state map of the partially segmented market.

    f_i(x) = x_i + (gt_ui/gt_i) sum_{j!=i} x_j - gamma_i gamma_di m_i / (gt_i (lambda_i x_i + gamma_i))
             + (gamma_di/gt_i) m_i - (gt_ui/gt_i)(1 - sum m)

    The free non-owner mass 1 - sum m - sum_{j!=i} x_j is floored at zero, so
    the map is unchanged wherever the buyers fit in the market and keeps its
    face signs on all of [0,1]^K.

    Args:
        params: Market parameters
        x: Buyer proportions, shape (K,) or (m, K)

    Returns:
        Array of the same shape as x
    """
    x = np.asarray(x, dtype=float)
    beta, rho = _coefficients(params)
    others = np.sum(x, axis=-1, keepdims=True) - x
    free = np.maximum(0.0, params.free_mass - others)
    lam_x = params.lam * x
    return x + beta * lam_x / (lam_x + params.gamma_i) - rho * free


def fixed_point_update(params: PartiallySegmentedParams, x, i: int) -> float:
    """
    Solve f_i = 0 for x_i with the other coordinates held fixed.

    x_i solves lambda x^2 + (gamma_i + beta lambda - c lambda) x - c gamma_i = 0,
    which has exactly one nonnegative root; c is the floored free mass
    scaled by gt_ui/gt_i and beta = gamma_di m_i / gt_i.
    """
    x = np.asarray(x, dtype=float)
    beta, rho = _coefficients(params)
    lam, gamma = float(params.lam[i]), float(params.gamma_i[i])
    c = float(rho[i]) * max(0.0, params.free_mass - (float(np.sum(x)) - float(x[i])))
    if c == 0.0:
        return 0.0
    B = gamma + (float(beta[i]) - c) * lam
    disc = np.sqrt(B * B + 4.0 * lam * c * gamma)
    if B > 0.0:
        return 2.0 * c * gamma / (B + disc)
    return (disc - B) / (2.0 * lam)


def gauss_seidel(params: PartiallySegmentedParams, x0=None, tol: float = DEFAULT_TOL,
                 damping: float = DEFAULT_DAMPING, max_sweeps: int = MAX_SWEEPS):
    """
    Damped Gauss-Seidel iteration on the explicit update.

    Args:
        params: Market parameters
        x0: Starting point in [0,1]^K (defaults to zeros)
        tol: Stop when the infinity norm of fixed_point_map drops to tol
        damping: Weight of the new value in each coordinate update
        max_sweeps: Sweep budget

    Returns:
        (x, residual, sweeps, converged); converged is False on a stall or
        when the budget runs out
    """
    x = np.zeros(params.K) if x0 is None else np.array(x0, dtype=float)
    residual = float(np.max(np.abs(fixed_point_map(params, x))))
    stalled_for = 0
    sweeps = 0
    while residual > tol and sweeps < max_sweeps:
        previous = x.copy()
        for i in range(params.K):
            x[i] = (1.0 - damping) * x[i] + damping * fixed_point_update(params, x, i)
        sweeps += 1
        residual = float(np.max(np.abs(fixed_point_map(params, x))))

        change = float(np.max(np.abs(x - previous))) / max(float(np.max(np.abs(x))), 1e-300)
        stalled_for = stalled_for + 1 if change < STALL_CHANGE else 0
        if stalled_for >= STALL_SWEEPS and residual > tol:
            logger.warning(f"Gauss-Seidel stalled after {sweeps} sweeps at residual {residual:.3e}")
            return x, residual, sweeps, False

    converged = residual <= tol
    logger.debug(f"Gauss-Seidel: {sweeps} sweeps, residual {residual:.3e}")
    return x, residual, sweeps, converged


def _rate_total(params: PartiallySegmentedParams) -> float:
    return float(sum(np.sum(rates) for rates in (params.lam, params.gamma_ui, params.gamma_di,
                                                  params.gamma_tilde_ui, params.gamma_tilde_di)))


def steady_state_from_buyers(params: PartiallySegmentedParams, x) -> StateDistribution:
    """Back-substitute the buyer proportions into the full state."""
    x = np.asarray(x, dtype=float)
    K = params.K
    low = params.gamma_di * params.m / (params.lam * x + params.gamma_i)
    values = np.empty(3 * K + 1)
    values[:K] = x
    values[K] = params.free_mass - float(np.sum(x))
    values[K + 1::2] = params.m - low
    values[K + 2::2] = low
    return StateDistribution(ModelClass.PARTIALLY_SEGMENTED, values)


def _subdivision_fallback(params: PartiallySegmentedParams, grid: int, eps_volume: Optional[float]):
    """Localize the zero by subdivision, then polish inside the final box."""
    K = params.K
    result = refine(lambda points: fixed_point_map(params, points), Box.unit(K),
                    eps_volume=eps_volume or FALLBACK_WIDTH ** K,
                    grid_points_per_axis=grid)
    polished = root(lambda x: fixed_point_map(params, x), result.box.centroid, method='hybr',
                    options={'xtol': 1e-15})
    x = polished.x
    residual = float(np.max(np.abs(fixed_point_map(params, x))))
    return x, residual, result


def solve_partially_segmented(params: PartiallySegmentedParams, tol: float = DEFAULT_TOL,
                              x0=None, damping: float = DEFAULT_DAMPING,
                              grid: int = DEFAULT_GRID,
                              eps_volume: Optional[float] = None) -> SteadySolution:
    """
    Compute the unique steady state of a partially segmented market.

    Args:
        params: Market parameters
        tol: Residual tolerance on the fixed-point map
        x0: Optional Gauss-Seidel starting point
        damping: Gauss-Seidel damping factor
        grid: Face sampling resolution for the subdivision fallback
        eps_volume: Volume at which the fallback subdivision stops (default 1e-3 per side)

    Returns:
        SteadySolution (method fixed-point, or poincare-miranda after a fallback)

    Raises:
        NoConvergence: If neither iteration nor subdivision reaches tol, or the drift at the
            result exceeds the accepted residual
    """
    if tol <= 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")

    x, residual, sweeps, converged = gauss_seidel(params, x0, tol=tol, damping=damping)
    method = SolverMethod.FIXED_POINT
    box_volume: Optional[float] = None
    metadata = {'sweeps': sweeps, 'damping': damping}

    if not converged:
        logger.warning(f"Gauss-Seidel did not reach {tol:.1e} (residual {residual:.3e}), subdividing")
        try:
            x, residual, refinement = _subdivision_fallback(params, grid, eps_volume)
        except SubdivisionError as e:
            raise NoConvergence(f"Subdivision fallback failed: {e}") from e
        if residual > tol:
            raise NoConvergence(
                f"No zero of the fixed-point map within {tol:.1e} (best residual {residual:.3e})"
            )
        method = SolverMethod.POINCARE_MIRANDA
        box_volume = refinement.box.volume
        metadata.update({'refinement_steps': refinement.iterations,
                         'uncertified_steps': refinement.uncertified_steps,
                         'box': refinement.box.to_dict()})

    state = steady_state_from_buyers(params, x)
    rhs_residual = float(np.max(np.abs(rhs_partially_segmented(params, state))))
    metadata['map_residual'] = residual
    metadata['residual_limit'] = residual_limit(tol, _rate_total(params))
    check_residual(rhs_residual, metadata['residual_limit'], "Partially segmented steady state")
    logger.info(
        f"Partially segmented steady state ({method.value}): residual {rhs_residual:.3e} "
        f"after {sweeps} sweeps"
    )
    return SteadySolution(
        state=state,
        residual_inf_norm=rhs_residual,
        method=method,
        tolerance=tol,
        certified_box_volume=box_volume,
        iterations=sweeps,
        metadata=metadata,
    )
