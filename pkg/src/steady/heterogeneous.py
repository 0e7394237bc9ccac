"""
Steady states of the heterogeneous-position market.

With (x, y, z, u, v, w) = ((h,0), (h,1), (h,2), (l,0), (l,1), (l,2)), the
steady state solves the reduced system returned by
`reduced_residual_heterogeneous`: three balance equations, the trade
balance y v = a x w and the two linear constraints. Every zero of the
reduced system is a zero of the Master Equation, since

    x' = -r1,  y' = r2 - lam r4,  z' = r3 + lam r4,
    u' = r1 + lam r4,  v' = -r2 - lam r4,  w' = -r3.

Eliminating u and z through the constraints leaves four unknowns
(x, y, v, w), which are searched by box subdivision and by a seeded
multi-start root iteration.

Zeros in which a whole liquidity type is empty (every investor high-type,
or every investor low-type) are absorbing no-switch configurations; they are
listed in the diagnostics but never returned as steady states.
"""

import logging
import math
from typing import List, Optional, Union

import numpy as np
from scipy.optimize import root

from src.markets.dynamics import rhs_heterogeneous
from src.markets.models import HeterogeneousModel
from src.markets.params import HeterogeneousParams
from src.markets.state import ModelClass, StateDistribution
from src.ode.integrator import IntegrationError, relax_to_steady
from src.steady.results import (ConditionPReport, NoSteadyState, SolverMethod, SteadySolution,
                                check_residual, residual_limit)
from src.subdivision.box import Box
from src.subdivision.engine import DEFAULT_GRID, SubdivisionError, check_faces, refine

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_RESTARTS = 32
DEFAULT_SEED = 20240101
FEASIBILITY_TOL = 1e-9
DEDUPE_TOL = 1e-8
TYPE_MASS_FLOOR = 1e-6
CONVENTIONS = ('printed', 'standard')

COUNTEREXAMPLE_RATES = {'a': 1.0, 'b': 0.0, 'c': (0.0, 0.0, 1.0), 'd': (1.0, 0.0, 0.0)}


def reduced_residual_heterogeneous(params: HeterogeneousParams, point) -> np.ndarray:
    """
    Evaluate the reduced steady-state system at a point.

    Args:
        params: Market parameters
        point: (x, y, z, u, v, w), shape (6,) or (m, 6)

    Returns:
        (lam(xv + xw) + c0 x - d0 u,
         lam(xv - yw) - c1 y + d1 v,
         lam(xw + yw) - c2 z + d2 w,
         yv - a xw,
         x + y + z + u + v + w - 1,
         y + v + 2(z + w) - s)
    """
    p = np.asarray(point, dtype=float)
    x, y, z, u, v, w = (p[..., k] for k in range(6))
    lam = params.lam
    c, d = params.c, params.d
    return np.stack([
        lam * (x * v + x * w) + c[0] * x - d[0] * u,
        lam * (x * v - y * w) - c[1] * y + d[1] * v,
        lam * (x * w + y * w) - c[2] * z + d[2] * w,
        y * v - params.a * x * w,
        x + y + z + u + v + w - 1.0,
        y + v + 2.0 * (z + w) - params.s,
    ], axis=-1)


def expand_free_coordinates(params: HeterogeneousParams, free) -> np.ndarray:
    """Map (x, y, v, w) to the full 6-vector using the two linear constraints."""
    q = np.asarray(free, dtype=float)
    x, y, v, w = (q[..., k] for k in range(4))
    z = 0.5 * (params.s - y - v - 2.0 * w)
    u = 1.0 - x - y - z - v - w
    return np.stack([x, y, z, u, v, w], axis=-1)


def _reduced_free_map(params: HeterogeneousParams, free) -> np.ndarray:
    full = expand_free_coordinates(params, free)
    r = reduced_residual_heterogeneous(params, full)
    # Order the rows so row k is driven by coordinate k of (x, y, v, w).
    return np.stack([r[..., 0], r[..., 3], r[..., 1], r[..., 2]], axis=-1)


def heterogeneous_reduced_map(params: HeterogeneousParams, free) -> np.ndarray:
    """
    Four-unknown steady-state map over (x, y, v, w) for the subdivision engine.

    Points where the eliminated u or z would be negative lie outside the
    domain and evaluate to NaN.
    """
    free = np.asarray(free, dtype=float)
    values = _reduced_free_map(params, free)
    full = expand_free_coordinates(params, free)
    outside = (full[..., 2] < -FEASIBILITY_TOL) | (full[..., 3] < -FEASIBILITY_TOL)
    return np.where(outside[..., np.newaxis], np.nan, values)


def counterexample_root(s: float) -> Optional[float]:
    """
    Nonnegative root of 4X^2 + 4sX + 2s - 3 = 0, or None when it is negative.

    Args:
        s: Supply, 0 <= s <= 2

    Returns:
        (-s + sqrt(s^2 - 2s + 3)) / 2 when >= 0, otherwise None
    """
    if not 0.0 <= s <= 2.0:
        raise ValueError(f"Supply must lie in [0, 2], got {s}")
    if s == 1.5:
        return 0.0
    x = 0.5 * (-s + math.sqrt(s * s - 2.0 * s + 3.0))
    return x if x >= 0.0 else None


def is_counterexample_family(params: HeterogeneousParams) -> bool:
    """True when the rates are the non-existence example up to a change of time."""
    rates = COUNTEREXAMPLE_RATES
    return bool(
        math.isclose(params.a, rates['a'], abs_tol=1e-12)
        and math.isclose(params.b, rates['b'], abs_tol=1e-12)
        and np.allclose(params.c / params.lam, rates['c'], rtol=0.0, atol=1e-12)
        and np.allclose(params.d / params.lam, rates['d'], rtol=0.0, atol=1e-12)
    )


def counterexample_state(s: float) -> Optional[np.ndarray]:
    """Closed-form zero of the counterexample family: x = y = X, v = w = X + s - 1, u = z = 2Xv."""
    X = counterexample_root(s)
    if X is None:
        return None
    v = X + s - 1.0
    if v < 0.0:
        return None
    u = 2.0 * X * v
    return np.array([X, X, u, u, v, v])


def existence_verdict(s: float) -> str:
    """
    Whether the counterexample family has a mixed-type steady state at supply s.

    In this family the trade balances force x = y and v = w at any zero with
    both types present, so the closed form is the only candidate.

    Returns:
        'yes' for 1/2 < s < 3/2, 'boundary' at s = 1/2 and s = 3/2 where the
        closed form collapses onto a single-type zero, 'no' otherwise
    """
    state = counterexample_state(s)
    if state is None:
        return 'no'
    return 'boundary' if _single_type(state) else 'yes'


def family_single_type_zeros(s: float) -> List[np.ndarray]:
    """Zeros of the counterexample family with an empty liquidity type."""
    zeros = []
    if s <= 1.0:
        zeros.append(np.array([1.0 - s, s, 0.0, 0.0, 0.0, 0.0]))
    if s >= 1.0:
        zeros.append(np.array([0.0, 0.0, 0.0, 0.0, 2.0 - s, s - 1.0]))
    return zeros


def _condition_expressions(params: HeterogeneousParams, corners: np.ndarray) -> List[np.ndarray]:
    x, y, z, u, v, w = (corners[:, k] for k in range(6))
    lam, c, d = params.lam, params.c, params.d
    return [
        lam * (v + w) + c[0] - u * d[0],
        v - x * w * params.a,
        lam * (x - y * w) - y * c[1] + d[1],
        lam * (x + y) - z * c[2] + d[2],
    ]


def check_condition_P(params: HeterogeneousParams, box: Optional[Box] = None,
                      convention: str = 'printed') -> ConditionPReport:
    """
    Evaluate the four existence inequalities in the worst case over a box.

    Each expression is affine in every variable separately, so the extremes
    over the box are attained at its corners. Conditions 1 and 2 are
    '>= 0'. Conditions 3 and 4 are '<= 0' under the 'printed' convention
    and '>= 0' under the 'standard' one.

    Args:
        params: Market parameters
        box: Box in (x, y, z, u, v, w) coordinates, default [0,1]^6
        convention: 'printed' or 'standard'

    Returns:
        ConditionPReport whose margins are >= 0 exactly when a condition holds
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"Unknown convention '{convention}' (expected one of {CONVENTIONS})")
    box = box or Box.unit(6)
    if box.dim != 6:
        raise ValueError(f"Condition (P) needs a 6-dimensional box, got {box.dim}")

    expressions = _condition_expressions(params, box.corners())
    nonnegative = [True, True, convention == 'standard', convention == 'standard']
    margins = []
    for values, lower_bound in zip(expressions, nonnegative):
        margins.append(float(np.min(values)) if lower_bound else -float(np.max(values)))

    per_condition = [m >= 0.0 for m in margins]
    return ConditionPReport(
        holds=all(per_condition),
        per_condition=per_condition,
        margins=margins,
        convention=convention,
    )


def _feasible_starts(params: HeterogeneousParams, count: int, seed: int) -> np.ndarray:
    """Random (x, y, v, w) whose expansion lies on the feasible simplex slice."""
    rng = np.random.Generator(np.random.PCG64(seed))
    s = params.s
    t = rng.uniform(max(0.0, s - 1.0), s / 2.0, size=count)
    holdings = np.stack([1.0 - s + t, s - 2.0 * t, t], axis=-1)
    high_share = rng.uniform(0.0, 1.0, size=(count, 3))
    high = holdings * high_share
    low = holdings - high
    return np.stack([high[:, 0], high[:, 1], low[:, 1], low[:, 2]], axis=-1)


def type_mass_floor(tol: float) -> float:
    """Smallest liquidity-type mass a zero accepted at tol may carry and still count as mixed."""
    return max(TYPE_MASS_FLOOR, math.sqrt(tol))


def _single_type(state: np.ndarray, floor: float = TYPE_MASS_FLOOR) -> bool:
    high = float(np.sum(state[:3]))
    return min(high, float(np.sum(state[3:]))) <= floor


def _accept(params: HeterogeneousParams, free, tol: float) -> Optional[np.ndarray]:
    """Full feasible state for a candidate zero, or None."""
    state = expand_free_coordinates(params, free)
    if not np.all(np.isfinite(state)) or np.any(state < -FEASIBILITY_TOL):
        return None
    state = np.where(state < 0.0, 0.0, state)
    if float(np.max(np.abs(reduced_residual_heterogeneous(params, state)))) > tol:
        return None
    return state


def _add_unique(zeros: List[np.ndarray], state: np.ndarray) -> None:
    if all(float(np.max(np.abs(state - other))) > DEDUPE_TOL for other in zeros):
        zeros.append(state)


def _family_without_steady_state(params: HeterogeneousParams, diagnostics: dict,
                                 restarts: int) -> NoSteadyState:
    """Conclusive answer for the counterexample family when the closed form is not mixed."""
    if diagnostics['counterexample_root'] is None:
        message = 'closed-form root is negative'
    elif diagnostics['existence_verdict'] == 'boundary':
        message = 'closed-form zero has an empty liquidity type'
    else:
        message = 'closed-form zero has negative low-type holdings'
    diagnostics['single_type_zeros'] = [z.tolist() for z in family_single_type_zeros(params.s)]
    diagnostics['message'] = message
    logger.warning(f"No heterogeneous steady state at s={params.s:g}: {message}")
    return NoSteadyState(diagnostics=diagnostics, restarts=restarts, conclusive=True)


def solve_heterogeneous(params: HeterogeneousParams, tol: float = DEFAULT_TOL,
                        restarts: int = DEFAULT_RESTARTS, seed: int = DEFAULT_SEED,
                        grid: int = DEFAULT_GRID, eps_volume: float = 1e-12
                        ) -> Union[SteadySolution, NoSteadyState]:
    """
    Search for a steady state of a heterogeneous-position market.

    The search combines the closed-form zero of the counterexample family,
    Poincare-Miranda refinement of the reduced map on [0,1]^4 when its faces
    certify, and a seeded multi-start root iteration. The closed-form zero is
    returned whenever the family has one; otherwise, of all feasible mixed-type
    zeros found, the one with the largest smallest component is returned.

    Args:
        params: Market parameters
        tol: Residual tolerance on the reduced system
        restarts: Number of random feasible starting points
        seed: Seed of the restart generator
        grid: Face sampling resolution
        eps_volume: Volume threshold for the subdivision

    Returns:
        SteadySolution, or NoSteadyState with diagnostics when nothing qualifies

    Raises:
        NoConvergence: If the drift at the selected zero exceeds the accepted residual
    """
    if tol <= 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")

    zeros: List[np.ndarray] = []
    sources = {}
    diagnostics = {'restarts': restarts, 'seed': seed}
    box_volume = None

    family = is_counterexample_family(params)
    diagnostics['counterexample_family'] = family
    if family:
        verdict = existence_verdict(params.s)
        diagnostics['counterexample_root'] = counterexample_root(params.s)
        diagnostics['existence_verdict'] = verdict
        if verdict != 'yes':
            return _family_without_steady_state(params, diagnostics, restarts)
        zeros.append(counterexample_state(params.s))
        sources[0] = SolverMethod.CLOSED_FORM
    floor = TYPE_MASS_FLOOR if family else type_mass_floor(tol)
    diagnostics['type_mass_floor'] = floor

    free_map = lambda points: heterogeneous_reduced_map(params, points)
    certificate = check_faces(free_map, Box.unit(4), grid)
    diagnostics['face_check_certified'] = certificate.certified
    if certificate.certified:
        try:
            refinement = refine(free_map, Box.unit(4), eps_volume, grid)
            polished = root(lambda q: _reduced_free_map(params, q), refinement.box.centroid,
                            method='hybr')
            state = _accept(params, polished.x, tol)
            if state is not None:
                before = len(zeros)
                _add_unique(zeros, state)
                if len(zeros) > before:
                    sources[len(zeros) - 1] = SolverMethod.POINCARE_MIRANDA
                    box_volume = refinement.box.volume
            diagnostics['refinement_steps'] = refinement.iterations
            diagnostics['uncertified_steps'] = refinement.uncertified_steps
        except SubdivisionError as e:
            logger.warning(f"Subdivision failed: {e}")

    seeds = list(_feasible_starts(params, restarts, seed))
    if not family:
        seeds.insert(0, _relaxation_seed(params))

    converged = 0
    infeasible = 0
    best_residual = math.inf
    for k, start in enumerate(seeds):
        result = root(lambda q: _reduced_free_map(params, q), start, method='hybr')
        residual = float(np.max(np.abs(_reduced_free_map(params, result.x))))
        best_residual = min(best_residual, residual)
        state = _accept(params, result.x, tol)
        if state is None:
            infeasible += int(residual <= tol)
            continue
        converged += 1
        before = len(zeros)
        _add_unique(zeros, state)
        if len(zeros) > before:
            sources[len(zeros) - 1] = SolverMethod.FIXED_POINT
        logger.debug(f"Restart {k}: zero {state.round(12).tolist()}")

    diagnostics.update({'converged_restarts': converged, 'infeasible_zeros': infeasible,
                        'best_restart_residual': best_residual})

    mixed = [(k, z) for k, z in enumerate(zeros) if not _single_type(z, floor)]
    diagnostics['single_type_zeros'] = [z.tolist() for z in zeros if _single_type(z, floor)]

    if not mixed:
        diagnostics['message'] = 'no mixed-type zero found'
        logger.warning(f"No heterogeneous steady state at s={params.s:g}: {diagnostics['message']}")
        return NoSteadyState(diagnostics=diagnostics, restarts=restarts, conclusive=False)

    mixed.sort(key=lambda item: (sources.get(item[0]) is not SolverMethod.CLOSED_FORM,
                                 -float(np.min(item[1]))))
    index, best = mixed[0]
    state = StateDistribution(ModelClass.HETEROGENEOUS, best)
    residual = float(np.max(np.abs(rhs_heterogeneous(params, state))))
    limit = residual_limit(tol, params.lam)
    check_residual(residual, limit, f"Heterogeneous steady state at s={params.s:g}")
    method = sources.get(index, SolverMethod.FIXED_POINT)
    logger.info(f"Heterogeneous steady state ({method.value}) at s={params.s:g}: "
                f"residual {residual:.3e}, {len(mixed)} mixed-type zeros")

    return SteadySolution(
        state=state,
        residual_inf_norm=residual,
        method=method,
        tolerance=tol,
        certified_box_volume=box_volume if method is SolverMethod.POINCARE_MIRANDA else None,
        iterations=len(seeds),
        metadata={
            'search': 'multi-start root iteration' if method is SolverMethod.FIXED_POINT else method.value,
            'reduced_residual': float(np.max(np.abs(reduced_residual_heterogeneous(params, best)))),
            'alternate_zeros': [z.tolist() for k, z in mixed[1:]],
            'residual_limit': limit,
            **diagnostics,
        },
    )


def _relaxation_seed(params: HeterogeneousParams) -> np.ndarray:
    """Short ODE relaxation from an evenly split state, as one more starting point."""
    model = HeterogeneousModel()
    start = model.default_initial_state(params)
    try:
        report = relax_to_steady(model.drift_function(params), start, tol=1e-8,
                                 t_max=200.0, step=1e-2)
        values = report.final_state.values
    except IntegrationError:
        values = start.values
    return values[[0, 1, 4, 5]]
