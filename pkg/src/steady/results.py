"""
Result records and exceptions shared by the steady-state solvers.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from src.markets.state import StateDistribution


class SolverError(Exception):
    """Base exception for steady-state solver failures."""
    pass


class ToleranceUnreachable(SolverError):
    """The requested tolerance is below the floating-point resolution of the bracket."""
    pass


class NoConvergence(SolverError):
    """Neither iteration nor subdivision reached the tolerance within budget."""
    pass


class SolverMethod(str, Enum):
    SCALAR_ROOT = 'scalar-root'
    FIXED_POINT = 'fixed-point'
    POINCARE_MIRANDA = 'poincare-miranda'
    CLOSED_FORM = 'closed-form'


@dataclass(frozen=True, eq=False)
class SteadySolution:
    """A steady state together with how it was found and how well it solves the system.

    `residual_inf_norm` is the infinity norm of the market's rhs at `state`.
    `certified_box_volume` is set only when a Poincare-Miranda box backs
    the result.
    """

    state: StateDistribution
    residual_inf_norm: float
    method: SolverMethod
    tolerance: float
    certified_box_volume: Optional[float] = None
    iterations: int = 0
    metadata: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ConditionPReport:
    """Worst-case evaluation of the four existence inequalities over a box."""

    holds: bool
    per_condition: List[bool]
    margins: List[float]
    convention: str = 'printed'


@dataclass(frozen=True, eq=False)
class NoSteadyState:
    """No feasible zero was found for a heterogeneous market.

    `conclusive` is True only when a closed-form argument rules out every
    zero with both liquidity types present; otherwise the report means "no
    mixed-type zero found" by the search that was run. Single-type zeros may
    exist either way and are listed in the diagnostics.
    """

    diagnostics: Dict[str, Any]
    restarts: int
    conclusive: bool = False


RESIDUAL_SLACK = 10.0


def residual_limit(tol: float, rate_total: float) -> float:
    """Largest rhs residual accepted for a zero located to within tol.

    The rhs is Lipschitz with a constant of the order of the summed rates,
    plus a few ulps of rounding per term.
    """
    scale = 1.0 + rate_total
    return RESIDUAL_SLACK * scale * tol + 64.0 * float(np.finfo(float).eps) * scale


def check_residual(residual: float, limit: float, label: str) -> None:
    """Raise NoConvergence unless residual <= limit (NaN fails)."""
    if not residual <= limit:
        raise NoConvergence(f"{label} residual {residual:.3e} exceeds the accepted {limit:.3e}")
