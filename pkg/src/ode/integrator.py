"""
Classical fourth-order Runge-Kutta integration of the Master Equations.

`rhs` arguments are callables mapping a raw state vector to its time
derivative, e.g. `functools.partial(rhs_nonsegmented, params)` or
`get_model(name).drift_function(params)`.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from src.markets.params import MarketParams
from src.markets.state import InvalidState, StateDistribution, model_class_of, validate_state

logger = logging.getLogger(__name__)

BOUND_TOLERANCE = 1e-9
INITIAL_TOLERANCE = 1e-9
DEFAULT_STEP = 1e-3
DEFAULT_TOL = 1e-10
DEFAULT_T_MAX = 1e4

Rhs = Callable[[np.ndarray], np.ndarray]


class IntegrationError(Exception):
    """Base exception for integration failures."""
    pass


class StepTooLarge(IntegrationError):
    """A sampled state left [0,1] by more than the bound tolerance."""
    pass


class InvalidInitialState(IntegrationError):
    """The starting distribution is not a valid state."""
    pass


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution of a Master Equation.

    `values` holds one row per entry of `times`.
    """

    model_class: object
    times: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return self.times.size

    @property
    def states(self) -> List[StateDistribution]:
        return [StateDistribution(self.model_class, row) for row in self.values]

    @property
    def final_state(self) -> StateDistribution:
        return StateDistribution(self.model_class, self.values[-1])


@dataclass(frozen=True, eq=False)
class RelaxationReport:
    final_state: StateDistribution
    residual_inf_norm: float
    elapsed_model_time: float
    converged: bool
    steps: int = 0


def rk4_step(rhs: Rhs, y: np.ndarray, h: float, k1: Optional[np.ndarray] = None) -> np.ndarray:
    """One classical Runge-Kutta step; k1 may be passed in when already known."""
    if k1 is None:
        k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _model_class(state0, params):
    if isinstance(state0, StateDistribution):
        return state0.model_class
    if params is not None:
        return model_class_of(params)
    raise InvalidInitialState("A raw initial vector needs params to name its market class")


def _check_initial(state0, params: Optional[MarketParams]) -> np.ndarray:
    if params is not None:
        try:
            validate_state(params, state0, tol=INITIAL_TOLERANCE)
        except InvalidState as e:
            raise InvalidInitialState(str(e)) from e
    values = np.array(getattr(state0, 'values', state0), dtype=float)
    if values.ndim != 1 or values.size == 0 or not np.all(np.isfinite(values)):
        raise InvalidInitialState(f"Initial state must be a finite vector, got {values!r}")
    if np.any(values < -INITIAL_TOLERANCE) or np.any(values > 1.0 + INITIAL_TOLERANCE):
        raise InvalidInitialState(f"Initial state components must lie in [0,1], got {values.tolist()}")
    if abs(float(np.sum(values)) - 1.0) > INITIAL_TOLERANCE:
        raise InvalidInitialState(f"Initial state sums to {np.sum(values):.17g}, expected 1")
    return values


def _sample(values: np.ndarray, t: float) -> np.ndarray:
    """Clamp rounding-level negatives to zero, reject anything further out."""
    if not np.all(np.isfinite(values)):
        raise StepTooLarge(f"Non-finite state at t={t:.6g}; reduce the step")
    if np.any(values < -BOUND_TOLERANCE) or np.any(values > 1.0 + BOUND_TOLERANCE):
        raise StepTooLarge(
            f"State left [0,1] at t={t:.6g} (min {values.min():.3e}, max {values.max():.3e}); "
            f"reduce the step"
        )
    return np.where(values < 0.0, 0.0, values)


def sample_times(t_end: float, sample_every: float) -> np.ndarray:
    """Sampling grid 0, sample_every, 2*sample_every, ... closed by t_end."""
    count = int(math.floor(t_end / sample_every + 1e-9))
    times = [k * sample_every for k in range(count + 1)]
    if count and t_end - times[-1] <= 1e-12 * max(1.0, t_end):
        times[-1] = t_end
    elif t_end > times[-1]:
        times.append(t_end)
    return np.array(times, dtype=float)


def integrate(rhs: Rhs, state0: StateDistribution, t_end: float, step: float = DEFAULT_STEP,
              sample_every: Optional[float] = None,
              params: Optional[MarketParams] = None) -> Trajectory:
    """
    Integrate a Master Equation with a fixed-step fourth-order scheme.

    Each sampling interval is split into equal sub-steps no longer than
    `step`, so the last sample lands on t_end exactly. The integrator state
    is never clamped; samples have components in (-1e-9, 0) set to 0.

    Args:
        rhs: Derivative of a raw state vector
        state0: Starting distribution
        t_end: Final time (>= 0)
        step: Maximum step length (> 0)
        sample_every: Sampling interval; defaults to t_end (two samples)
        params: When given, state0 is checked against the market constraints

    Returns:
        Trajectory sampled on 0, sample_every, ..., t_end

    Raises:
        InvalidInitialState: If state0 is not a valid distribution
        StepTooLarge: If a sample leaves [0,1] by more than 1e-9
        ValueError: On a non-positive step or sampling interval, or t_end < 0
    """
    if step <= 0:
        raise ValueError(f"Step must be positive, got {step}")
    if t_end < 0:
        raise ValueError(f"t_end must be >= 0, got {t_end}")
    if sample_every is None:
        sample_every = t_end if t_end > 0 else 1.0
    if sample_every <= 0:
        raise ValueError(f"Sampling interval must be positive, got {sample_every}")

    model_class = _model_class(state0, params)
    y = _check_initial(state0, params)

    times = sample_times(t_end, sample_every) if t_end > 0 else np.array([0.0])
    samples = np.empty((times.size, y.size))
    samples[0] = _sample(y, 0.0)

    total_steps = 0
    for k in range(1, times.size):
        interval = times[k] - times[k - 1]
        n = max(1, int(math.ceil(interval / step - 1e-9)))
        h = interval / n
        for _ in range(n):
            y = rk4_step(rhs, y, h)
        total_steps += n
        samples[k] = _sample(y, times[k])

    logger.debug(f"Integrated to t={t_end:g} in {total_steps} steps ({times.size} samples)")
    return Trajectory(model_class=model_class, times=times, values=samples)


def relax_to_steady(rhs: Rhs, state0: StateDistribution, tol: float = DEFAULT_TOL,
                    t_max: float = DEFAULT_T_MAX, step: float = DEFAULT_STEP,
                    params: Optional[MarketParams] = None) -> RelaxationReport:
    """
    Integrate until the drift vanishes or the time budget runs out.

    The residual is the infinity norm of rhs at the current state; it is the
    first stage of every Runge-Kutta step, so checking it costs nothing.

    Args:
        rhs: Derivative of a raw state vector
        state0: Starting distribution
        tol: Residual threshold (> 0)
        t_max: Model-time budget
        step: Fixed step length
        params: When given, state0 is checked against the market constraints

    Returns:
        RelaxationReport; converged is False when t_max is reached first

    Raises:
        InvalidInitialState: If state0 is not a valid distribution
        StepTooLarge: If the state leaves [0,1] by more than 1e-9
    """
    if tol <= 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")
    if step <= 0:
        raise ValueError(f"Step must be positive, got {step}")

    model_class = _model_class(state0, params)
    y = _check_initial(state0, params)
    max_steps = int(math.ceil(t_max / step - 1e-9)) if t_max > 0 else 0

    steps = 0
    k1 = rhs(y)
    residual = float(np.max(np.abs(k1)))
    while residual > tol and steps < max_steps:
        y = rk4_step(rhs, y, step, k1)
        steps += 1
        if steps % 1000 == 0:
            _sample(y, steps * step)
        k1 = rhs(y)
        residual = float(np.max(np.abs(k1)))

    final = _sample(y, steps * step)
    elapsed = steps * step
    converged = residual <= tol
    if converged:
        logger.info(f"Relaxed to residual {residual:.3e} at t={elapsed:g}")
    else:
        logger.warning(f"No relaxation within t_max={t_max:g}: residual {residual:.3e}")

    return RelaxationReport(
        final_state=StateDistribution(model_class, final),
        residual_inf_norm=residual,
        elapsed_model_time=elapsed,
        converged=converged,
        steps=steps,
    )
