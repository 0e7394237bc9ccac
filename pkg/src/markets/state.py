"""
State spaces, state distributions and constraint bookkeeping.

Vector layouts are frozen per market class:

* non-segmented: (h,n), (l,n), (h1,o), (l1,o), ..., (hK,o), (lK,o)
* partially segmented: (h1,n), ..., (hK,n), (l,n), (h1,o), (l1,o), ..., (hK,o), (lK,o)
* heterogeneous: (h,0), (h,1), (h,2), (l,0), (l,1), (l,2), i.e. x, y, z, u, v, w

With K=1 the first two layouts coincide entry by entry.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence

import numpy as np

from src.markets.params import (HeterogeneousParams, MarketParams, NonSegmentedParams,
                                PartiallySegmentedParams)

logger = logging.getLogger(__name__)

STATE_TOLERANCE = 1e-12

HETEROGENEOUS_LABELS = ['h,0', 'h,1', 'h,2', 'l,0', 'l,1', 'l,2']
HETEROGENEOUS_COLUMNS = ['x', 'y', 'z', 'u', 'v', 'w']


class DimensionMismatch(ValueError):
    """Exception raised when a state vector does not fit the market layout."""
    pass


class InvalidState(ValueError):
    """Exception raised when a state distribution violates its constraints."""
    pass


class ModelClass(str, Enum):
    NON_SEGMENTED = 'non-segmented'
    PARTIALLY_SEGMENTED = 'partially-segmented'
    HETEROGENEOUS = 'heterogeneous'

    @classmethod
    def parse(cls, value) -> 'ModelClass':
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            choices = ', '.join(member.value for member in cls)
            raise ValueError(f"Unknown model class '{value}' (expected one of: {choices})")


def model_class_of(params: MarketParams) -> ModelClass:
    if isinstance(params, NonSegmentedParams):
        return ModelClass.NON_SEGMENTED
    if isinstance(params, PartiallySegmentedParams):
        return ModelClass.PARTIALLY_SEGMENTED
    if isinstance(params, HeterogeneousParams):
        return ModelClass.HETEROGENEOUS
    raise TypeError(f"Unknown parameter record: {type(params).__name__}")


def state_labels(params: MarketParams) -> List[str]:
    """Return the ordered state labels of a market's state space E."""
    model_class = model_class_of(params)
    if model_class is ModelClass.HETEROGENEOUS:
        return list(HETEROGENEOUS_LABELS)

    owners = []
    for i in range(1, params.K + 1):
        owners.extend([f'h{i},o', f'l{i},o'])
    if model_class is ModelClass.NON_SEGMENTED:
        return ['h,n', 'l,n'] + owners
    buyers = [f'h{i},n' for i in range(1, params.K + 1)]
    return buyers + ['l,n'] + owners


def column_names(params: MarketParams) -> List[str]:
    """Header names used in result tables (mu_h_n, mu_h1_o, ... or x..w)."""
    if model_class_of(params) is ModelClass.HETEROGENEOUS:
        return list(HETEROGENEOUS_COLUMNS)
    return ['mu_' + label.replace(',', '_') for label in state_labels(params)]


def state_dimension(params: MarketParams) -> int:
    model_class = model_class_of(params)
    if model_class is ModelClass.HETEROGENEOUS:
        return 6
    if model_class is ModelClass.NON_SEGMENTED:
        return 2 * params.K + 2
    return 3 * params.K + 1


def owner_slices(params: MarketParams):
    """Index arrays of (h_i,o) and (l_i,o) entries for the two binary classes."""
    model_class = model_class_of(params)
    offset = 2 if model_class is ModelClass.NON_SEGMENTED else params.K + 1
    high = offset + 2 * np.arange(params.K)
    return high, high + 1


@dataclass(frozen=True, eq=False)
class StateDistribution:
    """Proportions of investors over a market's state space E."""

    model_class: ModelClass
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'model_class', ModelClass.parse(self.model_class))
        values = np.asarray(self.values, dtype=float).copy()
        if values.ndim != 1:
            raise DimensionMismatch(f"State values must be a vector, got shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, index):
        return self.values[index]

    @classmethod
    def from_mapping(cls, params: MarketParams, proportions: dict) -> 'StateDistribution':
        """Build a distribution from a label -> proportion mapping (missing labels are 0)."""
        labels = state_labels(params)
        unknown = set(proportions) - set(labels)
        if unknown:
            raise DimensionMismatch(f"Unknown state labels: {sorted(unknown)}")
        values = [float(proportions.get(label, 0.0)) for label in labels]
        return cls(model_class_of(params), np.array(values))


def check_dimension(params: MarketParams, mu) -> np.ndarray:
    """Return the raw vector of mu after checking it fits the params layout."""
    if isinstance(mu, StateDistribution):
        if mu.model_class is not model_class_of(params):
            raise DimensionMismatch(
                f"State is {mu.model_class.value}, parameters are {model_class_of(params).value}"
            )
        values = mu.values
    else:
        values = np.asarray(mu, dtype=float)
    expected = state_dimension(params)
    if values.shape[-1] != expected:
        raise DimensionMismatch(f"State has {values.shape[-1]} components, expected {expected}")
    return values


def constraint_residuals(params: MarketParams, mu) -> np.ndarray:
    """
    Evaluate the linear constraints of a market at a state.

    Args:
        params: Parameter record
        mu: StateDistribution or raw vector

    Returns:
        Residual vector: total mass - 1 first, then per-asset owner mass
        minus m_i (binary classes) or supply minus s (heterogeneous)
    """
    values = check_dimension(params, mu)
    residuals = [float(np.sum(values)) - 1.0]
    if model_class_of(params) is ModelClass.HETEROGENEOUS:
        residuals.append(heterogeneous_supply(values) - params.s)
    else:
        high, low = owner_slices(params)
        residuals.extend((values[high] + values[low] - params.m).tolist())
    return np.array(residuals)


def validate_state(params: MarketParams, mu, tol: float = STATE_TOLERANCE) -> StateDistribution:
    """
    Check a distribution against the StateDistribution invariants.

    Raises:
        DimensionMismatch: If the vector does not fit the layout
        InvalidState: If a component leaves [0,1] or a constraint is violated beyond tol
    """
    values = check_dimension(params, mu)
    if np.any(values < -tol) or np.any(values > 1.0 + tol):
        raise InvalidState(f"State components must lie in [0,1], got {values.tolist()}")
    residuals = constraint_residuals(params, values)
    worst = float(np.max(np.abs(residuals)))
    if worst > tol:
        raise InvalidState(f"State violates constraints by {worst:.3e} (tolerance {tol:.1e})")
    if isinstance(mu, StateDistribution):
        return mu
    return StateDistribution(model_class_of(params), values)


def heterogeneous_supply(values: Sequence[float]) -> float:
    """Ticks held per investor: y + v + 2(z + w)."""
    return float(values[1] + values[4] + 2.0 * (values[2] + values[5]))
