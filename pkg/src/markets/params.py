"""
Parameter records for the three over-the-counter market classes.

Records are plain frozen dataclasses; `validate` enforces the constraints a
market must satisfy before it is simulated or solved. Solvers accept
unvalidated records so degenerate test configurations (zero meeting rate,
zero switching rate) can still be evaluated.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Union

import numpy as np

logger = logging.getLogger(__name__)

SUM_TOLERANCE = 1e-12


class ParameterError(ValueError):
    """Exception raised when a parameter record violates its invariants."""
    pass


class MassOverflow(ParameterError):
    """Asset masses sum to one or more (or an individual mass is not positive)."""
    pass


class NonPositiveRate(ParameterError):
    """A rate that must be strictly positive is not."""
    pass


class SplitNotUnit(ParameterError):
    """The heterogeneous trade split a + b differs from one."""
    pass


class SupplyOutOfRange(ParameterError):
    """The heterogeneous asset supply s lies outside [0, 2]."""
    pass


def _as_vector(values: Any) -> np.ndarray:
    try:
        return np.atleast_1d(np.asarray(values, dtype=float)).copy()
    except (TypeError, ValueError) as e:
        raise ParameterError(f"Rates and masses must be numeric, got {values!r}") from e


def _as_scalar(name: str, value: Any) -> float:
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise ParameterError(f"{name} must be a number, got {value!r}") from e


@dataclass(frozen=True, eq=False)
class NonSegmentedParams:
    """Rates and asset masses of a non-segmented market with K assets."""

    K: int
    lam: np.ndarray
    gamma_u: float
    gamma_d: float
    gamma_ui: np.ndarray
    gamma_di: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        for name in ('lam', 'gamma_ui', 'gamma_di', 'm'):
            object.__setattr__(self, name, _as_vector(getattr(self, name)))
        object.__setattr__(self, 'gamma_u', _as_scalar('gamma_u', self.gamma_u))
        object.__setattr__(self, 'gamma_d', _as_scalar('gamma_d', self.gamma_d))
        object.__setattr__(self, 'K', int(self.K))

    @property
    def gamma(self) -> float:
        """Total non-owner switching rate gamma_u + gamma_d."""
        return self.gamma_u + self.gamma_d

    @property
    def gamma_i(self) -> np.ndarray:
        """Per-asset owner switching rates gamma_ui + gamma_di."""
        return self.gamma_ui + self.gamma_di

    @property
    def free_mass(self) -> float:
        """Mass of non-owners, 1 - sum(m)."""
        return 1.0 - float(np.sum(self.m))


@dataclass(frozen=True, eq=False)
class PartiallySegmentedParams:
    """Rates and asset masses of a partially segmented market.

    Non-owners target one asset; their switching rates gamma_tilde_ui and
    gamma_tilde_di depend on that asset.
    """

    K: int
    lam: np.ndarray
    gamma_ui: np.ndarray
    gamma_di: np.ndarray
    gamma_tilde_ui: np.ndarray
    gamma_tilde_di: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        for name in ('lam', 'gamma_ui', 'gamma_di', 'gamma_tilde_ui',
                     'gamma_tilde_di', 'm'):
            object.__setattr__(self, name, _as_vector(getattr(self, name)))
        object.__setattr__(self, 'K', int(self.K))

    @property
    def gamma_i(self) -> np.ndarray:
        return self.gamma_ui + self.gamma_di

    @property
    def gamma_tilde_i(self) -> np.ndarray:
        return self.gamma_tilde_ui + self.gamma_tilde_di

    @property
    def free_mass(self) -> float:
        return 1.0 - float(np.sum(self.m))

    @classmethod
    def from_nonsegmented(cls, params: NonSegmentedParams) -> 'PartiallySegmentedParams':
        """Identify a single-asset non-segmented market with its segmented twin."""
        if params.K != 1:
            raise ParameterError("Only K=1 markets coincide across the two classes")
        return cls(
            K=1,
            lam=params.lam,
            gamma_ui=params.gamma_ui,
            gamma_di=params.gamma_di,
            gamma_tilde_ui=[params.gamma_u],
            gamma_tilde_di=[params.gamma_d],
            m=params.m,
        )


@dataclass(frozen=True, eq=False)
class HeterogeneousParams:
    """Rates of the heterogeneous-position market (positions 0, 1, 2 ticks).

    c[i] is the h -> l switching rate and d[i] the l -> h rate for investors
    holding i ticks; s is the total supply in ticks.
    """

    lam: float
    a: float
    b: float
    c: np.ndarray = field(default_factory=lambda: np.zeros(3))
    d: np.ndarray = field(default_factory=lambda: np.zeros(3))
    s: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'c', _as_vector(self.c))
        object.__setattr__(self, 'd', _as_vector(self.d))
        for name in ('lam', 'a', 'b', 's'):
            object.__setattr__(self, name, _as_scalar(name, getattr(self, name)))

    def with_supply(self, s: float) -> 'HeterogeneousParams':
        """Return a copy of these rates at another supply level."""
        return HeterogeneousParams(lam=self.lam, a=self.a, b=self.b,
                                   c=self.c, d=self.d, s=s)


MarketParams = Union[NonSegmentedParams, PartiallySegmentedParams, HeterogeneousParams]


def _check_vector_lengths(params, names) -> None:
    for name in names:
        vector = getattr(params, name)
        if vector.shape != (params.K,):
            raise ParameterError(
                f"Field '{name}' has {vector.size} entries, expected K={params.K}"
            )


def _check_positive(name: str, values) -> None:
    values = np.atleast_1d(values)
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise NonPositiveRate(f"Rate '{name}' must be strictly positive, got {values.tolist()}")


def _check_masses(m: np.ndarray) -> None:
    if np.any(m <= 0):
        raise MassOverflow(f"Asset masses must be positive, got {m.tolist()}")
    total = float(np.sum(m))
    if total >= 1.0:
        raise MassOverflow(f"Asset masses sum to {total:.6g}, must be < 1")


def validate(params: MarketParams) -> MarketParams:
    """
    Validate a parameter record against its market-class invariants.

    Args:
        params: Parameter record of any market class

    Returns:
        The same record, unchanged, when every invariant holds

    Raises:
        MassOverflow: If an asset mass is not positive or the masses sum to >= 1
        NonPositiveRate: If a required rate is not strictly positive
        SplitNotUnit: If a heterogeneous split has a + b != 1
        SupplyOutOfRange: If a heterogeneous supply lies outside [0, 2]
        ParameterError: On any other structural problem (K, vector lengths)
    """
    if isinstance(params, NonSegmentedParams):
        if params.K < 1:
            raise ParameterError(f"K must be a positive integer, got {params.K}")
        _check_vector_lengths(params, ('lam', 'gamma_ui', 'gamma_di', 'm'))
        _check_positive('lambda', params.lam)
        _check_positive('gamma_u', params.gamma_u)
        _check_positive('gamma_d', params.gamma_d)
        _check_positive('gamma_ui', params.gamma_ui)
        _check_positive('gamma_di', params.gamma_di)
        _check_masses(params.m)

    elif isinstance(params, PartiallySegmentedParams):
        if params.K < 1:
            raise ParameterError(f"K must be a positive integer, got {params.K}")
        _check_vector_lengths(params, ('lam', 'gamma_ui', 'gamma_di',
                                       'gamma_tilde_ui', 'gamma_tilde_di', 'm'))
        _check_positive('lambda', params.lam)
        _check_positive('gamma_ui', params.gamma_ui)
        _check_positive('gamma_di', params.gamma_di)
        _check_positive('gamma_tilde_ui', params.gamma_tilde_ui)
        _check_positive('gamma_tilde_di', params.gamma_tilde_di)
        _check_masses(params.m)

    elif isinstance(params, HeterogeneousParams):
        _check_positive('lambda', params.lam)
        if params.a < 0 or params.b < 0:
            raise SplitNotUnit(f"Split probabilities must be >= 0, got a={params.a}, b={params.b}")
        if abs(params.a + params.b - 1.0) > SUM_TOLERANCE:
            raise SplitNotUnit(f"a + b must equal 1, got {params.a + params.b:.6g}")
        if not 0.0 <= params.s <= 2.0:
            raise SupplyOutOfRange(f"Supply s must lie in [0, 2], got {params.s}")
        if params.c.shape != (3,) or params.d.shape != (3,):
            raise ParameterError("Switching vectors c and d must have 3 entries")
        if np.any(params.c < 0) or np.any(params.d < 0):
            raise NonPositiveRate("Switching rates c and d must be >= 0")
        if not np.any(params.c > 0) and not np.any(params.d > 0):
            raise NonPositiveRate("At least one switching rate in c or d must be positive")

    else:
        raise ParameterError(f"Unknown parameter record: {type(params).__name__}")

    logger.debug(f"Validated {type(params).__name__}")
    return params


def params_to_dict(params: MarketParams) -> Dict[str, Any]:
    """Serialize a parameter record using the transliterated symbol names."""
    if isinstance(params, NonSegmentedParams):
        return {
            'K': params.K,
            'lambda': params.lam.tolist(),
            'gamma_u': params.gamma_u,
            'gamma_d': params.gamma_d,
            'gamma_ui': params.gamma_ui.tolist(),
            'gamma_di': params.gamma_di.tolist(),
            'm': params.m.tolist(),
        }
    if isinstance(params, PartiallySegmentedParams):
        return {
            'K': params.K,
            'lambda': params.lam.tolist(),
            'gamma_ui': params.gamma_ui.tolist(),
            'gamma_di': params.gamma_di.tolist(),
            'gamma_tilde_ui': params.gamma_tilde_ui.tolist(),
            'gamma_tilde_di': params.gamma_tilde_di.tolist(),
            'm': params.m.tolist(),
        }
    if isinstance(params, HeterogeneousParams):
        record = {'lambda': params.lam, 'a': params.a, 'b': params.b, 's': params.s}
        for i in range(3):
            record[f'c{i}'] = float(params.c[i])
            record[f'd{i}'] = float(params.d[i])
        return record
    raise ParameterError(f"Unknown parameter record: {type(params).__name__}")


def _required(data: Dict[str, Any], key: str) -> Any:
    if key not in data or data[key] is None:
        raise ParameterError(f"Required field '{key}' is missing")
    return data[key]


def nonsegmented_from_dict(data: Dict[str, Any]) -> NonSegmentedParams:
    return NonSegmentedParams(
        K=_required(data, 'K'),
        lam=_required(data, 'lambda'),
        gamma_u=_required(data, 'gamma_u'),
        gamma_d=_required(data, 'gamma_d'),
        gamma_ui=_required(data, 'gamma_ui'),
        gamma_di=_required(data, 'gamma_di'),
        m=_required(data, 'm'),
    )


def partially_segmented_from_dict(data: Dict[str, Any]) -> PartiallySegmentedParams:
    return PartiallySegmentedParams(
        K=_required(data, 'K'),
        lam=_required(data, 'lambda'),
        gamma_ui=_required(data, 'gamma_ui'),
        gamma_di=_required(data, 'gamma_di'),
        gamma_tilde_ui=_required(data, 'gamma_tilde_ui'),
        gamma_tilde_di=_required(data, 'gamma_tilde_di'),
        m=_required(data, 'm'),
    )


def heterogeneous_from_dict(data: Dict[str, Any]) -> HeterogeneousParams:
    return HeterogeneousParams(
        lam=data.get('lambda', 1.0),
        a=_required(data, 'a'),
        b=_required(data, 'b'),
        c=[_required(data, f'c{i}') for i in range(3)],
        d=[_required(data, f'd{i}') for i in range(3)],
        s=_required(data, 's'),
    )
