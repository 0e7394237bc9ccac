"""
Market model classes.

Each market class bundles its parameter parsing, state layout, Master
Equation and kernel behind one interface, so the ODE engine, the simulator
and the command-line layer can treat the three classes uniformly.
"""

import logging
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, List

import numpy as np

from src.markets import dynamics
from src.markets.kernel import TransitionKernel, kernel
from src.markets.params import (HeterogeneousParams, MarketParams, NonSegmentedParams,
                                PartiallySegmentedParams, heterogeneous_from_dict,
                                nonsegmented_from_dict, params_to_dict,
                                partially_segmented_from_dict, validate)
from src.markets.state import (ModelClass, StateDistribution, column_names, constraint_residuals,
                               state_labels)

logger = logging.getLogger(__name__)


class BaseMarketModel(ABC):
    """Abstract base class for all market classes."""

    @abstractmethod
    def get_model_class(self) -> ModelClass:
        """Return the class tag of this market."""
        pass

    @abstractmethod
    def params_from_dict(self, data: Dict[str, Any]) -> MarketParams:
        """Build a parameter record from a config block."""
        pass

    @abstractmethod
    def drift_function(self, params: MarketParams) -> Callable[[np.ndarray], np.ndarray]:
        """Return the unchecked drift as a function of a raw state vector."""
        pass

    @abstractmethod
    def default_initial_state(self, params: MarketParams) -> StateDistribution:
        """Return a feasible starting distribution for integration and simulation."""
        pass

    def validate_params(self, params: MarketParams) -> MarketParams:
        return validate(params)

    def params_to_dict(self, params: MarketParams) -> Dict[str, Any]:
        return params_to_dict(params)

    def state_labels(self, params: MarketParams) -> List[str]:
        return state_labels(params)

    def column_names(self, params: MarketParams) -> List[str]:
        return column_names(params)

    def constraint_residuals(self, params: MarketParams, mu) -> np.ndarray:
        return constraint_residuals(params, mu)

    def rhs(self, params: MarketParams, mu) -> np.ndarray:
        return self.drift_function(params)(np.asarray(getattr(mu, 'values', mu), dtype=float))

    def kernel(self, params: MarketParams, mu) -> TransitionKernel:
        return kernel(self.get_model_class(), params, mu)

    def state(self, values) -> StateDistribution:
        return StateDistribution(self.get_model_class(), np.asarray(values, dtype=float))


class NonSegmentedModel(BaseMarketModel):
    """Buyers do not target an asset; any (h,n) investor buys any asset offered."""

    def get_model_class(self) -> ModelClass:
        return ModelClass.NON_SEGMENTED

    def params_from_dict(self, data: Dict[str, Any]) -> NonSegmentedParams:
        return nonsegmented_from_dict(data)

    def rhs(self, params, mu) -> np.ndarray:
        return dynamics.rhs_nonsegmented(params, mu)

    def drift_function(self, params):
        return lambda values: dynamics.nonsegmented_drift(params, values)

    def default_initial_state(self, params: NonSegmentedParams) -> StateDistribution:
        # Everyone low-type: all owners want to sell, all non-owners are idle.
        values = np.zeros(2 * params.K + 2)
        values[1] = params.free_mass
        values[3::2] = params.m
        return self.state(values)


class PartiallySegmentedModel(BaseMarketModel):
    """Each non-owning buyer targets one asset and trades only in it."""

    def get_model_class(self) -> ModelClass:
        return ModelClass.PARTIALLY_SEGMENTED

    def params_from_dict(self, data: Dict[str, Any]) -> PartiallySegmentedParams:
        return partially_segmented_from_dict(data)

    def rhs(self, params, mu) -> np.ndarray:
        return dynamics.rhs_partially_segmented(params, mu)

    def drift_function(self, params):
        return lambda values: dynamics.partially_segmented_drift(params, values)

    def default_initial_state(self, params: PartiallySegmentedParams) -> StateDistribution:
        values = np.zeros(3 * params.K + 1)
        values[params.K] = params.free_mass
        values[params.K + 2::2] = params.m
        return self.state(values)


class HeterogeneousModel(BaseMarketModel):
    """Investors hold 0, 1 or 2 ticks and trade partial positions pairwise."""

    def get_model_class(self) -> ModelClass:
        return ModelClass.HETEROGENEOUS

    def params_from_dict(self, data: Dict[str, Any]) -> HeterogeneousParams:
        return heterogeneous_from_dict(data)

    def rhs(self, params, mu) -> np.ndarray:
        return dynamics.rhs_heterogeneous(params, mu)

    def drift_function(self, params):
        return lambda values: dynamics.heterogeneous_drift(params, values)

    def default_initial_state(self, params: HeterogeneousParams) -> StateDistribution:
        # Spread the supply over positions 1 and 2, split evenly by type.
        s = params.s
        if s <= 1.0:
            holdings = np.array([1.0 - s, s, 0.0])
        else:
            holdings = np.array([0.0, 2.0 - s, s - 1.0])
        return self.state(np.concatenate([holdings / 2.0, holdings / 2.0]))


# Model registry
MODEL_REGISTRY = {
    ModelClass.NON_SEGMENTED.value: NonSegmentedModel,
    ModelClass.PARTIALLY_SEGMENTED.value: PartiallySegmentedModel,
    ModelClass.HETEROGENEOUS.value: HeterogeneousModel,
}


def get_model(model_name) -> BaseMarketModel:
    """
    Get a market model instance by class tag.

    Args:
        model_name: Tag such as 'non-segmented' (a ModelClass is accepted too)

    Returns:
        Model instance

    Raises:
        ValueError: If the tag is unknown
    """
    key = model_name.value if isinstance(model_name, ModelClass) else str(model_name)
    if key not in MODEL_REGISTRY:
        raise ValueError(f"Unknown model: {model_name}")
    return MODEL_REGISTRY[key]()


def get_all_models() -> Dict[str, BaseMarketModel]:
    return {name: model_class() for name, model_class in MODEL_REGISTRY.items()}


def model_for_params(params: MarketParams) -> BaseMarketModel:
    """Return the model instance matching a parameter record."""
    if isinstance(params, NonSegmentedParams):
        return NonSegmentedModel()
    if isinstance(params, PartiallySegmentedParams):
        return PartiallySegmentedModel()
    if isinstance(params, HeterogeneousParams):
        return HeterogeneousModel()
    raise ValueError(f"Unknown parameter record: {type(params).__name__}")
