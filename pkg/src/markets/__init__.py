"""
Market models: parameters, state distributions, Master Equations and kernels.
"""

from .params import (HeterogeneousParams, MarketParams, MassOverflow, NonPositiveRate,
                     NonSegmentedParams, ParameterError, PartiallySegmentedParams,
                     SplitNotUnit, SupplyOutOfRange, params_to_dict, validate)
from .state import (DimensionMismatch, InvalidState, ModelClass, StateDistribution,
                    column_names, constraint_residuals, model_class_of, state_labels,
                    validate_state)
from .dynamics import rhs_heterogeneous, rhs_nonsegmented, rhs_partially_segmented
from .kernel import TransitionKernel, kernel, transaction_scheme
from .models import MODEL_REGISTRY, get_all_models, get_model, model_for_params

__all__ = [
    'NonSegmentedParams',
    'PartiallySegmentedParams',
    'HeterogeneousParams',
    'MarketParams',
    'ParameterError',
    'MassOverflow',
    'NonPositiveRate',
    'SplitNotUnit',
    'SupplyOutOfRange',
    'validate',
    'params_to_dict',
    'ModelClass',
    'StateDistribution',
    'DimensionMismatch',
    'InvalidState',
    'model_class_of',
    'state_labels',
    'column_names',
    'constraint_residuals',
    'validate_state',
    'rhs_nonsegmented',
    'rhs_partially_segmented',
    'rhs_heterogeneous',
    'TransitionKernel',
    'kernel',
    'transaction_scheme',
    'MODEL_REGISTRY',
    'get_model',
    'get_all_models',
    'model_for_params',
]
