"""
Tests for market parameters, state layouts, Master Equations and kernels.
"""

import numpy as np
import pytest

from src.markets.dynamics import (heterogeneous_flows, rhs_heterogeneous, rhs_nonsegmented,
                                  rhs_partially_segmented)
from src.markets.kernel import kernel, transaction_scheme
from src.markets.models import (MODEL_REGISTRY, HeterogeneousModel, NonSegmentedModel,
                                PartiallySegmentedModel, get_all_models, get_model,
                                model_for_params)
from src.markets.params import (HeterogeneousParams, MassOverflow, NonPositiveRate,
                                NonSegmentedParams, ParameterError, PartiallySegmentedParams,
                                SplitNotUnit, SupplyOutOfRange, heterogeneous_from_dict,
                                nonsegmented_from_dict, params_to_dict, validate)
from src.markets.state import (DimensionMismatch, InvalidState, ModelClass, StateDistribution,
                               column_names, constraint_residuals, state_dimension, state_labels,
                               validate_state)
from src.steady.heterogeneous import reduced_residual_heterogeneous


def _random_state(params, rng):
    """Random feasible state for a binary-class market."""
    model = model_for_params(params)
    values = model.default_initial_state(params).values.copy()
    high_share = rng.uniform(0.0, 1.0, params.K)
    if model.get_model_class() is ModelClass.NON_SEGMENTED:
        owners = slice(2, None)
        buyers = rng.uniform(0.0, params.free_mass)
        values[0], values[1] = buyers, params.free_mass - buyers
    else:
        owners = slice(params.K + 1, None)
        split = rng.dirichlet(np.ones(params.K + 1)) * params.free_mass
        values[:params.K + 1] = split
    values[owners][0::2] = high_share * params.m
    values[owners][1::2] = (1.0 - high_share) * params.m
    return values


class TestParameterValidation:
    """Tests for parameter records and their invariants."""

    @pytest.mark.unit
    def test_valid_benchmark(self, benchmark_params):
        assert validate(benchmark_params) is benchmark_params
        assert benchmark_params.free_mass == pytest.approx(0.8)
        assert benchmark_params.gamma == 2.0

    @pytest.mark.unit
    def test_mass_overflow(self):
        params = NonSegmentedParams(K=2, lam=[1, 1], gamma_u=1, gamma_d=1,
                                    gamma_ui=[1, 1], gamma_di=[1, 1], m=[0.6, 0.4])
        with pytest.raises(MassOverflow, match="must be < 1"):
            validate(params)

    @pytest.mark.unit
    def test_non_positive_mass(self):
        params = NonSegmentedParams(K=1, lam=[1], gamma_u=1, gamma_d=1,
                                    gamma_ui=[1], gamma_di=[1], m=[0.0])
        with pytest.raises(MassOverflow):
            validate(params)

    @pytest.mark.unit
    def test_non_positive_rate(self):
        params = PartiallySegmentedParams(K=1, lam=[1], gamma_ui=[1], gamma_di=[1],
                                          gamma_tilde_ui=[0.0], gamma_tilde_di=[1], m=[0.2])
        with pytest.raises(NonPositiveRate, match="gamma_tilde_ui"):
            validate(params)

    @pytest.mark.unit
    def test_vector_length_mismatch(self):
        params = NonSegmentedParams(K=2, lam=[1, 1], gamma_u=1, gamma_d=1,
                                    gamma_ui=[1], gamma_di=[1, 1], m=[0.1, 0.1])
        with pytest.raises(ParameterError, match="expected K=2"):
            validate(params)

    @pytest.mark.unit
    def test_split_not_unit(self):
        params = HeterogeneousParams(lam=1.0, a=0.5, b=0.6, c=[1, 1, 1], d=[1, 1, 1], s=1.0)
        with pytest.raises(SplitNotUnit):
            validate(params)

    @pytest.mark.unit
    def test_supply_out_of_range(self):
        params = HeterogeneousParams(lam=1.0, a=1.0, b=0.0, c=[1, 1, 1], d=[1, 1, 1], s=2.5)
        with pytest.raises(SupplyOutOfRange):
            validate(params)

    @pytest.mark.unit
    def test_heterogeneous_needs_some_switching(self):
        params = HeterogeneousParams(lam=1.0, a=1.0, b=0.0, c=[0, 0, 0], d=[0, 0, 0], s=1.0)
        with pytest.raises(NonPositiveRate):
            validate(params)

    @pytest.mark.unit
    def test_counterexample_rates_are_valid(self, counterexample):
        validate(counterexample(1.75))

    @pytest.mark.unit
    def test_dict_conversion(self, benchmark_params):
        data = params_to_dict(benchmark_params)
        assert data['lambda'] == [1.0]
        restored = nonsegmented_from_dict(data)
        assert np.array_equal(restored.m, benchmark_params.m)

    @pytest.mark.unit
    def test_heterogeneous_lambda_defaults_to_one(self):
        params = heterogeneous_from_dict({'a': 1, 'b': 0, 'c0': 0, 'c1': 0, 'c2': 1,
                                          'd0': 1, 'd1': 0, 'd2': 0, 's': 1.0})
        assert params.lam == 1.0

    @pytest.mark.unit
    def test_missing_field(self):
        with pytest.raises(ParameterError, match="Required field 'gamma_u' is missing"):
            nonsegmented_from_dict({'K': 1, 'lambda': [1], 'gamma_d': 1,
                                    'gamma_ui': [1], 'gamma_di': [1], 'm': [0.2]})

    @pytest.mark.unit
    def test_with_supply(self, counterexample):
        params = counterexample(1.0).with_supply(1.5)
        assert params.s == 1.5
        assert np.array_equal(params.c, [0.0, 0.0, 1.0])


class TestStateLayout:
    """Tests for state labels, dimensions and constraint bookkeeping."""

    @pytest.mark.unit
    def test_nonsegmented_labels(self, three_asset_params):
        assert state_labels(three_asset_params) == [
            'h,n', 'l,n', 'h1,o', 'l1,o', 'h2,o', 'l2,o', 'h3,o', 'l3,o']
        assert state_dimension(three_asset_params) == 8

    @pytest.mark.unit
    def test_segmented_labels(self, segmented_params):
        labels = state_labels(segmented_params)
        assert labels[:4] == ['h1,n', 'h2,n', 'h3,n', 'l,n']
        assert len(labels) == 3 * 3 + 1

    @pytest.mark.unit
    def test_heterogeneous_columns(self, counterexample):
        assert column_names(counterexample(1.0)) == ['x', 'y', 'z', 'u', 'v', 'w']

    @pytest.mark.unit
    def test_table_columns(self, benchmark_params):
        assert column_names(benchmark_params) == ['mu_h_n', 'mu_l_n', 'mu_h1_o', 'mu_l1_o']

    @pytest.mark.unit
    def test_default_state_satisfies_constraints(self, three_asset_params, segmented_params,
                                                 counterexample):
        for params in (three_asset_params, segmented_params, counterexample(1.75)):
            state = model_for_params(params).default_initial_state(params)
            assert np.max(np.abs(constraint_residuals(params, state))) < 1e-12
            validate_state(params, state)

    @pytest.mark.unit
    def test_invalid_state_rejected(self, benchmark_params):
        with pytest.raises(InvalidState):
            validate_state(benchmark_params, [0.5, 0.5, 0.1, 0.1])

    @pytest.mark.unit
    def test_dimension_mismatch(self, benchmark_params):
        with pytest.raises(DimensionMismatch):
            constraint_residuals(benchmark_params, [0.5, 0.5])

    @pytest.mark.unit
    def test_from_mapping(self, benchmark_params):
        state = StateDistribution.from_mapping(benchmark_params, {'l,n': 0.8, 'l1,o': 0.2})
        assert state.values.tolist() == [0.0, 0.8, 0.0, 0.2]
        assert float(np.sum(state.values)) == pytest.approx(1.0)

    @pytest.mark.unit
    def test_from_mapping_unknown_label(self, benchmark_params):
        with pytest.raises(DimensionMismatch, match="Unknown state labels"):
            StateDistribution.from_mapping(benchmark_params, {'h9,o': 0.2})

    @pytest.mark.unit
    def test_model_class_parse(self):
        assert ModelClass.parse('Non-Segmented') is ModelClass.NON_SEGMENTED
        with pytest.raises(ValueError, match="Unknown model class"):
            ModelClass.parse('segmented')


class TestMasterEquations:
    """Tests for the right-hand sides of the three market classes."""

    @pytest.mark.unit
    def test_nonsegmented_conserves_constraints(self, three_asset_params, rng):
        for _ in range(20):
            mu = _random_state(three_asset_params, rng)
            derivative = rhs_nonsegmented(three_asset_params, mu)
            assert abs(derivative.sum()) < 1e-14
            assert np.allclose(derivative[2::2] + derivative[3::2], 0.0, atol=1e-14)

    @pytest.mark.unit
    def test_segmented_conserves_constraints(self, segmented_params, rng):
        for _ in range(20):
            mu = _random_state(segmented_params, rng)
            derivative = rhs_partially_segmented(segmented_params, mu)
            assert abs(derivative.sum()) < 1e-14
            assert np.allclose(derivative[4::2] + derivative[5::2], 0.0, atol=1e-14)

    @pytest.mark.unit
    def test_heterogeneous_conserves_supply(self, mixed_heterogeneous_params, rng):
        for _ in range(20):
            mu = rng.dirichlet(np.ones(6))
            derivative = rhs_heterogeneous(mixed_heterogeneous_params, mu)
            assert abs(derivative.sum()) < 1e-14
            supply_rate = derivative[1] + derivative[4] + 2.0 * (derivative[2] + derivative[5])
            assert abs(supply_rate) < 1e-14

    @pytest.mark.unit
    def test_benchmark_rhs_at_known_state(self, benchmark_params, benchmark_root):
        x = benchmark_root
        low = 0.2 / (x + 2.0)
        state = [x, 0.8 - x, 0.2 - low, low]
        assert np.max(np.abs(rhs_nonsegmented(benchmark_params, state))) < 1e-14

    @pytest.mark.unit
    def test_zero_meeting_rate(self):
        params = NonSegmentedParams(K=1, lam=[0.0], gamma_u=1, gamma_d=1,
                                    gamma_ui=[1], gamma_di=[1], m=[0.2])
        derivative = rhs_nonsegmented(params, [0.4, 0.4, 0.1, 0.1])
        assert derivative[0] == pytest.approx(0.0)
        assert derivative[2] == pytest.approx(0.0)

    @pytest.mark.unit
    def test_dimension_checked(self, segmented_params):
        with pytest.raises(DimensionMismatch):
            rhs_partially_segmented(segmented_params, np.full(4, 0.25))

    @pytest.mark.unit
    def test_heterogeneous_soundness_relations(self, rng):
        """The Master Equation is a combination of the reduced residual rows."""
        for _ in range(10):
            params = HeterogeneousParams(lam=rng.uniform(0.5, 3.0), a=0.3, b=0.7,
                                         c=rng.uniform(0.1, 2.0, 3), d=rng.uniform(0.1, 2.0, 3),
                                         s=1.0)
            mu = rng.dirichlet(np.ones(6))
            r = reduced_residual_heterogeneous(params, mu)
            derivative = rhs_heterogeneous(params, mu)
            lam = params.lam
            expected = [-r[0], r[1] - lam * r[3], r[2] + lam * r[3],
                        r[0] + lam * r[3], -r[1] - lam * r[3], -r[2]]
            assert np.allclose(derivative, expected, atol=1e-13)

    @pytest.mark.unit
    def test_flows_are_nonnegative(self, mixed_heterogeneous_params):
        trades, _ = heterogeneous_flows(mixed_heterogeneous_params, np.full(6, 1.0 / 6.0))
        assert all(value >= 0 for value in trades.values())


class TestTransitionKernel:
    """Tests for the intensity kernel and transaction schemes."""

    @pytest.mark.unit
    def test_kernel_drift_matches_rhs(self, three_asset_params, segmented_params,
                                      mixed_heterogeneous_params, rng):
        for params in (three_asset_params, segmented_params):
            mu = _random_state(params, rng)
            k = kernel(model_for_params(params).get_model_class(), params, mu)
            assert np.allclose(k.drift(mu), model_for_params(params).rhs(params, mu), atol=1e-13)
        mu = rng.dirichlet(np.ones(6))
        k = kernel('heterogeneous', mixed_heterogeneous_params, mu)
        assert np.allclose(k.drift(mu), rhs_heterogeneous(mixed_heterogeneous_params, mu),
                           atol=1e-13)

    @pytest.mark.unit
    def test_buyer_rate_scales_with_sellers(self, benchmark_params):
        k = kernel('non-segmented', benchmark_params, [0.3, 0.5, 0.05, 0.15])
        assert k.rate('h,n', 'h1,o') == pytest.approx(0.15)
        assert k.rate('l1,o', 'l,n') == pytest.approx(0.3)
        assert k.rate('h,n', 'l,n') == pytest.approx(1.0)
        assert k.rate('h1,o', 'h,n') == 0.0

    @pytest.mark.unit
    def test_unknown_label(self, benchmark_params):
        k = kernel('non-segmented', benchmark_params, [0.3, 0.5, 0.05, 0.15])
        with pytest.raises(KeyError):
            k.rate('h,n', 'h7,o')

    @pytest.mark.unit
    def test_class_mismatch(self, benchmark_params):
        with pytest.raises(ValueError, match="does not match"):
            kernel('heterogeneous', benchmark_params, [0.3, 0.5, 0.05, 0.15])

    @pytest.mark.unit
    def test_heterogeneous_scheme(self, counterexample):
        scheme = transaction_scheme(counterexample(1.0))
        names = [trade.name for trade in scheme.trades]
        assert names == ['h0_l1', 'h1_l1', 'h1_l2', 'h0_l2_a', 'h0_l2_b']
        assert len(scheme.switches) == 6


class TestModelRegistry:
    """Tests for the market model registry."""

    @pytest.mark.unit
    def test_registry_contents(self):
        assert set(MODEL_REGISTRY) == {'non-segmented', 'partially-segmented', 'heterogeneous'}
        assert len(get_all_models()) == 3

    @pytest.mark.unit
    def test_get_model(self):
        assert isinstance(get_model('non-segmented'), NonSegmentedModel)
        assert isinstance(get_model(ModelClass.PARTIALLY_SEGMENTED), PartiallySegmentedModel)
        assert isinstance(get_model('heterogeneous'), HeterogeneousModel)

    @pytest.mark.unit
    def test_unknown_model(self):
        with pytest.raises(ValueError, match="Unknown model: pooled"):
            get_model('pooled')

    @pytest.mark.unit
    def test_drift_function_matches_rhs(self, segmented_params, rng):
        model = PartiallySegmentedModel()
        mu = _random_state(segmented_params, rng)
        drift = model.drift_function(segmented_params)
        assert np.array_equal(drift(mu), model.rhs(segmented_params, mu))

    @pytest.mark.unit
    def test_heterogeneous_default_state(self, counterexample):
        model = HeterogeneousModel()
        low_supply = model.default_initial_state(counterexample(0.5)).values
        assert low_supply.tolist() == [0.25, 0.25, 0.0, 0.25, 0.25, 0.0]
        high_supply = model.default_initial_state(counterexample(1.75)).values
        assert high_supply.tolist() == [0.0, 0.125, 0.375, 0.0, 0.125, 0.375]
