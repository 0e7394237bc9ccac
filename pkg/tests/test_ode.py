"""
Tests for the fixed-step integrator and steady-state relaxation.
"""

from functools import partial

import numpy as np
import pytest

from src.markets.dynamics import rhs_nonsegmented
from src.markets.models import HeterogeneousModel, NonSegmentedModel, PartiallySegmentedModel
from src.markets.state import ModelClass, StateDistribution, constraint_residuals
from src.ode.integrator import (InvalidInitialState, StepTooLarge, integrate, relax_to_steady,
                                rk4_step, sample_times)


class TestSampling:
    """Tests for the sampling grid."""

    @pytest.mark.unit
    def test_regular_grid(self):
        assert sample_times(5.0, 1.0).tolist() == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]

    @pytest.mark.unit
    def test_grid_closed_by_t_end(self):
        times = sample_times(2.5, 1.0)
        assert times.tolist() == [0.0, 1.0, 2.0, 2.5]

    @pytest.mark.unit
    def test_fractional_interval(self):
        times = sample_times(1.0, 0.1)
        assert len(times) == 11
        assert times[-1] == 1.0

    @pytest.mark.unit
    def test_tiny_horizon_keeps_endpoint(self):
        assert sample_times(1e-13, 1.0).tolist() == [0.0, 1e-13]
        assert sample_times(5e-13, 5e-13).tolist() == [0.0, 5e-13]


class TestIntegrate:
    """Tests for integrate."""

    @pytest.fixture
    def model(self):
        return NonSegmentedModel()

    @pytest.mark.unit
    def test_rk4_on_linear_decay(self):
        y = rk4_step(lambda v: -v, np.array([1.0]), 0.1)
        assert y[0] == pytest.approx(np.exp(-0.1), abs=1e-7)

    @pytest.mark.unit
    def test_samples_and_shape(self, model, benchmark_params):
        start = model.default_initial_state(benchmark_params)
        trajectory = integrate(model.drift_function(benchmark_params), start, 10.0,
                               step=0.01, sample_every=1.0)
        assert len(trajectory) == 11
        assert trajectory.values.shape == (11, 4)
        assert trajectory.model_class is ModelClass.NON_SEGMENTED
        assert np.array_equal(trajectory.values[0], start.values)

    @pytest.mark.unit
    def test_zero_horizon(self, model, benchmark_params):
        start = model.default_initial_state(benchmark_params)
        trajectory = integrate(model.drift_function(benchmark_params), start, 0.0)
        assert len(trajectory) == 1
        assert np.array_equal(trajectory.final_state.values, start.values)

    @pytest.mark.unit
    def test_tiny_horizon(self, model, benchmark_params):
        start = model.default_initial_state(benchmark_params)
        trajectory = integrate(model.drift_function(benchmark_params), start, 1e-13)
        assert trajectory.times.tolist() == [0.0, 1e-13]
        assert np.allclose(trajectory.final_state.values, start.values, rtol=0.0, atol=1e-12)

    @pytest.mark.unit
    def test_states_follow_samples(self, model, benchmark_params):
        start = model.default_initial_state(benchmark_params)
        trajectory = integrate(model.drift_function(benchmark_params), start, 2.0, step=0.01,
                               sample_every=1.0)
        states = trajectory.states
        assert len(states) == 3
        assert all(state.model_class is ModelClass.NON_SEGMENTED for state in states)
        assert np.array_equal(states[-1].values, trajectory.final_state.values)

    @pytest.mark.unit
    def test_constraints_conserved(self, three_asset_params):
        model = NonSegmentedModel()
        start = model.default_initial_state(three_asset_params)
        trajectory = integrate(model.drift_function(three_asset_params), start, 100.0,
                               step=0.01, sample_every=1.0)
        for row in trajectory.values:
            assert np.max(np.abs(constraint_residuals(three_asset_params, row))) < 1e-9

    @pytest.mark.unit
    def test_converges_to_benchmark(self, model, benchmark_params, benchmark_root):
        trajectory = integrate(partial(rhs_nonsegmented, benchmark_params),
                               model.default_initial_state(benchmark_params), 60.0, step=0.01)
        assert trajectory.final_state.values[0] == pytest.approx(benchmark_root, abs=1e-8)

    @pytest.mark.unit
    def test_heterogeneous_supply_conserved(self, mixed_heterogeneous_params):
        model = HeterogeneousModel()
        start = model.default_initial_state(mixed_heterogeneous_params)
        trajectory = integrate(model.drift_function(mixed_heterogeneous_params), start, 50.0,
                               step=0.01, sample_every=5.0)
        for row in trajectory.values:
            assert np.max(np.abs(constraint_residuals(mixed_heterogeneous_params, row))) < 1e-9

    @pytest.mark.unit
    def test_invalid_initial_sum(self, model, benchmark_params):
        bad = StateDistribution(ModelClass.NON_SEGMENTED, [0.5, 0.5, 0.1, 0.1])
        with pytest.raises(InvalidInitialState, match="sums to"):
            integrate(model.drift_function(benchmark_params), bad, 1.0)

    @pytest.mark.unit
    def test_invalid_initial_constraints(self, model, benchmark_params):
        bad = StateDistribution(ModelClass.NON_SEGMENTED, [0.4, 0.5, 0.05, 0.05])
        with pytest.raises(InvalidInitialState):
            integrate(model.drift_function(benchmark_params), bad, 1.0, params=benchmark_params)

    @pytest.mark.unit
    def test_raw_vector_needs_params(self, model, benchmark_params):
        with pytest.raises(InvalidInitialState, match="needs params"):
            integrate(model.drift_function(benchmark_params), [0.0, 0.8, 0.0, 0.2], 1.0)

    @pytest.mark.unit
    def test_raw_vector_with_params(self, model, benchmark_params):
        trajectory = integrate(model.drift_function(benchmark_params), [0.0, 0.8, 0.0, 0.2], 1.0,
                               step=0.01, params=benchmark_params)
        assert trajectory.model_class is ModelClass.NON_SEGMENTED

    @pytest.mark.unit
    def test_step_too_large(self, benchmark_params):
        fast = benchmark_params.__class__(K=1, lam=[1.0], gamma_u=500.0, gamma_d=500.0,
                                          gamma_ui=[1.0], gamma_di=[1.0], m=[0.2])
        model = NonSegmentedModel()
        with pytest.raises(StepTooLarge, match="reduce the step"):
            integrate(model.drift_function(fast), model.default_initial_state(fast), 10.0,
                      step=0.1, sample_every=1.0)

    @pytest.mark.unit
    def test_invalid_step(self, model, benchmark_params):
        with pytest.raises(ValueError, match="Step must be positive"):
            integrate(model.drift_function(benchmark_params),
                      model.default_initial_state(benchmark_params), 1.0, step=0.0)


class TestRelaxToSteady:
    """Tests for relax_to_steady."""

    @pytest.mark.unit
    def test_benchmark_relaxation(self, benchmark_params, benchmark_root):
        model = NonSegmentedModel()
        report = relax_to_steady(model.drift_function(benchmark_params),
                                 model.default_initial_state(benchmark_params),
                                 tol=1e-10, step=0.01)
        assert report.converged
        assert report.residual_inf_norm <= 1e-10
        assert report.final_state.values[0] == pytest.approx(benchmark_root, abs=1e-8)
        assert report.elapsed_model_time == pytest.approx(report.steps * 0.01)

    @pytest.mark.unit
    def test_budget_exhausted(self, benchmark_params):
        model = NonSegmentedModel()
        report = relax_to_steady(model.drift_function(benchmark_params),
                                 model.default_initial_state(benchmark_params),
                                 tol=1e-10, t_max=0.5, step=0.01)
        assert not report.converged
        assert report.steps == 50

    @pytest.mark.unit
    def test_already_steady(self, benchmark_params, benchmark_root):
        x = benchmark_root
        low = 0.2 / (x + 2.0)
        start = StateDistribution(ModelClass.NON_SEGMENTED, [x, 0.8 - x, 0.2 - low, low])
        report = relax_to_steady(partial(rhs_nonsegmented, benchmark_params), start, tol=1e-10)
        assert report.converged
        assert report.steps == 0

    @pytest.mark.unit
    def test_segmented_relaxation(self, segmented_params):
        model = PartiallySegmentedModel()
        report = relax_to_steady(model.drift_function(segmented_params),
                                 model.default_initial_state(segmented_params),
                                 tol=1e-10, step=0.01)
        assert report.converged
        assert report.final_state.model_class is ModelClass.PARTIALLY_SEGMENTED

    @pytest.mark.unit
    def test_invalid_tolerance(self, benchmark_params):
        model = NonSegmentedModel()
        with pytest.raises(ValueError, match="Tolerance must be positive"):
            relax_to_steady(model.drift_function(benchmark_params),
                            model.default_initial_state(benchmark_params), tol=0.0)


class TestConvergenceOrder:
    """Tests for the order of the fixed-step scheme."""

    @staticmethod
    def _decay_error(h: float) -> float:
        y = np.array([1.0])
        for _ in range(int(round(1.0 / h))):
            y = rk4_step(lambda v: -v, y, h)
        return abs(float(y[0]) - np.exp(-1.0))

    @pytest.mark.slow
    def test_halving_the_step_on_linear_decay(self):
        errors = [self._decay_error(h) for h in (0.1, 0.05, 0.025)]
        assert errors[0] / errors[1] == pytest.approx(16.0, rel=0.1)
        assert errors[1] / errors[2] == pytest.approx(16.0, rel=0.1)

    @pytest.mark.slow
    def test_halving_the_step_on_benchmark(self, benchmark_params):
        model = NonSegmentedModel()
        drift = model.drift_function(benchmark_params)
        start = model.default_initial_state(benchmark_params)
        reference = integrate(drift, start, 2.0, step=0.025).final_state.values
        coarse = integrate(drift, start, 2.0, step=0.2).final_state.values
        fine = integrate(drift, start, 2.0, step=0.1).final_state.values
        ratio = np.max(np.abs(coarse - reference)) / np.max(np.abs(fine - reference))
        assert ratio >= 8.0
