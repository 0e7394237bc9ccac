"""
Tests for the finite-N particle simulation.
"""

import numpy as np
import pytest

from src.markets.models import HeterogeneousModel, NonSegmentedModel, PartiallySegmentedModel
from src.markets.params import NonSegmentedParams
from src.markets.state import ModelClass
from src.ode.integrator import integrate
from src.simulation.particles import (GridMismatch, InfeasibleInitial, Population,
                                      SimulationError, compare_to_meanfield,
                                      empirical_constraints, empirical_distribution,
                                      initial_population, replicate, simulate)


class TestInitialPopulation:
    """Tests for rounding a distribution to N investors."""

    @pytest.mark.unit
    def test_owner_counts_match_masses(self, three_asset_params):
        start = NonSegmentedModel().default_initial_state(three_asset_params)
        population = initial_population(three_asset_params, 1000, start)
        assert population.N == 1000
        owners = empirical_constraints(three_asset_params, population)['m']
        assert owners == pytest.approx([0.15, 0.1, 0.2])

    @pytest.mark.unit
    def test_rounding_keeps_total(self, segmented_params):
        start = PartiallySegmentedModel().default_initial_state(segmented_params)
        population = initial_population(segmented_params, 37, start)
        assert population.N == 37
        assert population.model_class is ModelClass.PARTIALLY_SEGMENTED

    @pytest.mark.unit
    def test_heterogeneous_ticks(self, counterexample):
        params = counterexample(1.75)
        start = HeterogeneousModel().default_initial_state(params)
        population = initial_population(params, 101, start)
        assert population.N == 101
        assert population.holdings == round(101 * 1.75)

    @pytest.mark.unit
    def test_too_few_investors(self, benchmark_params):
        start = NonSegmentedModel().default_initial_state(benchmark_params)
        with pytest.raises(InfeasibleInitial, match="N >= 2"):
            initial_population(benchmark_params, 1, start)

    @pytest.mark.unit
    def test_not_a_distribution(self, benchmark_params):
        with pytest.raises(InfeasibleInitial, match="not a distribution"):
            initial_population(benchmark_params, 10, [0.5, 0.5, 0.5, 0.0])

    @pytest.mark.unit
    def test_from_states(self, benchmark_params):
        population = Population.from_states(benchmark_params, ['h,n', 'l,n', 'l,n', 'l1,o'])
        assert population.counts.tolist() == [1, 2, 0, 1]
        assert empirical_distribution(population).values.tolist() == [0.25, 0.5, 0.0, 0.25]

    @pytest.mark.unit
    def test_unknown_state_label(self, benchmark_params):
        with pytest.raises(InfeasibleInitial, match="Unknown state label"):
            Population.from_states(benchmark_params, ['h,n', 'x,o'])

    @pytest.mark.unit
    def test_population_size_mismatch(self, benchmark_params):
        population = Population.from_states(benchmark_params, ['h,n', 'l,n', 'l1,o'])
        with pytest.raises(InfeasibleInitial, match="expected 10"):
            initial_population(benchmark_params, 10, population)


class TestSimulate:
    """Tests for simulate."""

    @pytest.fixture
    def start(self, benchmark_params):
        return NonSegmentedModel().default_initial_state(benchmark_params)

    @pytest.mark.unit
    def test_same_seed_same_run(self, benchmark_params, start):
        first = simulate('non-segmented', benchmark_params, 200, start, 5.0, 1.0, seed=42)
        second = simulate('non-segmented', benchmark_params, 200, start, 5.0, 1.0, seed=42)
        assert np.array_equal(first.counts, second.counts)
        assert first.event_count == second.event_count

    @pytest.mark.unit
    def test_different_seeds_differ(self, benchmark_params, start):
        first = simulate('non-segmented', benchmark_params, 200, start, 5.0, 1.0, seed=1)
        second = simulate('non-segmented', benchmark_params, 200, start, 5.0, 1.0, seed=2)
        assert not np.array_equal(first.counts, second.counts)

    @pytest.mark.unit
    def test_sampling_grid_and_shapes(self, benchmark_params, start):
        result = simulate('non-segmented', benchmark_params, 100, start, 3.0, 0.5, seed=7)
        assert result.sample_times.tolist() == [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
        assert result.counts.shape == (7, 4)
        assert np.all(result.counts.sum(axis=1) == 100)
        assert result.metadata['generator'] == 'numpy.random.PCG64'

    @pytest.mark.unit
    def test_owner_counts_never_change(self, three_asset_params):
        start = NonSegmentedModel().default_initial_state(three_asset_params)
        result = simulate(ModelClass.NON_SEGMENTED, three_asset_params, 300, start, 10.0, 1.0,
                          seed=5)
        owners = result.counts[:, 2::2] + result.counts[:, 3::2]
        assert np.all(owners == owners[0])

    @pytest.mark.unit
    def test_heterogeneous_ticks_conserved(self, mixed_heterogeneous_params):
        start = HeterogeneousModel().default_initial_state(mixed_heterogeneous_params)
        result = simulate('heterogeneous', mixed_heterogeneous_params, 200, start, 10.0, 1.0,
                          seed=9)
        ticks = result.counts @ np.array([0, 1, 2, 0, 1, 2])
        assert np.all(ticks == 200)

    @pytest.mark.unit
    def test_initial_sample_is_initial_population(self, benchmark_params, start):
        result = simulate('non-segmented', benchmark_params, 50, start, 2.0, 1.0, seed=3)
        assert result.counts[0].tolist() == [0, 40, 0, 10]

    @pytest.mark.unit
    def test_event_budget(self, benchmark_params, start):
        result = simulate('non-segmented', benchmark_params, 200, start, 50.0, 1.0, seed=4,
                          max_events=10)
        assert result.truncated
        assert result.event_count == 10

    @pytest.mark.unit
    def test_class_mismatch(self, benchmark_params, start):
        with pytest.raises(SimulationError, match="does not match"):
            simulate('heterogeneous', benchmark_params, 10, start, 1.0, 1.0, seed=1)

    @pytest.mark.unit
    def test_replicate_uses_each_seed(self, benchmark_params, start):
        runs = replicate('non-segmented', benchmark_params, 50, start, 2.0, 1.0, seeds=[1, 2, 3])
        assert [run.seed for run in runs] == [1, 2, 3]


class TestMeanFieldComparison:
    """Tests for compare_to_meanfield."""

    @pytest.mark.unit
    def test_grid_mismatch(self, benchmark_params):
        model = NonSegmentedModel()
        start = model.default_initial_state(benchmark_params)
        sim = simulate('non-segmented', benchmark_params, 50, start, 4.0, 1.0, seed=1)
        ode = integrate(model.drift_function(benchmark_params), start, 4.0, step=0.01,
                        sample_every=2.0)
        with pytest.raises(GridMismatch):
            compare_to_meanfield(sim, ode)

    @pytest.mark.unit
    def test_distance_at_time_zero(self, benchmark_params):
        model = NonSegmentedModel()
        start = model.default_initial_state(benchmark_params)
        sim = simulate('non-segmented', benchmark_params, 50, start, 2.0, 1.0, seed=1)
        ode = integrate(model.drift_function(benchmark_params), start, 2.0, step=0.01,
                        sample_every=1.0)
        comparison = compare_to_meanfield(sim, ode)
        assert comparison.per_time[0] == pytest.approx(0.0, abs=1e-12)
        assert comparison.sup_distance == comparison.per_time.max()

    @pytest.mark.slow
    def test_large_population_tracks_meanfield(self, benchmark_params):
        model = NonSegmentedModel()
        start = model.default_initial_state(benchmark_params)
        sim = simulate('non-segmented', benchmark_params, 5000, start, 20.0, 1.0, seed=1)
        ode = integrate(model.drift_function(benchmark_params), start, 20.0, step=0.01,
                        sample_every=1.0)
        assert compare_to_meanfield(sim, ode).sup_distance <= 0.06


class TestSmallPopulations:
    """Exact event statistics with two investors."""

    @pytest.mark.slow
    def test_waiting_time_matches_rate(self, benchmark_params):
        # two non-owners with low valuation: only the gamma_u switch is enabled
        population = Population.from_states(benchmark_params, ['l,n', 'l,n'])
        waits = np.array([
            simulate('non-segmented', benchmark_params, 2, population, 1e6, 1e6, seed=seed,
                     max_events=1).last_event_time
            for seed in range(10000)
        ])
        expected = 1.0 / (2.0 * benchmark_params.gamma_u)
        standard_error = waits.std(ddof=1) / np.sqrt(waits.size)
        assert abs(waits.mean() - expected) <= 3.0 * standard_error

    @pytest.mark.slow
    def test_trade_wins_the_race(self):
        params = NonSegmentedParams(K=1, lam=[1.0], gamma_u=1e-9, gamma_d=1e-9,
                                    gamma_ui=[1e-9], gamma_di=[1e-9], m=[0.5])
        population = Population.from_states(params, ['h,n', 'l1,o'])
        waits = []
        for seed in range(2000):
            result = simulate('non-segmented', params, 2, population, 1e6, 1e6, seed=seed,
                              max_events=1)
            assert result.counts[-1].tolist() == [0, 1, 1, 0]
            waits.append(result.last_event_time)
        # one unordered pair meeting at lambda / N
        waits = np.array(waits)
        standard_error = waits.std(ddof=1) / np.sqrt(waits.size)
        assert abs(waits.mean() - 2.0) <= 3.0 * standard_error


class TestLawOfLargeNumbers:
    """Finite-N runs against the mean-field limit."""

    @pytest.mark.slow
    def test_terminal_buyers_near_steady_state(self, benchmark_params, benchmark_root):
        start = NonSegmentedModel().default_initial_state(benchmark_params)
        hits = 0
        for seed in range(20):
            sim = simulate('non-segmented', benchmark_params, 5000, start, 200.0, 200.0, seed=seed)
            hits += abs(sim.snapshots[-1].values[0] - benchmark_root) <= 0.042
        assert hits >= 19

    @pytest.mark.slow
    def test_sup_distance_shrinks_with_population(self, benchmark_params):
        model = NonSegmentedModel()
        start = model.default_initial_state(benchmark_params)
        ode = integrate(model.drift_function(benchmark_params), start, 20.0, step=0.01,
                        sample_every=1.0, params=benchmark_params)
        medians = []
        for N in (500, 1000, 2000, 4000):
            runs = replicate('non-segmented', benchmark_params, N, start, 20.0, 1.0,
                             seeds=range(20))
            medians.append(np.median([compare_to_meanfield(run, ode).sup_distance for run in runs]))
        assert all(later < earlier for earlier, later in zip(medians, medians[1:]))
