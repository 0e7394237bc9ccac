"""
Exact event-driven simulation of the finite-N investor population.

Investors are exchangeable, so the population is tracked by its counts per
state. Autonomous switches fire per investor at their tabulated rates; each
unordered pair of investors compatible for a trade meets at rate lambda/N,
which recovers the quadratic mean-field terms lambda mu mu as N grows.
The random source is numpy's PCG64 bit generator seeded through a
SeedSequence, so a (params, N, initial, seed) tuple fixes the event
sequence bit for bit.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.markets.kernel import transaction_scheme
from src.markets.params import HeterogeneousParams, MarketParams
from src.markets.state import ModelClass, StateDistribution, model_class_of, owner_slices, state_labels
from src.ode.integrator import sample_times as sampling_grid

logger = logging.getLogger(__name__)

GENERATOR_NAME = 'numpy.random.PCG64'
RANDOM_BLOCK = 4096
INITIAL_TOLERANCE = 1e-9
HOLDINGS = np.array([0, 1, 2, 0, 1, 2])


class SimulationError(Exception):
    """Base exception for the particle simulator."""
    pass


class InfeasibleInitial(SimulationError):
    """The initial population cannot satisfy the market constraints."""
    pass


class GridMismatch(SimulationError):
    """A simulation and an ODE trajectory do not share a model or time grid."""
    pass


@dataclass(frozen=True, eq=False)
class Population:
    """Finite roster of N investors, stored as counts per state."""

    model_class: ModelClass
    labels: List[str]
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64).copy()
        if counts.shape != (len(self.labels),):
            raise InfeasibleInitial(f"Expected {len(self.labels)} counts, got shape {counts.shape}")
        if np.any(counts < 0):
            raise InfeasibleInitial(f"Counts must be nonnegative, got {counts.tolist()}")
        counts.setflags(write=False)
        object.__setattr__(self, 'counts', counts)
        object.__setattr__(self, 'model_class', ModelClass.parse(self.model_class))

    @property
    def N(self) -> int:
        return int(np.sum(self.counts))

    @property
    def holdings(self) -> int:
        """Ticks held in total (heterogeneous markets only)."""
        if self.model_class is not ModelClass.HETEROGENEOUS:
            raise ValueError("Holdings are defined for heterogeneous markets only")
        return int(np.dot(HOLDINGS, self.counts))

    @classmethod
    def from_states(cls, params: MarketParams, states: Sequence[str]) -> 'Population':
        """Build a population from one state label per investor."""
        labels = state_labels(params)
        index = {label: i for i, label in enumerate(labels)}
        counts = np.zeros(len(labels), dtype=np.int64)
        for state in states:
            if state not in index:
                raise InfeasibleInitial(f"Unknown state label '{state}'")
            counts[index[state]] += 1
        return cls(model_class_of(params), labels, counts)


@dataclass(frozen=True, eq=False)
class SimulationResult:
    """Empirical proportions of one simulated run on its sampling grid."""

    model_class: ModelClass
    labels: List[str]
    N: int
    sample_times: np.ndarray
    counts: np.ndarray
    event_count: int
    seed: int
    last_event_time: float = 0.0
    truncated: bool = False
    metadata: Dict[str, object] = field(default_factory=dict)

    @property
    def empirical(self) -> np.ndarray:
        return self.counts / float(self.N)

    @property
    def snapshots(self) -> List[StateDistribution]:
        return [StateDistribution(self.model_class, row) for row in self.empirical]


@dataclass(frozen=True, eq=False)
class MeanFieldComparison:
    sup_distance: float
    per_time: np.ndarray
    per_component: np.ndarray
    sample_times: np.ndarray


def _largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    """Integers proportional to weights that sum to total."""
    weights = np.clip(np.asarray(weights, dtype=float), 0.0, None)
    if total == 0:
        return np.zeros(weights.size, dtype=np.int64)
    if weights.sum() <= 0:
        weights = np.ones(weights.size)
    exact = weights / weights.sum() * total
    base = np.floor(exact).astype(np.int64)
    remainder = int(total - base.sum())
    if remainder > 0:
        order = np.argsort(-(exact - base), kind='stable')
        base[order[:remainder]] += 1
    return base


def _round_binary(params, values: np.ndarray, N: int) -> np.ndarray:
    high, low = owner_slices(params)
    nonowner = np.setdiff1d(np.arange(values.size), np.concatenate([high, low]))
    groups = [nonowner] + [np.array([h, l]) for h, l in zip(high, low)]
    group_totals = _largest_remainder([values[g].sum() for g in groups], N)
    counts = np.zeros(values.size, dtype=np.int64)
    for g, total in zip(groups, group_totals):
        counts[g] = _largest_remainder(values[g], int(total))
    return counts


def _round_heterogeneous(params: HeterogeneousParams, values: np.ndarray, N: int) -> np.ndarray:
    target = int(round(N * params.s))
    if target > 2 * N:
        raise InfeasibleInitial(f"Supply {params.s} needs {target} ticks, more than 2N={2 * N}")
    per_class = values[:3] + values[3:]
    n = _largest_remainder(per_class, N)
    # Move investors between adjacent holding classes until the ticks match round(N s).
    held = int(n[1] + 2 * n[2])
    while held < target:
        source = 0 if n[0] > 0 else 1
        n[source] -= 1
        n[source + 1] += 1
        held += 1
    while held > target:
        source = 2 if n[2] > 0 else 1
        n[source] -= 1
        n[source - 1] += 1
        held -= 1
    counts = np.zeros(6, dtype=np.int64)
    for k in range(3):
        split = np.array([values[k], values[k + 3]])
        counts[[k, k + 3]] = _largest_remainder(split, int(n[k]))
    return counts


def initial_population(params: MarketParams, N: int, initial) -> Population:
    """
    Round a distribution to an N-investor population respecting the constraints.

    Non-owners and each asset's owners are rounded as groups first, so the
    owner counts of asset i are the largest-remainder share of N m_i.
    Heterogeneous holdings are repaired to round(N s) ticks by moving
    investors between adjacent holding classes.

    Raises:
        InfeasibleInitial: If N < 2 or the distribution is not a valid state
    """
    if N < 2:
        raise InfeasibleInitial(f"Pair dynamics need N >= 2, got N={N}")
    labels = state_labels(params)
    model_class = model_class_of(params)

    if isinstance(initial, Population):
        if initial.model_class is not model_class or len(initial.labels) != len(labels):
            raise InfeasibleInitial("Initial population does not match the market class")
        if initial.N != N:
            raise InfeasibleInitial(f"Initial population has {initial.N} investors, expected {N}")
        return initial

    values = np.asarray(getattr(initial, 'values', initial), dtype=float)
    if values.shape != (len(labels),):
        raise InfeasibleInitial(f"Initial state has {values.size} components, expected {len(labels)}")
    if np.any(values < -INITIAL_TOLERANCE) or abs(float(values.sum()) - 1.0) > INITIAL_TOLERANCE:
        raise InfeasibleInitial(f"Initial state is not a distribution: {values.tolist()}")

    if model_class is ModelClass.HETEROGENEOUS:
        counts = _round_heterogeneous(params, values, N)
    else:
        counts = _round_binary(params, values, N)
    return Population(model_class, labels, counts)


class _RandomStream:
    """Block-buffered exponential and uniform draws from one generator."""

    def __init__(self, seed: int):
        self.rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        self._refill()

    def _refill(self):
        self.exponentials = self.rng.standard_exponential(RANDOM_BLOCK).tolist()
        self.uniforms = self.rng.random(RANDOM_BLOCK).tolist()
        self.position = 0

    def next_pair(self):
        if self.position == RANDOM_BLOCK:
            self._refill()
        pair = self.exponentials[self.position], self.uniforms[self.position]
        self.position += 1
        return pair


def simulate(model_class, params: MarketParams, N: int, initial, t_end: float,
             sample_every: float, seed: int, max_events: Optional[int] = None) -> SimulationResult:
    """
    Run one exact stochastic simulation of the N-investor market.

    Args:
        model_class: Market class tag (must match params)
        params: Parameter record
        N: Number of investors (>= 2)
        initial: Population, StateDistribution or raw vector
        t_end: Final time
        sample_every: Sampling interval of the snapshots
        seed: Seed of the random stream
        max_events: Optional event budget; the run is marked truncated when hit

    Returns:
        SimulationResult with counts sampled on 0, sample_every, ..., t_end

    Raises:
        InfeasibleInitial: If the initial population is infeasible
    """
    model_class = ModelClass.parse(model_class)
    if model_class is not model_class_of(params):
        raise SimulationError(f"Model class {model_class.value} does not match {type(params).__name__}")
    if sample_every <= 0 or t_end < 0:
        raise ValueError("Need t_end >= 0 and sample_every > 0")

    population = initial_population(params, N, initial)
    scheme = transaction_scheme(params)
    times = sampling_grid(t_end, sample_every) if t_end > 0 else np.array([0.0])

    switches = [(s.src, s.dst, s.rate) for s in scheme.switches if s.rate > 0]
    trades = [(tr.first_src, tr.first_dst, tr.second_src, tr.second_dst, tr.rate / N)
              for tr in scheme.trades if tr.rate > 0]

    counts = population.counts.astype(np.int64).tolist()
    samples = np.empty((times.size, len(counts)), dtype=np.int64)
    stream = _RandomStream(seed)

    t = 0.0
    next_sample = 0
    events = 0
    last_event = 0.0
    truncated = False
    while next_sample < times.size:
        propensities = [rate * counts[src] for src, _, rate in switches]
        propensities += [rate * counts[a] * counts[b] for a, _, b, _, rate in trades]
        total = math.fsum(propensities)
        exponential, uniform = stream.next_pair()
        t_next = t + exponential / total if total > 0 else math.inf

        while next_sample < times.size and times[next_sample] < t_next:
            samples[next_sample] = counts
            next_sample += 1
        if next_sample == times.size:
            break
        if max_events is not None and events >= max_events:
            truncated = True
            samples[next_sample:] = counts
            break

        threshold = uniform * total
        cumulative = 0.0
        chosen = len(propensities) - 1
        for k, p in enumerate(propensities):
            cumulative += p
            if threshold < cumulative:
                chosen = k
                break

        if chosen < len(switches):
            src, dst, _ = switches[chosen]
            counts[src] -= 1
            counts[dst] += 1
        else:
            a, a_dst, b, b_dst, _ = trades[chosen - len(switches)]
            counts[a] -= 1
            counts[a_dst] += 1
            counts[b] -= 1
            counts[b_dst] += 1
        t = t_next
        last_event = t
        events += 1

    logger.debug(f"Simulated N={N} to t={t_end:g}: {events} events (seed {seed})")
    return SimulationResult(
        model_class=model_class,
        labels=list(population.labels),
        N=N,
        sample_times=times,
        counts=samples,
        event_count=events,
        seed=seed,
        last_event_time=last_event,
        truncated=truncated,
        metadata={'generator': GENERATOR_NAME, 'numpy_version': np.__version__},
    )


def empirical_distribution(pop: Population) -> StateDistribution:
    """Proportions counts/N of a population."""
    return StateDistribution(pop.model_class, pop.counts / float(pop.N))


def empirical_constraints(params: MarketParams, pop: Population) -> Dict[str, object]:
    """Constraint values carried by a finite population (owner masses or supply)."""
    N = pop.N
    if pop.model_class is ModelClass.HETEROGENEOUS:
        return {'supply': pop.holdings / N}
    high, low = owner_slices(params)
    return {'m': ((pop.counts[high] + pop.counts[low]) / N).tolist()}


def compare_to_meanfield(sim: SimulationResult, ode) -> MeanFieldComparison:
    """
    Sup-distance between an empirical run and an ODE trajectory.

    Args:
        sim: SimulationResult
        ode: Trajectory on the same sampling grid

    Returns:
        MeanFieldComparison with the overall sup, per-time and per-component maxima

    Raises:
        GridMismatch: If the model classes, dimensions or time grids differ
    """
    if ode.model_class is not None and ModelClass.parse(ode.model_class) is not sim.model_class:
        raise GridMismatch(f"Simulation is {sim.model_class.value}, trajectory is {ode.model_class}")
    if ode.values.shape != sim.counts.shape:
        raise GridMismatch(f"Shapes differ: simulation {sim.counts.shape}, trajectory {ode.values.shape}")
    if not np.allclose(ode.times, sim.sample_times, rtol=0.0, atol=1e-9):
        raise GridMismatch("Sampling times differ between simulation and trajectory")

    distance = np.abs(sim.empirical - ode.values)
    per_time = distance.max(axis=1)
    return MeanFieldComparison(
        sup_distance=float(per_time.max()),
        per_time=per_time,
        per_component=distance.max(axis=0),
        sample_times=sim.sample_times.copy(),
    )


def replicate(model_class, params: MarketParams, N: int, initial, t_end: float,
              sample_every: float, seeds: Sequence[int]) -> List[SimulationResult]:
    """Independent runs, one per seed."""
    return [simulate(model_class, params, N, initial, t_end, sample_every, seed) for seed in seeds]

