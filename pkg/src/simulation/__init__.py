"""
Finite-population stochastic simulation of the market classes.
"""

from .particles import (GridMismatch, InfeasibleInitial, MeanFieldComparison, Population,
                        SimulationError, SimulationResult, compare_to_meanfield,
                        empirical_distribution, initial_population, replicate, simulate)

__all__ = [
    'Population',
    'SimulationResult',
    'MeanFieldComparison',
    'simulate',
    'replicate',
    'initial_population',
    'empirical_distribution',
    'compare_to_meanfield',
    'SimulationError',
    'InfeasibleInitial',
    'GridMismatch',
]
