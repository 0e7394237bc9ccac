"""
Route a parameter record to the solver of its market class.
"""

from typing import Optional, Union

from src.markets.params import HeterogeneousParams, MarketParams, NonSegmentedParams
from src.steady.heterogeneous import solve_heterogeneous
from src.steady.nonsegmented import solve_nonsegmented
from src.steady.partially_segmented import solve_partially_segmented
from src.steady.results import NoSteadyState, SteadySolution


def solve_steady(params: MarketParams, tol: Optional[float] = None,
                 **options) -> Union[SteadySolution, NoSteadyState]:
    """
    Solve for the steady state of any market class.

    Args:
        params: Parameter record
        tol: Solver tolerance; each solver's default when None
        **options: Passed through to the class-specific solver

    Returns:
        SteadySolution, or NoSteadyState for a heterogeneous market without one
    """
    kwargs = dict(options)
    if tol is not None:
        kwargs['tol'] = tol
    if isinstance(params, NonSegmentedParams):
        return solve_nonsegmented(params, **kwargs)
    if isinstance(params, HeterogeneousParams):
        return solve_heterogeneous(params, **kwargs)
    return solve_partially_segmented(params, **kwargs)
