"""
Right-hand sides of the Master Equations of the three market classes.

Each `rhs_*` function takes a parameter record and a state (a
StateDistribution or a raw vector in the layout documented in
`src.markets.state`) and returns the time derivative of every component.
The derivatives are assembled from shared flow terms so that mass and the
linear constraints are conserved term by term.
"""

import numpy as np

from src.markets.params import HeterogeneousParams, NonSegmentedParams, PartiallySegmentedParams
from src.markets.state import check_dimension


def nonsegmented_drift(params: NonSegmentedParams, values: np.ndarray) -> np.ndarray:
    """Unchecked drift of the non-segmented market (hot path of the integrator)."""
    hn, ln = values[0], values[1]
    high, low = values[2::2], values[3::2]

    trade = params.lam * hn * low
    owner_flow = params.gamma_ui * low - params.gamma_di * high

    d_hn = -np.sum(trade) + (params.gamma_u * ln - params.gamma_d * hn)
    d_high = trade + owner_flow

    out = np.empty_like(values)
    out[0] = d_hn
    out[1] = -d_hn
    out[2::2] = d_high
    out[3::2] = -d_high
    return out


def partially_segmented_drift(params: PartiallySegmentedParams, values: np.ndarray) -> np.ndarray:
    """Unchecked drift of the partially segmented market."""
    K = params.K
    buyers, ln = values[:K], values[K]
    high, low = values[K + 1::2], values[K + 2::2]

    trade = params.lam * buyers * low
    owner_flow = params.gamma_ui * low - params.gamma_di * high

    d_buyers = -trade + (params.gamma_tilde_ui * ln - params.gamma_tilde_di * buyers)
    d_high = trade + owner_flow

    out = np.empty_like(values)
    out[:K] = d_buyers
    out[K] = -np.sum(d_buyers)
    out[K + 1::2] = d_high
    out[K + 2::2] = -d_high
    return out


def heterogeneous_flows(params: HeterogeneousParams, values: np.ndarray):
    """Trade flows and net h->l switching flows of the heterogeneous market."""
    x, y, z, u, v, w = values
    lam = params.lam
    trades = {
        'h0_l1': lam * x * v,
        'h1_l1': lam * y * v,
        'h1_l2': lam * y * w,
        'h0_l2_a': lam * params.a * x * w,
        'h0_l2_b': lam * params.b * x * w,
    }
    switches = params.c * np.array([x, y, z]) - params.d * np.array([u, v, w])
    return trades, switches


def heterogeneous_drift(params: HeterogeneousParams, values: np.ndarray) -> np.ndarray:
    """Unchecked drift of the heterogeneous-position market."""
    t, sw = heterogeneous_flows(params, values)
    return np.array([
        -t['h0_l1'] - t['h0_l2_a'] - t['h0_l2_b'] - sw[0],
        t['h0_l1'] + t['h0_l2_a'] - t['h1_l1'] - t['h1_l2'] - sw[1],
        t['h0_l2_b'] + t['h1_l1'] + t['h1_l2'] - sw[2],
        t['h0_l1'] + t['h0_l2_b'] + t['h1_l1'] + sw[0],
        t['h0_l2_a'] - t['h0_l1'] + t['h1_l2'] - t['h1_l1'] + sw[1],
        -t['h0_l2_a'] - t['h0_l2_b'] - t['h1_l2'] + sw[2],
    ])


def rhs_nonsegmented(params: NonSegmentedParams, mu) -> np.ndarray:
    """
    Time derivative of the non-segmented Master Equation.

    Args:
        params: Non-segmented rates and masses
        mu: State in the layout (h,n), (l,n), (h1,o), (l1,o), ...

    Returns:
        Derivative vector of length 2K+2

    Raises:
        DimensionMismatch: If mu does not have 2K+2 components
    """
    values = np.asarray(check_dimension(params, mu), dtype=float)
    return nonsegmented_drift(params, values)


def rhs_partially_segmented(params: PartiallySegmentedParams, mu) -> np.ndarray:
    """
    Time derivative of the partially segmented Master Equation.

    Args:
        params: Partially segmented rates and masses
        mu: State in the layout (h1,n), ..., (hK,n), (l,n), (h1,o), (l1,o), ...

    Returns:
        Derivative vector of length 3K+1

    Raises:
        DimensionMismatch: If mu does not have 3K+1 components
    """
    values = np.asarray(check_dimension(params, mu), dtype=float)
    return partially_segmented_drift(params, values)


def rhs_heterogeneous(params: HeterogeneousParams, mu) -> np.ndarray:
    """
    Time derivative of the heterogeneous-position Master Equation.

    The (h,0)+(l,1) trade enters the (h,1) equation as lam*x*v and the
    (l,2) equation loses lam*x*w at the full rate (a + b = 1). lam multiplies
    every quadratic term, so a change of time maps (lam, c, d) to
    (1, c/lam, d/lam) with the same steady states.

    Args:
        params: Heterogeneous rates, split and supply
        mu: State (x, y, z, u, v, w) = ((h,0), (h,1), (h,2), (l,0), (l,1), (l,2))

    Returns:
        Derivative vector of length 6

    Raises:
        DimensionMismatch: If mu does not have 6 components
    """
    values = np.asarray(check_dimension(params, mu), dtype=float)
    return heterogeneous_drift(params, values)
