"""
Transaction schemes and per-investor transition kernels.

A transaction scheme lists the autonomous liquidity switches and the pairwise
trades of a market class. The same scheme feeds the intensity kernel
m(s, from; to) evaluated at a distribution, and the finite-population
simulator in `src.simulation`.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from src.markets.params import (HeterogeneousParams, MarketParams, NonSegmentedParams,
                                PartiallySegmentedParams)
from src.markets.state import ModelClass, check_dimension, model_class_of, state_labels

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Switch:
    """Autonomous move of one investor from `src` to `dst` at `rate`."""

    src: int
    dst: int
    rate: float


@dataclass(frozen=True)
class Trade:
    """A meeting between an investor in `first_src` and one in `second_src`.

    `rate` is the meeting intensity coefficient: in the mean-field limit the
    flow is rate * mu(first_src) * mu(second_src). Both investors move.
    """

    first_src: int
    first_dst: int
    second_src: int
    second_dst: int
    rate: float
    name: str = ''


@dataclass(frozen=True)
class TransactionScheme:
    model_class: ModelClass
    labels: List[str]
    switches: List[Switch] = field(default_factory=list)
    trades: List[Trade] = field(default_factory=list)

    def index(self, label: str) -> int:
        return self.labels.index(label)


def _binary_scheme(params, buyer_index, nonowner_low, model_class) -> TransactionScheme:
    labels = state_labels(params)
    offset = 2 if model_class is ModelClass.NON_SEGMENTED else params.K + 1
    switches = []
    trades = []
    for i in range(params.K):
        high_o, low_o = offset + 2 * i, offset + 2 * i + 1
        buyer = buyer_index(i)
        switches.append(Switch(low_o, high_o, float(params.gamma_ui[i])))
        switches.append(Switch(high_o, low_o, float(params.gamma_di[i])))
        trades.append(Trade(buyer, high_o, low_o, nonowner_low, float(params.lam[i]),
                            name=f'asset{i + 1}'))
    return TransactionScheme(model_class, labels, switches, trades)


def transaction_scheme(params: MarketParams) -> TransactionScheme:
    """
    Build the transaction scheme of a market.

    Args:
        params: Parameter record of any class

    Returns:
        TransactionScheme indexed in the market's state layout
    """
    model_class = model_class_of(params)

    if model_class is ModelClass.NON_SEGMENTED:
        scheme = _binary_scheme(params, lambda i: 0, 1, model_class)
        scheme.switches.extend([
            Switch(1, 0, params.gamma_u),
            Switch(0, 1, params.gamma_d),
        ])
        return scheme

    if model_class is ModelClass.PARTIALLY_SEGMENTED:
        K = params.K
        scheme = _binary_scheme(params, lambda i: i, K, model_class)
        for i in range(K):
            scheme.switches.extend([
                Switch(K, i, float(params.gamma_tilde_ui[i])),
                Switch(i, K, float(params.gamma_tilde_di[i])),
            ])
        return scheme

    # heterogeneous: h,0 h,1 h,2 l,0 l,1 l,2 -> 0..5
    lam = params.lam
    switches = []
    for i in range(3):
        switches.append(Switch(i, 3 + i, float(params.c[i])))
        switches.append(Switch(3 + i, i, float(params.d[i])))
    trades = [
        Trade(0, 1, 4, 3, lam, name='h0_l1'),
        Trade(1, 2, 4, 3, lam, name='h1_l1'),
        Trade(1, 2, 5, 4, lam, name='h1_l2'),
        Trade(0, 1, 5, 4, lam * params.a, name='h0_l2_a'),
        Trade(0, 2, 5, 3, lam * params.b, name='h0_l2_b'),
    ]
    return TransactionScheme(model_class, list(state_labels(params)), switches, trades)


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    """Per-investor transition rates evaluated at one distribution."""

    labels: List[str]
    entries: Dict[Tuple[str, str], float]

    def rate(self, src: str, dst: str) -> float:
        """Rate from `src` to `dst`; pairs absent from the table have rate 0."""
        if src not in self.labels or dst not in self.labels:
            raise KeyError(f"Unknown transition {src} -> {dst}")
        return self.entries.get((src, dst), 0.0)

    def matrix(self) -> np.ndarray:
        """Off-diagonal rate matrix Q[i, j] = rate(labels[i], labels[j])."""
        position = {label: i for i, label in enumerate(self.labels)}
        q = np.zeros((len(self.labels), len(self.labels)))
        for (src, dst), value in self.entries.items():
            q[position[src], position[dst]] += value
        return q

    def drift(self, mu) -> np.ndarray:
        """Mean-field drift: inflow minus outflow of rate-weighted mass."""
        values = np.asarray(getattr(mu, 'values', mu), dtype=float)
        q = self.matrix()
        return values @ q - values * q.sum(axis=1)


def kernel(model_class, params: MarketParams, mu) -> TransitionKernel:
    """
    Evaluate the intensity kernel m(s, from; to) of a market at a distribution.

    Args:
        model_class: Market class tag (must match params)
        params: Parameter record
        mu: StateDistribution or raw vector

    Returns:
        TransitionKernel holding every tabulated (from, to) rate
    """
    model_class = ModelClass.parse(model_class)
    if model_class is not model_class_of(params):
        raise ValueError(
            f"Model class {model_class.value} does not match {type(params).__name__}"
        )
    values = check_dimension(params, mu)
    scheme = transaction_scheme(params)
    labels = scheme.labels
    entries: Dict[Tuple[str, str], float] = {}

    def add(src: int, dst: int, value: float) -> None:
        key = (labels[src], labels[dst])
        entries[key] = entries.get(key, 0.0) + float(value)

    for switch in scheme.switches:
        add(switch.src, switch.dst, switch.rate)
    for trade in scheme.trades:
        add(trade.first_src, trade.first_dst, trade.rate * values[trade.second_src])
        add(trade.second_src, trade.second_dst, trade.rate * values[trade.first_src])

    return TransitionKernel(labels=list(labels), entries=entries)
