"""Operator side: pool building surplus, dispatch the feeder battery, bid, settle.

The battery charges only from pooled building surplus.  Bids are
quantity-only (the operator is a price taker) and equal whatever surplus
is not stored plus whatever is discharged.  Dispatch is found by dynamic
programming over a state-of-charge lattice.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from bvpp_sim.errors import GridMismatch, InfeasibleSpec, NegativeProfitWarning
from bvpp_sim.grid import check_same_grid

FEAS_TOL = 1e-9  # kW / kWh slack for lattice round-off
TIE_TOL = 1e-9  # $; DP ties resolve toward the lower state of charge


@dataclass(frozen=True)
class BessSpec:
    capacity: float
    max_charge: float
    max_discharge: float
    eta_c: float = 1.0
    eta_d: float = 1.0
    soc_min: float = 0.0
    soc_max: float | None = None
    soc_init: float | None = None

    def __post_init__(self):
        if self.soc_max is None:
            object.__setattr__(self, "soc_max", float(self.capacity))
        if self.soc_init is None:
            object.__setattr__(self, "soc_init", float(self.soc_min))
        if self.capacity <= 0 or self.max_charge <= 0 or self.max_discharge <= 0:
            raise InfeasibleSpec("capacity and charge/discharge limits must be > 0")
        if not (0 < self.eta_c <= 1 and 0 < self.eta_d <= 1):
            raise InfeasibleSpec("efficiencies must lie in (0, 1]")
        if not 0 <= self.soc_min < self.soc_max <= self.capacity:
            raise InfeasibleSpec("need 0 <= soc_min < soc_max <= capacity")
        if not self.soc_min <= self.soc_init <= self.soc_max:
            raise InfeasibleSpec(f"soc_init {self.soc_init} outside [{self.soc_min}, {self.soc_max}]")


@dataclass(eq=False)
class DispatchPlan:
    charge: np.ndarray
    discharge: np.ndarray
    soc: np.ndarray  # kWh at each interval boundary, len = intervals + 1


@dataclass(eq=False)
class BidSeries:
    quantity: np.ndarray  # kWh per interval

    def revenue(self, prices) -> np.ndarray:
        return np.asarray(prices, dtype=float) * self.quantity


@dataclass(frozen=True)
class Settlement:
    market_revenue: float
    building_payments: dict
    operator_profit: float

    @property
    def operator_share(self) -> float:
        return self.operator_profit / self.market_revenue if self.market_revenue else 0.0


def aggregate_surplus(net_loads, interval_hours: float | None = None):
    """Pool exports of all buildings.

    ``net_loads`` maps building id to NetLoadProfile.  Returns the pooled
    surplus in kW and each building's export in kWh per interval.
    Importers never offset exporters.
    """
    items = sorted(net_loads.items())
    if not items:
        return np.zeros(0), {}
    check_same_grid(*(p for _, p in items))
    grid = items[0][1].grid
    dh = grid.interval_hours if interval_hours is None else interval_hours
    exports = {b: np.maximum(-p.values, 0.0) for b, p in items}
    surplus = np.sum(list(exports.values()), axis=0)
    return surplus, {b: e * dh for b, e in exports.items()}


def soc_lattice(bess: BessSpec, levels: int = 201, step: float | None = None) -> np.ndarray:
    """SOC levels from soc_min to soc_max.

    With ``step`` the lattice is ``soc_min + k*step`` (the top level is
    dropped if it would exceed soc_max), so lattices of batteries that
    differ only in soc_max are nested.
    """
    if step is not None:
        if step <= 0:
            raise InfeasibleSpec("lattice step must be > 0")
        n = int(np.floor((bess.soc_max - bess.soc_min) / step + FEAS_TOL)) + 1
        return bess.soc_min + step * np.arange(n)
    if levels < 2:
        raise InfeasibleSpec("need at least 2 SOC levels")
    return np.linspace(bess.soc_min, bess.soc_max, levels)


def _transition(soc_from, lattice, surplus_t, price_t, bess, dh):
    """Revenue of moving from each ``soc_from`` to each lattice level.

    Returns (reward, charge, discharge) matrices of shape
    (len(soc_from), len(lattice)); infeasible moves carry -inf reward.
    """
    delta = lattice[None, :] - soc_from[:, None]
    up = np.maximum(delta, 0.0)
    down = np.maximum(-delta, 0.0)
    charge = up / (bess.eta_c * dh)
    discharge = down * bess.eta_d / dh
    cap = min(bess.max_charge, surplus_t)
    ok = (charge <= cap + FEAS_TOL) & (discharge <= bess.max_discharge + FEAS_TOL)
    charge = np.minimum(charge, max(surplus_t, 0.0))
    quantity = (surplus_t - charge + discharge) * dh
    reward = np.where(ok, price_t * quantity, -np.inf)
    return reward, charge, discharge


def _pick(values):
    # lowest index among near-maximal values = lowest SOC
    return np.argmax(values >= values.max(axis=-1, keepdims=True) - TIE_TOL, axis=-1)


def optimize_bess(surplus, prices, bess: BessSpec, interval_hours: float = 1.0, levels: int = 201, step=None):
    """Maximise market revenue of pass-through plus stored surplus.

    Returns ``(DispatchPlan, BidSeries)``.  The first move starts from
    ``soc_init`` exactly (which need not sit on the lattice); every later
    state is a lattice level.  The final state of charge carries no value.
    """
    surplus = np.asarray(surplus, dtype=float)
    prices = np.asarray(prices, dtype=float)
    if surplus.shape != prices.shape or surplus.ndim != 1:
        raise GridMismatch("surplus and prices must be 1-d series of equal length")
    if np.any(surplus < 0):
        raise ValueError("surplus must be >= 0")
    T, dh = len(surplus), interval_hours
    lattice = soc_lattice(bess, levels, step)
    S = len(lattice)

    value = np.zeros(S)  # value-to-go at t = T
    policy = np.zeros((T, S), dtype=int)
    for t in range(T - 1, 0, -1):
        reward, _, _ = _transition(lattice, lattice, surplus[t], prices[t], bess, dh)
        total = reward + value[None, :]
        policy[t] = _pick(total)
        value = total[np.arange(S), policy[t]]
    charge, discharge, soc = np.zeros(T), np.zeros(T), np.empty(T + 1)
    soc[0] = bess.soc_init
    if T:
        reward0, _, _ = _transition(soc[:1], lattice, surplus[0], prices[0], bess, dh)
        j = int(_pick(reward0[0] + value))
        for t in range(T):
            if t:
                j = int(policy[t, j])
            _, ch, dis = _transition(soc[t : t + 1], lattice[[j]], surplus[t], prices[t], bess, dh)
            charge[t], discharge[t] = ch[0, 0], dis[0, 0]
            soc[t + 1] = lattice[j]
    quantity = np.maximum((surplus - charge + discharge) * dh, 0.0)
    return DispatchPlan(charge, discharge, soc), BidSeries(quantity)


def settle(bids: BidSeries, prices, fit, per_building_export) -> Settlement:
    """Market revenue minus feed-in payments is the operator's profit."""
    prices = np.asarray(prices, dtype=float)
    fit = np.asarray(fit, dtype=float)
    q = np.asarray(bids.quantity, dtype=float)
    if q.shape != prices.shape or fit.shape != prices.shape:
        raise GridMismatch("bids, prices and fit must share one grid")
    revenue = float(np.dot(prices, q))
    payments = {}
    for b, export in sorted(per_building_export.items()):
        export = np.asarray(export, dtype=float)
        if export.shape != prices.shape:
            raise GridMismatch(f"building {b}: export series on a different grid")
        payments[b] = float(np.dot(fit, export))
    profit = revenue - sum(payments.values())
    if profit < 0:
        warnings.warn(
            f"feed-in payments exceed market revenue by {-profit:.6f}", NegativeProfitWarning, stacklevel=2
        )
    return Settlement(revenue, payments, profit)
