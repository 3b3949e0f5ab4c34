"""Per-building energy management: cost of a load profile and appliance shifting.

The building sees only its retail TOU tariff and the feed-in tariff set by
the operator.  Import and export are netted per interval, and the objective
is ``f = c_tou - r_fi``.  Days are independent (runs never cross midnight),
so each day is optimised on its own.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from bvpp_sim.errors import GridMismatch, InfeasibleWindow
from bvpp_sim.grid import LoadProfile, NetLoadProfile, TimeGrid, check_same_grid
from bvpp_sim.profiles import HouseholdModel

log = logging.getLogger(__name__)

EXACT_LIMIT = 10**6
TIE_TOL = 1e-9  # $; objective values closer than this count as equal
_CHUNK = 1 << 16


@dataclass(eq=False)
class TariffSet:
    tou: np.ndarray
    fit: np.ndarray
    market_price: np.ndarray

    def __post_init__(self):
        self.tou = np.asarray(self.tou, dtype=float)
        self.fit = np.asarray(self.fit, dtype=float)
        self.market_price = np.asarray(self.market_price, dtype=float)
        n = self.tou.shape
        if self.fit.shape != n or self.market_price.shape != n or len(n) != 1:
            raise GridMismatch("tou, fit and market_price must be 1-d series of equal length")
        for name in ("tou", "fit", "market_price"):
            if np.any(getattr(self, name) < 0):
                raise ValueError(f"tariff series {name} must be >= 0")
        bad = np.flatnonzero(self.fit >= self.market_price)
        if bad.size:
            raise ValueError(f"feed-in tariff must stay below the market price (interval {bad[0]})")

    def __len__(self):
        return len(self.tou)

    def __eq__(self, other):
        if not isinstance(other, TariffSet):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in ("tou", "fit", "market_price")
        )

    def for_grid(self, grid: TimeGrid) -> TariffSet:
        """Series covering the whole grid; a one-day tariff is repeated daily."""
        if len(self) == grid.length:
            return self
        if len(self) == grid.intervals_per_day:
            reps = grid.num_days
            return TariffSet(np.tile(self.tou, reps), np.tile(self.fit, reps), np.tile(self.market_price, reps))
        raise GridMismatch(f"tariffs have {len(self)} intervals, grid has {grid.length}")


@dataclass(frozen=True)
class CostBreakdown:
    c_tou: float
    r_fi: float
    f: float


def _flows(consumption, solar):
    diff = consumption - solar
    return np.maximum(diff, 0.0), np.maximum(-diff, 0.0)


def cost_breakdown(consumption: LoadProfile, solar: LoadProfile, tariffs: TariffSet) -> CostBreakdown:
    check_same_grid(consumption, solar)
    t = tariffs.for_grid(consumption.grid)
    dh = consumption.grid.interval_hours
    imp, exp = _flows(consumption.values, solar.values)
    c_tou = float(np.dot(t.tou, imp) * dh)
    r_fi = float(np.dot(t.fit, exp) * dh)
    return CostBreakdown(c_tou, r_fi, c_tou - r_fi)


def net_load(consumption: LoadProfile, solar: LoadProfile) -> NetLoadProfile:
    check_same_grid(consumption, solar)
    return NetLoadProfile(consumption.values - solar.values, consumption.grid)


@dataclass(eq=False)
class Schedule:
    """Start interval per active appliance and day, next to the drawn default."""

    starts: list
    default: list

    def __eq__(self, other):
        return isinstance(other, Schedule) and self.starts == other.starts and self.default == other.default

    def moves(self):
        """Rows of (appliance, day, start, moved_from) for every active run."""
        for day, (now, before) in enumerate(zip(self.starts, self.default)):
            for app_id in sorted(now):
                yield app_id, day, now[app_id], before[app_id]


def normalize_activations(household: HouseholdModel, activations) -> list[dict[str, int]]:
    """Accept per-day dicts (id -> default start) or per-day id sets."""
    out = []
    for day in activations:
        if isinstance(day, dict):
            out.append(dict(day))
        else:
            apps = (household.appliance(a) for a in day)
            out.append({app.id: app.nearest_feasible(app.preferred_start) for app in apps})
    return out


def schedule_consumption(household: HouseholdModel, starts, grid: TimeGrid) -> LoadProfile:
    ipd = grid.intervals_per_day
    values = np.zeros(grid.length)
    for day, day_starts in enumerate(starts):
        for app_id, s in day_starts.items():
            app = household.appliance(app_id)
            lo = day * ipd + s
            values[lo : lo + app.duration] += app.rated_power
    return LoadProfile(values, grid)


def _day_objective(loads, solar, tou, fit, dh):
    diff = loads - solar
    return (np.maximum(diff, 0.0) @ tou - np.maximum(-diff, 0.0) @ fit) * dh


def _contributions(app, candidates, ipd):
    rows = np.zeros((len(candidates), ipd))
    for i, s in enumerate(candidates):
        rows[i, s : s + app.duration] = app.rated_power
    return rows


def _first_near_min(values):
    return int(np.flatnonzero(values <= values.min() + TIE_TOL)[0])


def _enumerate_day(base, contribs, sizes, objective):
    total = int(np.prod(sizes))
    f = np.empty(total)
    for lo in range(0, total, _CHUNK):
        flat = np.arange(lo, min(lo + _CHUNK, total))
        idx = np.unravel_index(flat, sizes)
        f[lo : lo + len(flat)] = objective(base + sum(c[i] for c, i in zip(contribs, idx)))
    # flat order is lexicographic in (appliance id, start)
    return tuple(int(i) for i in np.unravel_index(_first_near_min(f), sizes))


def _descend_day(base, contribs, current, objective):
    loads_of = lambda pick: base + sum(c[i] for c, i in zip(contribs, pick))
    pick = list(current)
    f_now = float(objective(loads_of(pick)[None, :])[0])
    improved = True
    while improved:
        improved = False
        for a, c in enumerate(contribs):
            others = loads_of(pick) - c[pick[a]]
            f = objective(others + c)
            k = _first_near_min(f)
            if f[k] < f_now - TIE_TOL:
                pick[a], f_now, improved = k, float(f[k]), True
    return tuple(pick)


def optimize_schedule(household: HouseholdModel, activations, solar: LoadProfile, tariffs: TariffSet):
    """Shift the active shiftable appliances to minimise ``c_tou - r_fi``.

    Exact enumeration when a day's candidate cross-product has at most
    ``EXACT_LIMIT`` combinations, otherwise coordinate descent from the
    default starts.  Returns ``(Schedule, CostBreakdown)``.
    """
    grid = solar.grid
    household.validate(grid)
    default = normalize_activations(household, activations)
    if len(default) != grid.num_days:
        raise GridMismatch(f"activations cover {len(default)} days, grid has {grid.num_days}")
    t = tariffs.for_grid(grid)
    ipd, dh = grid.intervals_per_day, grid.interval_hours

    chosen = []
    for day, day_default in enumerate(default):
        sl = slice(day * ipd, (day + 1) * ipd)
        fixed = {a: s for a, s in day_default.items() if not household.appliance(a).shiftable}
        movable = sorted(a for a in day_default if household.appliance(a).shiftable)
        result = dict(fixed)
        if movable:
            base = schedule_consumption(household, [fixed], grid.with_days(1)).values
            apps = [household.appliance(a) for a in movable]
            candidates = [app.feasible_starts() for app in apps]
            for app, cand in zip(apps, candidates):
                if not cand:
                    raise InfeasibleWindow(f"{household.id}/{app.id}: no feasible start")
            contribs = [_contributions(app, cand, ipd) for app, cand in zip(apps, candidates)]
            sizes = tuple(len(c) for c in candidates)
            objective = lambda loads: _day_objective(loads, solar.values[sl], t.tou[sl], t.fit[sl], dh)
            if np.prod(sizes, dtype=float) <= EXACT_LIMIT:
                pick = _enumerate_day(base, contribs, sizes, objective)
            else:
                log.debug("%s day %d: %s combinations, using coordinate descent", household.id, day, sizes)
                start = [cand.index(app.nearest_feasible(day_default[app.id])) for app, cand in zip(apps, candidates)]
                pick = _descend_day(base, contribs, start, objective)
            result.update({a: cand[i] for a, cand, i in zip(movable, candidates, pick)})
        chosen.append(result)

    schedule = Schedule(chosen, default)
    cost = cost_breakdown(schedule_consumption(household, chosen, grid), solar, t)
    return schedule, cost
