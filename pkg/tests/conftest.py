import itertools

import numpy as np
import pytest

from bvpp_sim.bems import TariffSet
from bvpp_sim.grid import LoadProfile, TimeGrid
from bvpp_sim.profiles import ApplianceSpec, Category, Habit, HouseholdModel

ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    line = f"{'PASS' if rep.passed else 'FAIL'}  {mark.args[0]}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def hourly():
    return TimeGrid(60, 1)


def shiftable(app_id, power, duration, lo, hi, preferred=None, curfew=(), name=None):
    return ApplianceSpec(
        app_id, name or app_id, power, duration, Category.SHIFTABLE, lo, hi, lo if preferred is None else preferred, frozenset(curfew)
    )


def fixed(app_id, power, duration, start, name=None):
    return ApplianceSpec(app_id, name or app_id, power, duration, Category.NON_SHIFTABLE, start, start, start)


def random_tariffs(rng, n):
    price = rng.uniform(0.05, 0.6, n)
    return TariffSet(rng.uniform(0.05, 0.6, n), price * rng.uniform(0.1, 0.9, n), price)


def random_building(rng, grid, n_shift=3, max_cands=8):
    """One household with fixed baseload and up to ``n_shift`` shiftable
    appliances of at most ``max_cands`` candidate starts, all active."""
    ipd = grid.intervals_per_day
    apps = [fixed("base_a", float(rng.uniform(0.1, 1.0)), 3, int(rng.integers(0, ipd - 3)))]
    apps.append(fixed("base_b", float(rng.uniform(0.5, 2.0)), 1, int(rng.integers(0, ipd - 1))))
    for k in range(n_shift):
        dur = int(rng.integers(1, 4))
        width = int(rng.integers(1, max_cands + 1))
        lo = int(rng.integers(0, ipd - dur - width + 2))
        hi = lo + width - 1
        apps.append(shiftable(f"s{k}", float(rng.uniform(0.3, 3.0)), dur, lo, hi, int(rng.integers(lo, hi + 1))))
    model = HouseholdModel("r", apps, {a.id: Habit(1.0, 0.0) for a in apps}, 0.0, 1)
    starts = [{a.id: a.preferred_start for a in apps}]
    solar = LoadProfile(np.clip(rng.normal(1.0, 1.5, grid.length), 0, None), grid)
    return model, starts, solar


def loop_cost(consumption, solar, tou, fit, dh):
    """Per-interval accumulation, no vector ops."""
    c_tou = r_fi = 0.0
    for c, s, p, f in zip(consumption, solar, tou, fit):
        if c >= s:
            c_tou += p * (c - s) * dh
        else:
            r_fi += f * (s - c) * dh
    return c_tou, r_fi, c_tou - r_fi


def loop_consumption(model, starts, n):
    values = [0.0] * n
    for app_id, s in starts.items():
        app = model.appliance(app_id)
        for k in range(app.duration):
            values[s + k] += app.rated_power
    return values


def brute_force_schedule(model, day_starts, solar, tariffs, dh):
    """Exhaustive search over every feasible start combination; ties to the
    lexicographically smallest (appliance id, start)."""
    movable = sorted(a for a in day_starts if model.appliance(a).shiftable)
    fixed_part = {a: s for a, s in day_starts.items() if a not in movable}
    spaces = [model.appliance(a).feasible_starts() for a in movable]
    scored = []
    for combo in itertools.product(*spaces):
        starts = {**fixed_part, **dict(zip(movable, combo))}
        cons = loop_consumption(model, starts, len(solar))
        scored.append((loop_cost(cons, solar, tariffs.tou, tariffs.fit, dh)[2], combo))
    best = min(f for f, _ in scored)
    combo = min(c for f, c in scored if f <= best + 1e-9)
    return {**fixed_part, **dict(zip(movable, combo))}, best


def brute_force_bess(surplus, prices, lattice, bess, dh):
    """Best revenue over every sequence of lattice SOC levels (after a first
    move from soc_init), checking physics interval by interval."""
    best = -np.inf
    for seq in itertools.product(range(len(lattice)), repeat=len(surplus)):
        soc, revenue, ok = bess.soc_init, 0.0, True
        for t, j in enumerate(seq):
            delta = lattice[j] - soc
            charge = max(delta, 0.0) / (bess.eta_c * dh)
            discharge = max(-delta, 0.0) * bess.eta_d / dh
            if charge > min(bess.max_charge, surplus[t]) + 1e-9 or discharge > bess.max_discharge + 1e-9:
                ok = False
                break
            charge = min(charge, surplus[t])
            revenue += prices[t] * (surplus[t] - charge + discharge) * dh
            soc = lattice[j]
        if ok and revenue > best:
            best = revenue
    return best


def brute_force_actions(surplus_units, price, cap_units, rate_units, init_units=0):
    """Lossless battery on an integer grid: try every sequence of per-interval
    net actions (charge > 0, discharge < 0) in whole units; revenue in units."""
    best = -np.inf
    span = range(-rate_units, rate_units + 1)
    for seq in itertools.product(span, repeat=len(surplus_units)):
        soc, revenue = init_units, 0.0
        for a, s, p in zip(seq, surplus_units, price):
            soc += a
            if soc < 0 or soc > cap_units or a > s:
                break
            revenue += p * (s - a)
        else:
            best = max(best, revenue)
    return best
