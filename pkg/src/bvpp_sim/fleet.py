"""Synthetic fleets and default day shapes for tariffs and solar output.

Hour-based shapes are resampled onto any grid by averaging over the
minutes each interval covers.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from bvpp_sim.bems import TariffSet
from bvpp_sim.grid import TimeGrid
from bvpp_sim.profiles import ApplianceSpec, Category, Habit, HouseholdModel, classify_appliance, night_curfew

TOU_HOURLY = [0.12] * 7 + [0.24] * 7 + [0.48] * 6 + [0.24] * 2 + [0.12] * 2

MARKET_HOURLY = [
    0.070, 0.065, 0.060, 0.060, 0.065, 0.075, 0.090, 0.110,
    0.100, 0.080, 0.060, 0.050, 0.045, 0.045, 0.050, 0.070,
    0.100, 0.160, 0.240, 0.260, 0.200, 0.140, 0.100, 0.080,
]  # fmt: skip

FIT_RATIO = 0.75

# name -> (kW, run hours, default preferred hour, noisy)
APPLIANCES = {
    "lights": (0.4, 5, 18, False),
    "tv": (0.2, 3, 19, False),
    "cooking stove": (2.0, 1, 18, False),
    "computer": (0.15, 4, 9, False),
    "water heater": (3.0, 1, 8, False),
    "washing machine": (1.0, 2, 19, True),
    "clothes dryer": (2.5, 1, 20, True),
    "dish washer": (1.2, 2, 20, True),
    "pool pump": (1.0, 4, 16, False),
    "oven": (2.0, 1, 17, False),
}


def hourly_to_grid(hourly, grid: TimeGrid) -> np.ndarray:
    """One day of an hourly shape on ``grid``, tiled over all days."""
    per_minute = np.repeat(np.asarray(hourly, dtype=float), 60)
    day = per_minute.reshape(grid.intervals_per_day, grid.interval_minutes).mean(axis=1)
    return np.tile(day, grid.num_days)


def default_tariffs(grid: TimeGrid) -> TariffSet:
    price = hourly_to_grid(MARKET_HOURLY, grid)
    return TariffSet(hourly_to_grid(TOU_HOURLY, grid), FIT_RATIO * price, price)


def solar_coefficients(grid: TimeGrid, sunrise: float = 6.0, sunset: float = 18.0) -> np.ndarray:
    hours = np.arange(24 * 60) / 60.0 + 1 / 120
    span = sunset - sunrise
    shape = np.clip(np.sin(np.pi * (hours - sunrise) / span), 0.0, None) ** 1.5
    shape[(hours < sunrise) | (hours > sunset)] = 0.0
    day = shape.reshape(grid.intervals_per_day, grid.interval_minutes).mean(axis=1)
    return np.tile(day, grid.num_days)


def make_appliance(
    app_id, name, grid, preferred_hour, window_hours=None, power_scale=1.0, curfew=frozenset(), category=None
) -> ApplianceSpec:
    kw, hours, _, _ = APPLIANCES[name]
    per_hour = 60 / grid.interval_minutes
    duration = max(1, math.ceil(hours * per_hour))
    last = grid.intervals_per_day - duration
    preferred = min(int(round(preferred_hour * per_hour)) % grid.intervals_per_day, last)
    category = category or classify_appliance(name)
    if category is Category.NON_SHIFTABLE:
        lo = hi = preferred
    elif window_hours is None:
        lo, hi = 0, last
    else:
        lo = min(int(round(window_hours[0] * per_hour)), preferred)
        hi = max(min(int(round(window_hours[1] * per_hour)), last), preferred)
    return ApplianceSpec(app_id, name, round(kw * power_scale, 6), duration, category, lo, hi, preferred, curfew)


def derive_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def _appliance_id(name):
    return name.replace(" ", "_")


def case1_fleet(grid: TimeGrid, n: int = 50, seed: int = 0) -> list[HouseholdModel]:
    """Buildings with rooftop solar and 2-3 controllable appliances whose
    habitual start is in the evening but which may run 07:00-21:00."""
    rng = np.random.default_rng([seed, 1])
    out = []
    for i in range(n):
        scale = float(rng.uniform(0.8, 1.3))
        apps, life = [], {}
        for name in ("lights", "tv", "cooking stove", "computer", "water heater"):
            hour = APPLIANCES[name][2] + int(rng.integers(-1, 2))
            a = make_appliance(_appliance_id(name), name, grid, hour, power_scale=scale)
            apps.append(a)
            life[a.id] = Habit(float(rng.uniform(0.85, 1.0)), 0.0)
        shiftable = ["washing machine", "dish washer", "clothes dryer"]
        for name in shiftable[: int(rng.integers(2, 4))]:
            hour = APPLIANCES[name][2] + int(rng.integers(-1, 2))
            a = make_appliance(_appliance_id(name), name, grid, hour, window_hours=(7, 20), power_scale=scale)
            apps.append(a)
            life[a.id] = Habit(float(rng.uniform(0.7, 1.0)), 1.0 * 60 / grid.interval_minutes)
        capacity = round(float(rng.uniform(3.0, 8.0)), 2)
        out.append(HouseholdModel(f"b{i:03d}", apps, life, capacity, derive_seed(seed, i)))
    return out


def case2_fleet(grid: TimeGrid, n: int = 500, inefficient_fraction: float = 0.3, seed: int = 0):
    """Households in three size tiers; a planted fraction habitually runs
    shiftable appliances in the evening peak instead of the valley.

    Returns (models, planted ids).
    """
    rng = np.random.default_rng([seed, 2])
    per_hour = 60 / grid.interval_minutes
    curfew_all = night_curfew(grid)
    n_bad = int(round(inefficient_fraction * n))
    bad = set(rng.choice(n, size=n_bad, replace=False).tolist())
    models, planted = [], []
    for i in range(n):
        hid = f"h{i:03d}"
        # size tiers scale the fixed baseload; shiftable appliances stay comparable
        tier = float(rng.choice([0.5, 1.5, 3.0]))
        scale = float(rng.normal(1.0, 0.05))
        sleeper = bool(rng.random() < 0.5)
        apps, life = [], {}
        for name in ("lights", "tv", "cooking stove", "computer", "water heater"):
            hour = APPLIANCES[name][2] + int(rng.integers(-1, 2))
            a = make_appliance(_appliance_id(name), name, grid, hour, power_scale=tier * scale)
            apps.append(a)
            life[a.id] = Habit(float(rng.uniform(0.85, 1.0)), 0.0)
        for name in ("washing machine", "clothes dryer", "dish washer", "oven"):
            noisy = APPLIANCES[name][3]
            curfew = curfew_all if (noisy and sleeper) else frozenset()
            if i in bad:
                hour = float(rng.integers(15, 19))
            elif curfew:
                hour = float(rng.choice([6, 21]))
            else:
                hour = float(rng.integers(0, 4))
            a = make_appliance(_appliance_id(name), name, grid, hour, power_scale=scale, curfew=curfew)
            a = replace(a, preferred_start=a.nearest_feasible(a.preferred_start))
            apps.append(a)
            life[a.id] = Habit(float(rng.uniform(0.55, 0.65)), 1.0 * per_hour)
        models.append(HouseholdModel(hid, apps, life, 0.0, derive_seed(seed, i)))
        if i in bad:
            planted.append(hid)
    return models, planted
