"""Seeded synthetic household load profiles and rooftop solar output.

Each household is a set of appliances with a lifestyle: per appliance, a
daily activation probability and a Gaussian jitter around its preferred
start.  An active appliance runs once that day, uninterrupted, at rated
power for ``duration`` intervals.  Randomness comes from one Philox stream
per (household, appliance), indexed by day through the counter, so the
result does not depend on generation order or on the horizon length.
"""

from __future__ import annotations

import enum
import re
import zlib
from dataclasses import dataclass, field

import numpy as np

from bvpp_sim.errors import InfeasibleWindow, UnknownAppliance
from bvpp_sim.grid import LoadProfile, TimeGrid

# per-day draws: activation uniform + two uniforms for Box-Muller
DRAWS_PER_DAY = 3


class Category(str, enum.Enum):
    SHIFTABLE = "shiftable"
    NON_SHIFTABLE = "non_shiftable"


_CATEGORIES = {
    "light": Category.NON_SHIFTABLE,
    "tv": Category.NON_SHIFTABLE,
    "cooking stove": Category.NON_SHIFTABLE,
    "computer": Category.NON_SHIFTABLE,
    "water heater": Category.NON_SHIFTABLE,
    "washing machine": Category.SHIFTABLE,
    "clothes dryer": Category.SHIFTABLE,
    "dish washer": Category.SHIFTABLE,
    "pool pump": Category.SHIFTABLE,
    "oven": Category.SHIFTABLE,
}
_ALIASES = {"dishwasher": "dish washer", "television": "tv", "stove": "cooking stove"}


def canonical_name(name: str) -> str:
    key = re.sub(r"[\s_\-]+", " ", name.strip().lower())
    key = _ALIASES.get(key, key)
    if key not in _CATEGORIES and key.endswith("s"):
        singular = key[:-1]
        key = _ALIASES.get(singular, singular)
    return key


def classify_appliance(name: str) -> Category:
    key = canonical_name(name)
    try:
        return _CATEGORIES[key]
    except KeyError:
        raise UnknownAppliance(name) from None


def night_curfew(grid: TimeGrid, start_hour: float = 23, end_hour: float = 6) -> frozenset:
    """Interval indices of a curfew that wraps midnight (default 23:00-06:00)."""
    first = grid.hour_to_interval(start_hour)
    last = grid.hour_to_interval(end_hour)
    n = grid.intervals_per_day
    out, i = set(), first
    while i != last:
        out.add(i)
        i = (i + 1) % n
    return frozenset(out)


@dataclass(frozen=True)
class ApplianceSpec:
    id: str
    name: str
    rated_power: float
    duration: int
    category: Category
    earliest_start: int
    latest_start: int
    preferred_start: int
    curfew: frozenset = frozenset()

    def __post_init__(self):
        if self.rated_power <= 0:
            raise ValueError(f"{self.id}: rated_power must be > 0")
        if self.duration < 1:
            raise ValueError(f"{self.id}: duration must be >= 1 interval")
        if not self.earliest_start <= self.preferred_start <= self.latest_start:
            raise ValueError(f"{self.id}: preferred_start outside allowed window")
        if self.earliest_start < 0:
            raise ValueError(f"{self.id}: window starts before interval 0")
        if self.category is Category.NON_SHIFTABLE and self.earliest_start != self.latest_start:
            raise ValueError(f"{self.id}: non-shiftable appliances have a single allowed start")
        object.__setattr__(self, "curfew", frozenset(self.curfew))

    @property
    def shiftable(self) -> bool:
        return self.category is Category.SHIFTABLE

    def feasible_starts(self) -> list[int]:
        """Starts inside the window whose whole run avoids the curfew."""
        return [
            s
            for s in range(self.earliest_start, self.latest_start + 1)
            if not any((s + k) in self.curfew for k in range(self.duration))
        ]

    def nearest_feasible(self, start: int) -> int:
        # ties go to the earlier start
        feasible = self.feasible_starts()
        if not feasible:
            raise InfeasibleWindow(f"{self.id}: allowed window lies entirely inside the curfew")
        return min(feasible, key=lambda s: (abs(s - start), s))

    def check_grid(self, grid: TimeGrid):
        if self.latest_start + self.duration > grid.intervals_per_day:
            raise ValueError(f"{self.id}: run does not fit inside one day")
        if any(not 0 <= c < grid.intervals_per_day for c in self.curfew):
            raise ValueError(f"{self.id}: curfew interval outside the day")


@dataclass(frozen=True)
class Habit:
    activation_prob: float = 1.0
    jitter_std: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.activation_prob <= 1.0:
            raise ValueError("activation_prob must lie in [0, 1]")
        if self.jitter_std < 0:
            raise ValueError("jitter_std must be >= 0")


@dataclass(frozen=True)
class HouseholdModel:
    id: str
    appliances: tuple
    lifestyle: dict = field(default_factory=dict)
    solar_capacity: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "appliances", tuple(self.appliances))
        ids = [a.id for a in self.appliances]
        if len(set(ids)) != len(ids):
            raise ValueError(f"household {self.id}: duplicate appliance ids")
        if self.solar_capacity < 0:
            raise ValueError(f"household {self.id}: solar_capacity must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"household {self.id}: seed must be an unsigned 64-bit integer")
        unknown = set(self.lifestyle) - set(ids)
        if unknown:
            raise ValueError(f"household {self.id}: lifestyle for unknown appliances {sorted(unknown)}")

    def appliance(self, appliance_id: str) -> ApplianceSpec:
        for a in self.appliances:
            if a.id == appliance_id:
                return a
        raise KeyError(appliance_id)

    def habit(self, appliance_id: str) -> Habit:
        return self.lifestyle.get(appliance_id, Habit())

    def validate(self, grid: TimeGrid):
        for a in self.appliances:
            a.check_grid(grid)


def _stream(seed: int, appliance_id: str, num_days: int) -> np.ndarray:
    key = np.random.SeedSequence([seed, zlib.crc32(appliance_id.encode())]).generate_state(2, np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.random(DRAWS_PER_DAY * num_days).reshape(num_days, DRAWS_PER_DAY)


def draw_starts(model: HouseholdModel, grid: TimeGrid) -> list[dict[str, int]]:
    """Per day, the start interval of every appliance that runs that day."""
    model.validate(grid)
    days = [dict() for _ in range(grid.num_days)]
    for app in model.appliances:
        habit = model.habit(app.id)
        if habit.activation_prob > 0 and not app.feasible_starts():
            raise InfeasibleWindow(f"{model.id}/{app.id}: allowed window lies entirely inside the curfew")
        draws = _stream(model.seed, app.id, grid.num_days)
        active = draws[:, 0] < habit.activation_prob
        if not active.any():
            continue
        z = np.sqrt(-2.0 * np.log1p(-draws[:, 1])) * np.cos(2.0 * np.pi * draws[:, 2])
        wanted = app.preferred_start + np.rint(habit.jitter_std * z).astype(int)
        wanted = np.clip(wanted, app.earliest_start, app.latest_start)
        for d in np.flatnonzero(active):
            days[d][app.id] = app.nearest_feasible(int(wanted[d]))
    return days


def render_profiles(model: HouseholdModel, grid: TimeGrid, starts) -> dict[str, LoadProfile]:
    ipd = grid.intervals_per_day
    out = {}
    for app in model.appliances:
        values = np.zeros(grid.length)
        for day, day_starts in enumerate(starts):
            s = day_starts.get(app.id)
            if s is not None:
                lo = day * ipd + s
                values[lo : lo + app.duration] = app.rated_power
        out[app.id] = LoadProfile(values, grid)
    return out


def simulate_household(model: HouseholdModel, grid: TimeGrid) -> dict[str, LoadProfile]:
    return render_profiles(model, grid, draw_starts(model, grid))


def total_load(profiles) -> np.ndarray:
    return np.sum([p.values for p in profiles], axis=0)


def solar_profile(capacity: float, coefficients, grid: TimeGrid) -> LoadProfile:
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients.shape != (grid.length,):
        raise ValueError(
            f"LengthMismatch: {coefficients.size} coefficients for a grid of {grid.length} intervals"
        )
    if np.any((coefficients < 0) | (coefficients > 1)) or np.isnan(coefficients).any():
        raise ValueError("CoefficientOutOfRange: solar coefficients must lie in [0, 1]")
    if capacity < 0:
        raise ValueError("solar capacity must be >= 0")
    return LoadProfile(capacity * coefficients, grid)


@dataclass(eq=False)
class SimulatedHousehold:
    """A household together with what the generator drew for it."""

    model: HouseholdModel
    grid: TimeGrid
    starts: list
    profiles: dict
    solar: LoadProfile

    @classmethod
    def simulate(cls, model, grid, solar_coefficients=None):
        starts = draw_starts(model, grid)
        if solar_coefficients is None:
            solar = LoadProfile.zeros(grid)
        else:
            solar = solar_profile(model.solar_capacity, solar_coefficients, grid)
        return cls(model, grid, starts, render_profiles(model, grid, starts), solar)

    @property
    def id(self):
        return self.model.id

    def consumption(self) -> LoadProfile:
        if not self.profiles:
            return LoadProfile.zeros(self.grid)
        return LoadProfile(total_load(self.profiles.values()), self.grid)

    def non_shiftable_mean_day(self) -> np.ndarray:
        ipd = self.grid.intervals_per_day
        acc = np.zeros(ipd)
        for app in self.model.appliances:
            if not app.shiftable:
                acc += self.profiles[app.id].by_day().mean(axis=0)
        return acc
