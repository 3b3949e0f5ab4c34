"""Time grid and the profile types exchanged between modules."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from bvpp_sim.errors import GridMismatch

MINUTES_PER_DAY = 1440


@dataclass(frozen=True)
class TimeGrid:
    interval_minutes: int = 60
    num_days: int = 1
    intervals_per_day: int = field(default=0)

    def __post_init__(self):
        if self.interval_minutes <= 0 or MINUTES_PER_DAY % self.interval_minutes:
            raise ValueError(f"interval_minutes must divide 1440, got {self.interval_minutes}")
        if self.num_days <= 0:
            raise ValueError(f"num_days must be positive, got {self.num_days}")
        per_day = MINUTES_PER_DAY // self.interval_minutes
        if self.intervals_per_day == 0:
            object.__setattr__(self, "intervals_per_day", per_day)
        elif self.intervals_per_day != per_day:
            raise ValueError(
                f"interval_minutes * intervals_per_day must be 1440, "
                f"got {self.interval_minutes} * {self.intervals_per_day}"
            )

    @property
    def length(self) -> int:
        return self.intervals_per_day * self.num_days

    @property
    def interval_hours(self) -> float:
        return self.interval_minutes / 60.0

    def hour_to_interval(self, hour: float) -> int:
        return int(round(hour * 60 / self.interval_minutes)) % self.intervals_per_day

    def with_days(self, num_days: int) -> TimeGrid:
        return TimeGrid(self.interval_minutes, num_days)


def check_same_grid(*profiles):
    grids = {p.grid for p in profiles}
    if len(grids) > 1:
        raise GridMismatch(f"profiles live on different grids: {sorted(map(repr, grids))}")


@dataclass(eq=False)
class LoadProfile:
    """Non-negative power series in kW on a fixed grid."""

    values: np.ndarray
    grid: TimeGrid

    signed = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.length,):
            raise GridMismatch(
                f"profile has shape {self.values.shape}, grid needs ({self.grid.length},)"
            )
        if not self.signed and np.any(self.values < 0):
            raise ValueError("consumption and solar profiles must be non-negative")

    @classmethod
    def zeros(cls, grid: TimeGrid):
        return cls(np.zeros(grid.length), grid)

    def by_day(self) -> np.ndarray:
        """View as (num_days, intervals_per_day)."""
        return self.values.reshape(self.grid.num_days, self.grid.intervals_per_day)

    def energy_kwh(self) -> float:
        return float(self.values.sum() * self.grid.interval_hours)

    def __add__(self, other):
        check_same_grid(self, other)
        return type(self)(self.values + other.values, self.grid)

    def __eq__(self, other):
        if not isinstance(other, LoadProfile):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)

    def __len__(self):
        return len(self.values)


class NetLoadProfile(LoadProfile):
    """Consumption minus solar; negative values are surplus export."""

    signed = True
