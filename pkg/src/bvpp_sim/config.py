"""Scenario configuration: parsing, validation and hashing.

A scenario is a YAML or JSON document.  Every field is validated before
any computation starts and errors name the offending field by its dotted
path.  See README.md for the schema.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from bvpp_sim.bems import TariffSet
from bvpp_sim.errors import ConfigError, InfeasibleSpec, UnknownAppliance
from bvpp_sim.fleet import case1_fleet, case2_fleet, default_tariffs, derive_seed, solar_coefficients
from bvpp_sim.grid import TimeGrid
from bvpp_sim.io import read_tariffs
from bvpp_sim.market import BessSpec
from bvpp_sim.profiles import ApplianceSpec, Category, Habit, HouseholdModel, classify_appliance, night_curfew

DEFAULT_BESS = {"capacity": 300.0, "max_charge": 100.0, "max_discharge": 100.0, "eta_c": 0.95, "eta_d": 0.95}


@dataclass(frozen=True)
class Case2Params:
    clusters: int = 3
    fuzzifier: float = 2.0
    tol: float = 1e-6
    max_iter: int = 300
    flag_k: float = 1.0
    top_n: int = 2


@dataclass(eq=False)
class ScenarioConfig:
    seed: int
    grid: TimeGrid
    tariffs: TariffSet
    solar_coefficients: np.ndarray
    households: list
    bess: BessSpec
    bess_levels: int = 201
    case2: Case2Params = field(default_factory=Case2Params)
    output_dir: Path = Path("out")
    fleet_spec: dict = field(default_factory=dict)
    planted: list = field(default_factory=list)

    def canonical(self) -> dict:
        """Every semantically meaningful field, in resolved form."""
        return {
            "seed": self.seed,
            "grid": [self.grid.interval_minutes, self.grid.num_days],
            "tariffs": [self.tariffs.tou.tolist(), self.tariffs.fit.tolist(), self.tariffs.market_price.tolist()],
            "solar_coefficients": self.solar_coefficients.tolist(),
            "households": [_household_dict(h) for h in self.households],
            "bess": self.bess.__dict__,
            "bess_levels": self.bess_levels,
            "case2": self.case2.__dict__,
        }

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _household_dict(h: HouseholdModel) -> dict:
    return {
        "id": h.id,
        "seed": h.seed,
        "solar_capacity": h.solar_capacity,
        "appliances": [
            {
                **{k: v for k, v in a.__dict__.items() if k not in ("curfew", "category")},
                "category": a.category.value,
                "curfew": sorted(a.curfew),
                **h.habit(a.id).__dict__,
            }
            for a in h.appliances
        ],
    }


class _Reader:
    """Typed access to a mapping with dotted-path diagnostics."""

    def __init__(self, data, path):
        if not isinstance(data, dict):
            raise ConfigError(path or "<root>", f"expected a mapping, got {type(data).__name__}")
        self.data, self.path = data, path

    def where(self, key):
        return f"{self.path}.{key}" if self.path else key

    def get(self, key, kind, default=..., check=None, msg=""):
        if key not in self.data:
            if default is ...:
                raise ConfigError(self.where(key), "required field missing")
            return default
        value = self.data[key]
        if kind is float and not isinstance(value, bool):
            # YAML reads "1e-6" (no dot) as a string
            try:
                value = float(value) if isinstance(value, (int, str)) else value
            except ValueError:
                pass
        if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
            raise ConfigError(self.where(key), f"expected {kind.__name__}, got {value!r}")
        if check is not None and not check(value):
            raise ConfigError(self.where(key), msg or f"invalid value {value!r}")
        return value

    def sub(self, key, default=...):
        if key not in self.data and default is not ...:
            return _Reader(default, self.where(key))
        return _Reader(self.get(key, dict), self.where(key))

    def unknown(self, allowed):
        extra = sorted(set(self.data) - set(allowed))
        if extra:
            raise ConfigError(self.where(extra[0]), "unknown field")


def _series(value, where, n_day, n_total):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(where, "expected a list of numbers") from None
    if arr.ndim != 1 or len(arr) not in (n_day, n_total):
        raise ConfigError(where, f"expected {n_day} (one day) or {n_total} values, got {arr.size}")
    return arr


def _load_tariffs(raw, where, grid, base_dir):
    if raw == "default":
        return default_tariffs(grid.with_days(1))
    r = _Reader(raw, where)
    r.unknown({"path", "tou", "fit", "market_price"})
    try:
        if "path" in r.data:
            path = Path(r.get("path", str))
            t = read_tariffs(path if path.is_absolute() else base_dir / path)
        else:
            t = TariffSet(*(_series(r.get(k, list), r.where(k), grid.intervals_per_day, grid.length) for k in ("tou", "fit", "market_price")))
        t.for_grid(grid)
    except ConfigError:
        raise
    except (OSError, ValueError) as exc:
        raise ConfigError(where, str(exc)) from None
    return t


def _load_appliance(r: _Reader, grid: TimeGrid):
    r.unknown({"id", "name", "rated_power", "duration", "category", "window", "preferred_start", "noisy", "curfew", "activation_prob", "jitter_std"})
    app_id = r.get("id", str)
    name = r.get("name", str, default=app_id)
    if "category" in r.data:
        cat = r.get("category", str, check=lambda v: v in ("shiftable", "non_shiftable"), msg="must be 'shiftable' or 'non_shiftable'")
        category = Category(cat)
    else:
        try:
            category = classify_appliance(name)
        except UnknownAppliance as exc:
            raise ConfigError(r.where("name"), str(exc)) from None
    duration = r.get("duration", int, check=lambda v: v >= 1, msg="must be >= 1 interval")
    preferred = r.get("preferred_start", int, check=lambda v: 0 <= v < grid.intervals_per_day, msg="outside the day")
    if category is Category.NON_SHIFTABLE:
        if "window" in r.data:
            raise ConfigError(r.where("window"), "non-shiftable appliances cannot have a window")
        window = [preferred, preferred]
    else:
        window = r.get("window", list, default=[0, grid.intervals_per_day - duration])
        if len(window) != 2 or not all(isinstance(v, int) for v in window):
            raise ConfigError(r.where("window"), "expected [earliest_start, latest_start]")
    if "curfew" in r.data:
        curfew = r.get("curfew", list)
        if not all(isinstance(v, int) and 0 <= v < grid.intervals_per_day for v in curfew):
            raise ConfigError(r.where("curfew"), "curfew must list interval indices within the day")
    elif r.get("noisy", bool, default=False):
        curfew = night_curfew(grid)
    else:
        curfew = []
    try:
        spec = ApplianceSpec(
            app_id,
            name,
            r.get("rated_power", float, check=lambda v: v > 0, msg="must be > 0"),
            duration,
            category,
            window[0],
            window[1],
            preferred,
            frozenset(curfew),
        )
        spec.check_grid(grid)
        habit = Habit(r.get("activation_prob", float, default=1.0), r.get("jitter_std", float, default=0.0))
    except ValueError as exc:
        raise ConfigError(r.path, str(exc)) from None
    if habit.activation_prob > 0 and not spec.feasible_starts():
        raise ConfigError(r.path, "allowed window lies entirely inside the curfew")
    return spec, habit


def _load_household(r: _Reader, grid, seed, index):
    r.unknown({"id", "seed", "solar_capacity", "appliances"})
    hid = r.get("id", str)
    apps, life = [], {}
    raw_apps = r.get("appliances", list)
    for j, raw in enumerate(raw_apps):
        spec, habit = _load_appliance(_Reader(raw, f"{r.path}.appliances[{j}]"), grid)
        apps.append(spec)
        life[spec.id] = habit
    try:
        return HouseholdModel(
            hid,
            apps,
            life,
            r.get("solar_capacity", float, default=0.0, check=lambda v: v >= 0, msg="must be >= 0"),
            r.get("seed", int, default=derive_seed(seed, index), check=lambda v: 0 <= v < 2**64, msg="must be a u64"),
        )
    except ValueError as exc:
        raise ConfigError(r.path, str(exc)) from None


def _load_fleet(r: _Reader, grid, seed):
    r.unknown({"synthetic", "households"})
    households, planted, spec = [], [], {}
    if "synthetic" in r.data:
        s = r.sub("synthetic")
        s.unknown({"kind", "count", "inefficient_fraction"})
        kind = s.get("kind", str, check=lambda v: v in ("case1", "case2"), msg="must be 'case1' or 'case2'")
        count = s.get("count", int, check=lambda v: v >= 0, msg="must be >= 0")
        if kind == "case1":
            households = case1_fleet(grid, count, seed)
        else:
            frac = s.get("inefficient_fraction", float, default=0.3, check=lambda v: 0 <= v <= 1, msg="must lie in [0, 1]")
            households, planted = case2_fleet(grid, count, frac, seed)
        spec = dict(s.data)
    for i, raw in enumerate(r.get("households", list, default=[])):
        households.append(_load_household(_Reader(raw, f"{r.where('households')}[{i}]"), grid, seed, len(households)))
    ids = [h.id for h in households]
    if len(set(ids)) != len(ids):
        raise ConfigError(r.where("households"), "household ids must be unique")
    return households, planted, spec


def from_dict(data, base_dir=".", seed_override=None, out_override=None) -> ScenarioConfig:
    base_dir = Path(base_dir)
    root = _Reader(data, "")
    root.unknown({"seed", "grid", "tariffs", "solar", "fleet", "bess", "case2", "output_dir"})
    seed = root.get("seed", int, default=0, check=lambda v: 0 <= v < 2**64, msg="must be a u64")
    if seed_override is not None:
        seed = seed_override

    g = root.sub("grid", default={})
    g.unknown({"interval_minutes", "num_days"})
    minutes = g.get("interval_minutes", int, default=60, check=lambda v: v > 0 and 1440 % v == 0, msg="must divide 1440")
    days = g.get("num_days", int, default=1, check=lambda v: v >= 1, msg="must be >= 1")
    grid = TimeGrid(minutes, days)

    tariffs = _load_tariffs(root.data.get("tariffs", "default"), "tariffs", grid, base_dir)

    solar_raw = root.data.get("solar", "default")
    if solar_raw == "default":
        coeffs = solar_coefficients(grid.with_days(1))
    else:
        s = _Reader(solar_raw, "solar")
        s.unknown({"coefficients"})
        coeffs = _series(s.get("coefficients", list), "solar.coefficients", grid.intervals_per_day, grid.length)
        if np.any((coeffs < 0) | (coeffs > 1)):
            raise ConfigError("solar.coefficients", "coefficients must lie in [0, 1]")
    if len(coeffs) != grid.length:
        coeffs = np.tile(coeffs, grid.num_days)

    households, planted, fleet_spec = _load_fleet(root.sub("fleet", default={}), grid, seed)

    b = root.sub("bess", default=DEFAULT_BESS)
    b.unknown({"capacity", "max_charge", "max_discharge", "eta_c", "eta_d", "soc_min", "soc_max", "soc_init", "levels"})
    try:
        bess = BessSpec(
            b.get("capacity", float),
            b.get("max_charge", float),
            b.get("max_discharge", float),
            b.get("eta_c", float, default=1.0),
            b.get("eta_d", float, default=1.0),
            b.get("soc_min", float, default=0.0),
            b.get("soc_max", float, default=None),
            b.get("soc_init", float, default=None),
        )
    except InfeasibleSpec as exc:
        raise ConfigError("bess", str(exc)) from None
    levels = b.get("levels", int, default=201, check=lambda v: v >= 2, msg="must be >= 2")

    c = root.sub("case2", default={})
    c.unknown(Case2Params.__dataclass_fields__)
    case2 = Case2Params(
        c.get("clusters", int, default=3, check=lambda v: v >= 2, msg="must be >= 2"),
        c.get("fuzzifier", float, default=2.0, check=lambda v: v > 1, msg="must be > 1"),
        c.get("tol", float, default=1e-6, check=lambda v: v > 0, msg="must be > 0"),
        c.get("max_iter", int, default=300, check=lambda v: v >= 1, msg="must be >= 1"),
        c.get("flag_k", float, default=1.0, check=lambda v: v >= 0, msg="must be >= 0"),
        c.get("top_n", int, default=2, check=lambda v: v >= 1, msg="must be >= 1"),
    )

    out = Path(out_override) if out_override else base_dir / root.get("output_dir", str, default="out")
    return ScenarioConfig(seed, grid, tariffs, coeffs, households, bess, levels, case2, out, fleet_spec, planted)


def load(path, seed_override=None, out_override=None) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError("<file>", f"{path}: {exc}") from None
    return from_dict(data or {}, path.parent, seed_override, out_override)
