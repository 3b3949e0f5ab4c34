"""Stage orchestration for the ``generate``, ``case1`` and ``case2`` commands.

Output layout under ``config.output_dir``::

    manifest.json
    profiles/<household>.csv
    case1/schedules.csv, case1/costs.csv, case1/netload/<building>.csv,
    case1/bids.csv, case1/dispatch.csv, case1/settlement.json
    case2/clusters.csv, case2/scatter.csv, case2/recommendations.json

Everything except ``manifest.json`` (which records wall-clock times) is a
pure function of the validated config.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

import bvpp_sim
from bvpp_sim import io
from bvpp_sim.bems import cost_breakdown, net_load, optimize_schedule, schedule_consumption
from bvpp_sim.config import ScenarioConfig
from bvpp_sim.errors import BvppError
from bvpp_sim.market import aggregate_surplus, optimize_bess, settle
from bvpp_sim.profiles import SimulatedHousehold
from bvpp_sim.recommender import knowledge_sharing

log = logging.getLogger(__name__)


class StageError(BvppError):
    pass


class Manifest:
    def __init__(self, config: ScenarioConfig):
        self.path = config.output_dir / "manifest.json"
        self.data = {"config_hash": config.hash(), "version": bvpp_sim.__version__, "stages": {}}
        if self.path.exists():
            try:
                old = json.loads(self.path.read_text())
            except ValueError:
                old = {}
            if old.get("config_hash") == self.data["config_hash"]:
                self.data["stages"] = old.get("stages", {})
                if "campaign" in old:
                    self.data["campaign"] = old["campaign"]

    @contextmanager
    def stage(self, name):
        record = {"files": [], "seconds": 0.0}
        t0 = time.perf_counter()
        log.info("stage %s: start", name)
        yield record
        record["seconds"] = round(time.perf_counter() - t0, 6)
        record["files"] = sorted(str(Path(f).relative_to(self.path.parent)) for f in record["files"])
        self.data["stages"][name] = record
        log.info("stage %s: %d files in %.2fs", name, len(record["files"]), record["seconds"])

    def write(self):
        io.write_json(self.path, self.data)


def _map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _profile_path(config, hid):
    return config.output_dir / "profiles" / f"{hid}.csv"


def cmd_generate(config: ScenarioConfig, threads: int = 1) -> Manifest:
    manifest = Manifest(config)
    with manifest.stage("generate") as rec:
        def one(model):
            try:
                h = SimulatedHousehold.simulate(model, config.grid, config.solar_coefficients)
            except (BvppError, ValueError) as exc:
                raise StageError(f"household {model.id}: {exc}") from exc
            return io.write_profiles(_profile_path(config, model.id), h.profiles, h.solar)

        rec["files"] = _map(one, config.households, threads)
    manifest.write()
    return manifest


def load_households(config: ScenarioConfig, threads: int = 1) -> list[SimulatedHousehold]:
    """Read generated profile CSVs back, checking them against the config."""
    def one(model):
        path = _profile_path(config, model.id)
        if not path.exists():
            raise StageError(f"household {model.id}: missing {path}; run 'generate' first")
        profiles, solar = io.read_profiles(path, config.grid)
        expected = [a.id for a in model.appliances]
        if list(profiles) != expected:
            raise StageError(f"household {model.id}: {path} columns {list(profiles)} do not match config {expected}")
        starts = io.starts_from_profiles(profiles, config.grid)
        return SimulatedHousehold(model, config.grid, starts, profiles, solar)

    return _map(one, config.households, threads)


def _ensure_profiles(config, threads):
    missing = [m.id for m in config.households if not _profile_path(config, m.id).exists()]
    if missing:
        log.info("%d profile files missing, running generate first", len(missing))
        cmd_generate(config, threads)


def cmd_case1(config: ScenarioConfig, threads: int = 1) -> dict:
    """Tariffs out, building schedules in, battery dispatch, bids, settlement."""
    _ensure_profiles(config, threads)
    manifest = Manifest(config)
    grid, tariffs = config.grid, config.tariffs.for_grid(config.grid)
    out = config.output_dir / "case1"
    households = load_households(config, threads)
    log.info("delivered tariffs to %d buildings", len(households))

    with manifest.stage("case1.schedule") as rec:
        def one(h):
            try:
                schedule, cost = optimize_schedule(h.model, h.starts, h.solar, tariffs)
                default = cost_breakdown(schedule_consumption(h.model, h.starts, grid), h.solar, tariffs)
                consumption = schedule_consumption(h.model, schedule.starts, grid)
            except (BvppError, ValueError) as exc:
                raise StageError(f"building {h.id}: {exc}") from exc
            return h.id, schedule, cost, default, net_load(consumption, h.solar)

        results = _map(one, households, threads)
        rows = [(bid, app, day, start, moved_from) for bid, s, *_ in results for app, day, start, moved_from in s.moves()]
        rec["files"].append(io.write_csv(out / "schedules.csv", ["building", "appliance", "day", "start", "moved_from"], rows))
        rows = [(bid, d.c_tou, d.r_fi, d.f, c.c_tou, c.r_fi, c.f) for bid, _, c, d, _ in results]
        header = ["building", "default_c_tou", "default_r_fi", "default_f", "c_tou", "r_fi", "f"]
        rec["files"].append(io.write_csv(out / "costs.csv", header, rows))
        for bid, *_, net in results:
            rec["files"].append(io.write_net_load(out / "netload" / f"{bid}.csv", net))

    with manifest.stage("case1.market") as rec:
        nets = {bid: net for bid, *_, net in results}
        if nets:
            surplus, exports = aggregate_surplus(nets)
        else:
            surplus, exports = np.zeros(grid.length), {}
        plan, bids = optimize_bess(surplus, tariffs.market_price, config.bess, grid.interval_hours, config.bess_levels)
        settlement = settle(bids, tariffs.market_price, tariffs.fit, exports)
        revenue = bids.revenue(tariffs.market_price)
        rows = [(t, float(bids.quantity[t]), float(tariffs.market_price[t]), float(revenue[t])) for t in range(grid.length)]
        rec["files"].append(io.write_csv(out / "bids.csv", ["interval", "quantity_kwh", "price", "revenue"], rows))
        rows = [(t, float(plan.charge[t]), float(plan.discharge[t]), float(plan.soc[t + 1])) for t in range(grid.length)]
        rec["files"].append(io.write_csv(out / "dispatch.csv", ["interval", "charge_kw", "discharge_kw", "soc_kwh"], rows))
        passthrough = float(np.dot(tariffs.market_price, surplus) * grid.interval_hours)
        payload = {
            "revenue": settlement.market_revenue,
            "operator_profit": settlement.operator_profit,
            "operator_share": settlement.operator_share,
            "building_payments": settlement.building_payments,
            "passthrough_revenue": passthrough,
            "soc_initial": float(plan.soc[0]),
            "series": {
                "surplus_kw": surplus,
                "bid_kwh": bids.quantity,
                "price": tariffs.market_price,
                "soc_kwh": plan.soc,
                "net_load_kw": {bid: net.values for bid, net in nets.items()},
            },
        }
        rec["files"].append(io.write_json(out / "settlement.json", payload))
    manifest.write()
    return {"settlement": settlement, "plan": plan, "bids": bids, "buildings": results, "manifest": manifest}


def cmd_case2(config: ScenarioConfig, threads: int = 1) -> dict:
    """Cluster households, flag inefficient ones, recommend peer plans."""
    _ensure_profiles(config, threads)
    manifest = Manifest(config)
    out = config.output_dir / "case2"
    households = load_households(config, threads)
    p = config.case2
    with manifest.stage("case2") as rec:
        try:
            res = knowledge_sharing(
                households, config.tariffs, p.clusters, p.fuzzifier, p.tol, p.max_iter, p.flag_k, p.top_n, config.seed
            )
        except BvppError as exc:
            raise StageError(f"knowledge sharing: {exc}") from exc
        flagged = set(res.flagged)
        header = ["household", "cluster", *(f"u{k}" for k in range(p.clusters)), "flagged"]
        rows = [(h, res.labels[h], *map(float, res.membership[h]), int(h in flagged)) for h in res.ids]
        rec["files"].append(io.write_csv(out / "clusters.csv", header, rows))
        rows = [
            (h, res.features[h].avg_daily_energy, res.features[h].avg_daily_cost, res.labels[h], int(h in flagged))
            for h in res.ids
        ]
        rec["files"].append(io.write_csv(out / "scatter.csv", ["household", "energy_kwh_day", "cost_per_day", "cluster", "flagged"], rows))
        payload = {
            target: [
                {
                    "rank": i + 1,
                    "peer": r.peer_id,
                    "rating": r.rating,
                    "saving": r.projected_saving,
                    "similarity": r.similarity,
                    "starts": dict(sorted(r.plan.items())),
                }
                for i, r in enumerate(recs)
            ]
            for target, recs in res.recommendations.items()
        }
        rec["files"].append(io.write_json(out / "recommendations.json", payload))
    s = res.summary
    manifest.data["campaign"] = {
        "targets": len(res.flagged),
        "with_recommendation": s.count,
        "total_saving": s.total,
        "mean_saving": s.mean,
        "mean_defined": s.mean_defined,
    }
    manifest.write()
    return {"result": res, "manifest": manifest}
