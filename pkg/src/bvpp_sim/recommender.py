"""Knowledge sharing between households.

Households are clustered on average daily energy and cost.  Inside each
cluster a cost-vs-energy regression singles out households that pay
clearly more than their energy use explains.  Each of them gets timing
plans from efficient peers in the same cluster, ranked by lifestyle
similarity times the saving the plan would bring to the target's own
appliances.
"""

from __future__ import annotations

import logging
import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from bvpp_sim.bems import TariffSet
from bvpp_sim.errors import DegenerateInput, GridMismatch, NoEligiblePeers
from bvpp_sim.fcm import FcmResult, fcm
from bvpp_sim.grid import check_same_grid
from bvpp_sim.profiles import SimulatedHousehold, canonical_name

log = logging.getLogger(__name__)

SAVING_TOL = 1e-9  # $; smaller savings count as none


@dataclass(frozen=True)
class HouseholdFeatures:
    avg_daily_energy: float
    avg_daily_cost: float


@dataclass(frozen=True)
class Recommendation:
    peer_id: str
    rating: float
    projected_saving: float
    similarity: float
    plan: dict  # target appliance id -> start interval


@dataclass(frozen=True)
class CampaignSummary:
    total: float
    mean: float
    count: int
    mean_defined: bool


def compute_features(consumption, tariffs: TariffSet) -> dict[str, HouseholdFeatures]:
    """Average daily kWh and TOU cost of gross consumption (no solar).

    ``consumption`` maps household id to LoadProfile.
    """
    items = sorted(consumption.items())
    if not items:
        return {}
    check_same_grid(*(p for _, p in items))
    grid = items[0][1].grid
    tou = tariffs.for_grid(grid).tou
    dh = grid.interval_hours
    out = {}
    for hid, p in items:
        energy = p.values.sum() * dh
        cost = np.dot(tou, p.values) * dh
        out[hid] = HouseholdFeatures(float(energy / grid.num_days), float(cost / grid.num_days))
    return out


def flag_inefficient(group, k: float = 1.0) -> list[str]:
    """Households whose cost sits more than ``k`` residual std-devs above
    the group's least-squares cost-vs-energy line.

    ``group`` maps household id to HouseholdFeatures.  When every energy is
    the same the regression is undefined and the rule becomes
    cost > median + k * MAD.
    """
    if len(group) < 4:
        raise ValueError(f"need at least 4 households to flag, got {len(group)}")
    ids = sorted(group)
    energy = np.array([group[h].avg_daily_energy for h in ids])
    cost = np.array([group[h].avg_daily_cost for h in ids])
    if np.ptp(energy) == 0:
        med = np.median(cost)
        mad = np.median(np.abs(cost - med))
        mask = cost > med + k * mad
    else:
        design = np.column_stack([np.ones_like(energy), energy])
        coef, *_ = np.linalg.lstsq(design, cost, rcond=None)
        resid = cost - design @ coef
        sigma = resid.std()
        mask = resid > k * sigma if sigma > 0 else np.zeros(len(ids), dtype=bool)
    return [h for h, flagged in zip(ids, mask) if flagged]


def _mean_day(h):
    return h.non_shiftable_mean_day() if isinstance(h, SimulatedHousehold) else np.asarray(h, dtype=float)


def lifestyle_similarity(a, b) -> float:
    """1 / (1 + RMS deviation) of the mean-day non-shiftable profiles (kW)."""
    pa, pb = _mean_day(a), _mean_day(b)
    if pa.shape != pb.shape:
        raise GridMismatch("non-shiftable profiles on different grids")
    d = float(np.sqrt(np.mean((pa - pb) ** 2)))
    return 1.0 / (1.0 + d)


def timing_plan(household: SimulatedHousehold) -> dict[str, int]:
    """Most frequent start (earliest on ties) of each shiftable appliance,
    keyed by canonical appliance name."""
    plan = {}
    for app in household.model.appliances:
        if not app.shiftable:
            continue
        counts = Counter(day[app.id] for day in household.starts if app.id in day)
        if counts:
            top = max(counts.values())
            plan[canonical_name(app.name)] = min(s for s, c in counts.items() if c == top)
    return plan


def _tou_by_day(tariffs, grid):
    return tariffs.for_grid(grid).tou.reshape(grid.num_days, grid.intervals_per_day)


def apply_plan(target: SimulatedHousehold, plan) -> tuple[dict, list]:
    """Re-time the target's shiftable appliances to ``plan``.

    Starts are snapped to the nearest start the target's own window and
    curfew allow.  Appliances the plan does not mention keep their habit.
    Returns (applied plan by target appliance id, per-day starts).
    """
    applied = {}
    for app in target.model.appliances:
        key = canonical_name(app.name)
        if app.shiftable and key in plan:
            applied[app.id] = app.nearest_feasible(plan[key])
    starts = [{a: applied.get(a, s) for a, s in day.items()} for day in target.starts]
    return applied, starts


class _RunCosts:
    """Cost of each shiftable appliance of one household over its active
    days, for its habitual starts and for any fixed start."""

    def __init__(self, household: SimulatedHousehold, tariffs: TariffSet):
        grid = household.grid
        tou = _tou_by_day(tariffs, grid)
        cum = np.concatenate([np.zeros((grid.num_days, 1)), np.cumsum(tou, axis=1)], axis=1)
        self.current, self.per_start = {}, {}
        for app in household.model.appliances:
            days = [d for d, day in enumerate(household.starts) if app.id in day]
            if not app.shiftable or not days:
                continue
            n = grid.intervals_per_day - app.duration + 1
            run = (cum[days, app.duration : app.duration + n] - cum[days, :n]) * app.rated_power * grid.interval_hours
            habitual = [household.starts[d][app.id] for d in days]
            self.current[app.id] = float(run[np.arange(len(days)), habitual].sum())
            self.per_start[app.id] = run.sum(axis=0)

    def saving(self, applied) -> float:
        return sum(self.current[a] - float(self.per_start[a][s]) for a, s in applied.items() if a in self.current)


def projected_saving(target: SimulatedHousehold, plan, tariffs: TariffSet, _costs=None):
    """(saving in $ over the horizon, applied plan) when the target follows ``plan``."""
    applied, _ = apply_plan(target, plan)
    costs = _costs or _RunCosts(target, tariffs)
    saving = costs.saving(applied)
    return (saving if saving > SAVING_TOL else 0.0), applied


def recommend(target: SimulatedHousehold, peers, tariffs: TariffSet, n: int = 2) -> list[Recommendation]:
    """Top ``n`` peer timing plans for ``target`` by similarity x saving."""
    if n < 1:
        raise ValueError("n must be >= 1")
    costs = _RunCosts(target, tariffs)
    recs = []
    for peer in peers:
        if peer.id == target.id:
            continue
        saving, applied = projected_saving(target, timing_plan(peer), tariffs, costs)
        if saving <= 0:
            continue
        sim = lifestyle_similarity(target, peer)
        recs.append(Recommendation(peer.id, sim * saving, saving, sim, applied))
    if not recs:
        warnings.warn(f"{target.id}: no peer plan lowers its cost", NoEligiblePeers, stacklevel=2)
        return []
    recs.sort(key=lambda r: (-r.rating, r.peer_id))
    return recs[:n]


def campaign_savings(recommendations) -> CampaignSummary:
    """Savings if every target adopts its top-ranked plan."""
    top = [recs[0].projected_saving for _, recs in sorted(recommendations.items()) if recs]
    total = float(sum(top))
    if not top:
        return CampaignSummary(0.0, 0.0, 0, False)
    return CampaignSummary(total, total / len(top), len(top), True)


@dataclass(eq=False)
class KnowledgeSharingResult:
    ids: list
    features: dict
    clustering: FcmResult | None
    labels: dict
    membership: dict
    flagged: list
    recommendations: dict = field(default_factory=dict)
    summary: CampaignSummary | None = None


def knowledge_sharing(
    households,
    tariffs: TariffSet,
    clusters: int = 3,
    fuzzifier: float = 2.0,
    tol: float = 1e-6,
    max_iter: int = 300,
    flag_k: float = 1.0,
    top_n: int = 2,
    seed: int = 0,
) -> KnowledgeSharingResult:
    """Cluster, flag and recommend over a list of SimulatedHousehold."""
    by_id = {h.id: h for h in households}
    ids = sorted(by_id)
    features = compute_features({h: by_id[h].consumption() for h in ids}, tariffs)
    points = np.array([[features[h].avg_daily_energy, features[h].avg_daily_cost] for h in ids])

    result = None
    try:
        result = fcm(points, c=clusters, m=fuzzifier, tol=tol, max_iter=max_iter, seed=seed)
        labels_arr, u = result.hard_labels, result.membership
    except DegenerateInput as exc:
        log.warning("clustering skipped (%s); treating the fleet as one group", exc)
        labels_arr = np.zeros(len(ids), dtype=int)
        u = np.zeros((len(ids), clusters))
        u[:, 0] = 1.0
    labels = {h: int(l) for h, l in zip(ids, labels_arr)}
    membership = {h: u[i] for i, h in enumerate(ids)}

    flagged = []
    for k in range(clusters):
        group = {h: features[h] for h in ids if labels[h] == k}
        if len(group) >= 4:
            flagged.extend(flag_inefficient(group, flag_k))
        elif group:
            log.info("cluster %d has %d households; too small to flag", k, len(group))
    flagged.sort()
    flagged_set = set(flagged)

    recs = {}
    for target in flagged:
        peers = [by_id[h] for h in ids if labels[h] == labels[target] and h not in flagged_set]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NoEligiblePeers)
            recs[target] = recommend(by_id[target], peers, tariffs, top_n)
        if not recs[target]:
            warnings.warn(f"{target}: no eligible peer plans", NoEligiblePeers, stacklevel=2)
    return KnowledgeSharingResult(ids, features, result, labels, membership, flagged, recs, campaign_savings(recs))
