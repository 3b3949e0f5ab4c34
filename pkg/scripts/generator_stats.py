"""Activation frequency of one appliance over many simulated days,
against its configured probability (chi-square goodness of fit).

    python scripts/generator_stats.py [--days 10000] [--prob 0.6] [--seed 1]
"""

import argparse

from scipy import stats

from bvpp_sim.grid import TimeGrid
from bvpp_sim.profiles import ApplianceSpec, Category, Habit, HouseholdModel, draw_starts


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--days", type=int, default=10_000)
    ap.add_argument("--prob", type=float, default=0.6)
    ap.add_argument("--jitter", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    grid = TimeGrid(60, args.days)
    app = ApplianceSpec("wm", "washing machine", 1.0, 2, Category.SHIFTABLE, 7, 20, 12)
    model = HouseholdModel("h", [app], {"wm": Habit(args.prob, args.jitter)}, 0.0, args.seed)
    starts = draw_starts(model, grid)
    on = sum("wm" in d for d in starts)
    expected = [args.days * args.prob, args.days * (1 - args.prob)]
    res = stats.chisquare([on, args.days - on], expected)
    print(f"active days {on}/{args.days} (expected {expected[0]:.0f})  chi2 {res.statistic:.3f}  p {res.pvalue:.3f}")
    hist = {}
    for d in starts:
        if "wm" in d:
            hist[d["wm"]] = hist.get(d["wm"], 0) + 1
    for s in sorted(hist):
        print(f"  start {s:2d}  {hist[s]:6d}")


if __name__ == "__main__":
    main()
