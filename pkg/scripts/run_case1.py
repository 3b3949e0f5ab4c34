"""Run the 50-building market scenario and print the settlement.

    python scripts/run_case1.py [--config configs/case1.yaml] [--out DIR]
"""

import argparse
import time

from bvpp_sim import config
from bvpp_sim.pipeline import cmd_case1, cmd_generate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="configs/case1.yaml")
    ap.add_argument("--out")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()

    cfg = config.load(args.config, args.seed, args.out)
    t0 = time.perf_counter()
    cmd_generate(cfg)
    res = cmd_case1(cfg)
    s = res["settlement"]
    surplus = res["bids"].quantity.sum()
    print(f"buildings          {len(s.building_payments)}")
    print(f"energy sold        {surplus:.1f} kWh")
    print(f"market revenue     {s.market_revenue:.2f} $")
    print(f"building payments  {sum(s.building_payments.values()):.2f} $")
    print(f"operator profit    {s.operator_profit:.2f} $ ({s.operator_share:.1%})")
    print(f"outputs in {cfg.output_dir} ({time.perf_counter() - t0:.2f} s)")


if __name__ == "__main__":
    main()
