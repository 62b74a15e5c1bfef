"""Exact search versus brute-force enumeration on random tiny instances."""
import argparse
import time

from fscp.experiments import tiny_random_scenario
from fscp.oracle import enumerate_optimal
from fscp.solver import SolverOptions, solve

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--trials", type=int, default=100)
ap.add_argument("--first-seed", type=int, default=0)
ap.add_argument("--modes", nargs="+", default=["fscp", "all_ec", "all_cc"])
args = ap.parse_args()

for mode in args.modes:
    t0 = time.perf_counter()
    bad = []
    for seed in range(args.first_seed, args.first_seed + args.trials):
        s = tiny_random_scenario(seed)
        a, b = solve(s, SolverOptions(mode=mode)), enumerate_optimal(s, mode=mode)
        if a.admitted_count != b.admitted_count or abs(a.total_power_w - b.total_power_w) > 1e-6:
            bad.append(seed)
    print(f"{mode}: {args.trials - len(bad)}/{args.trials} match ({time.perf_counter() - t0:.1f} s)"
          + (f", mismatching seeds {bad}" if bad else ""))
