"""Power, hit rate, delay and midhaul bandwidth versus active users for fscp and the baselines.

Writes results/load_sweep.csv (+ .json sidecar).
"""
import argparse
from pathlib import Path

from fscp.experiments import LOAD_POINTS, GenSpec, run_sweep, sidecar, write_sweep
from fscp.solver import SolverOptions

ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
ap.add_argument("--seed", type=int, default=0)
ap.add_argument("--time-budget", type=float, default=300.0)
ap.add_argument("--modes", nargs="+", default=["fscp", "all_ec", "all_cc"])
ap.add_argument("--out", default="results/load_sweep.csv")
args = ap.parse_args()

g = GenSpec(seed=args.seed)
opts = SolverOptions(time_budget_s=args.time_budget)
rows = run_sweep(g, "load", LOAD_POINTS, args.modes, opts)
Path(args.out).parent.mkdir(parents=True, exist_ok=True)
write_sweep(args.out, rows, sidecar(g, "load", LOAD_POINTS, args.modes, opts))
for r in rows:
    print(f"{r.mode:7s} users={r.active_users:3d} power={r.total_power_w:7.1f} W hit={r.hit_rate:.3f} "
          f"proven={r.proven_optimal}")
