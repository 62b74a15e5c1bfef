"""fscp edge-cache bytes and power as the mean delay threshold moves from 45 to 70 ms.

Writes results/threshold_sweep.csv (+ .json sidecar).
"""
import argparse
from pathlib import Path

from fscp.experiments import THRESHOLD_POINTS, GenSpec, run_sweep, sidecar, write_sweep
from fscp.solver import SolverOptions

ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
ap.add_argument("--seed", type=int, default=0)
ap.add_argument("--fraction", type=float, default=1.0)
ap.add_argument("--time-budget", type=float, default=300.0)
ap.add_argument("--out", default="results/threshold_sweep.csv")
args = ap.parse_args()

g = GenSpec(seed=args.seed, active_user_fraction=args.fraction)
opts = SolverOptions(time_budget_s=args.time_budget)
rows = run_sweep(g, "delay_threshold", THRESHOLD_POINTS, ["fscp"], opts)
Path(args.out).parent.mkdir(parents=True, exist_ok=True)
write_sweep(args.out, rows, sidecar(g, "delay_threshold", THRESHOLD_POINTS, ["fscp"], opts))
for pt, r in zip(THRESHOLD_POINTS, rows):
    print(f"mean {pt * 1e3:4.0f} ms  cache={r.ec_cache_bytes_total:>12d} B  power={r.total_power_w:7.1f} W")
