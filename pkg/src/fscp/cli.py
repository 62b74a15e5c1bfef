"""Command-line front end: ``fscp {solve,sweep,validate,compare,gen}``.

Exit codes: 0 success, 1 usage or input error, 2 infeasible or over limits,
3 internal error.  Every error is also printed to stderr as one CSV record
``error,<exit code>,<kind>,<message>``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import platform
import sys
import time
from pathlib import Path

from .assignment import Assignment
from .experiments import (AXES, LOAD_POINTS, REQUEST_MODELS, THRESHOLD_POINTS, GenSpec, generate_document,
                          metrics, rows_to_csv, run_sweep, sidecar, tiny_random_scenario, write_sweep)
from .feasibility import check
from .oracle import OracleLimitError, enumerate_optimal
from .scenario import ScenarioError, dumps, load_scenario
from .solver import SolverError, SolverOptions, bypassed_constraints, solve

MODES = ("fscp", "all_ec", "all_cc", "greedy")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser, scenario: bool = True) -> None:
    if scenario:
        p.add_argument("--scenario", help="scenario JSON document")
    p.add_argument("--out", help="output path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-budget", type=float, default=60.0, help="seconds per solve")
    p.add_argument("--mode", choices=MODES, default="fscp")
    p.add_argument("--workers", type=int, default=1, help="solver worker processes")


def _genspec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fraction", type=float, default=1.0, help="active user fraction")
    p.add_argument("--n-users", type=int)
    p.add_argument("--request-model", choices=REQUEST_MODELS, default="uniform")
    p.add_argument("--threshold-mean", type=float, default=0.060)
    p.add_argument("--threshold-spread", type=float, default=0.010)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fscp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("solve", help="solve one scenario")
    _common(p)
    p.add_argument("--metrics", help="metrics CSV path (default: <out>.csv)")
    p.add_argument("--timing", action="store_true", help="fill wall_time_s")

    p = sub.add_parser("sweep", help="run a load or delay-threshold sweep")
    _common(p, scenario=False)
    _genspec_flags(p)
    p.add_argument("--axis", choices=AXES, default="load")
    p.add_argument("--points", type=float, nargs="+")
    p.add_argument("--modes", nargs="+", choices=MODES, default=["fscp", "all_ec", "all_cc"])
    p.add_argument("--timing", action="store_true", help="fill wall_time_s")

    p = sub.add_parser("validate", help="check an assignment against a scenario")
    _common(p)
    p.add_argument("--assignment", required=True, help="assignment or solution JSON")
    p.add_argument("--bypass", nargs="*", default=[], help="constraint ids to skip")

    p = sub.add_parser("compare", help="solve and enumerate_optimal side by side")
    _common(p)
    p.add_argument("--tiny-seed", type=int, help="use a generated tiny instance instead of --scenario")

    p = sub.add_parser("gen", help="write a generated scenario document")
    _common(p, scenario=False)
    _genspec_flags(p)
    return ap


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _opts(ns) -> SolverOptions:
    return SolverOptions(mode=ns.mode, time_budget_s=ns.time_budget, seed=ns.seed, parallel_workers=ns.workers)


def _genspec(ns) -> GenSpec:
    return GenSpec(active_user_fraction=ns.fraction, n_users=ns.n_users, seed=ns.seed,
                   threshold_mean_s=ns.threshold_mean, threshold_spread_s=ns.threshold_spread,
                   request_model=ns.request_model)


def _need_scenario(ns):
    if not ns.scenario:
        raise UsageError("--scenario is required")
    return load_scenario(ns.scenario)


def cmd_solve(ns) -> int:
    s = _need_scenario(ns)
    sol = solve(s, _opts(ns))
    row = metrics(sol, s)
    out = ns.out or "solution.json"
    _write(out, json.dumps(sol.to_dict(), indent=2, sort_keys=True) + "\n")
    line = rows_to_csv([row], ns.timing)
    mpath = ns.metrics or (str(Path(out).with_suffix(".csv")) if out != "-" else None)
    if mpath:
        _write(mpath, line)
    sys.stdout.write(line.splitlines()[1] + "\n")
    return 0


def cmd_sweep(ns) -> int:
    g = _genspec(ns)
    points = ns.points or (LOAD_POINTS if ns.axis == "load" else THRESHOLD_POINTS)
    opts = _opts(ns)
    t0 = time.time()
    rows = run_sweep(g, ns.axis, points, ns.modes, opts)
    if ns.out and ns.out != "-":
        meta = sidecar(g, ns.axis, points, ns.modes, opts,
                       run={"started_unix": t0, "elapsed_s": time.time() - t0, "python": platform.python_version()})
        write_sweep(ns.out, rows, meta, ns.timing)
    else:
        sys.stdout.write(rows_to_csv(rows, ns.timing))
    return 0


def cmd_validate(ns) -> int:
    s = _need_scenario(ns)
    doc = json.loads(Path(ns.assignment).read_text(encoding="utf-8"))
    a = Assignment.from_dict(doc.get("assignment", doc))
    bypass = list(ns.bypass) or list(bypassed_constraints(ns.mode))
    found = check(a, s, bypass=bypass)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for v in found:
        w.writerow(v.csv_row())
    _write(ns.out, buf.getvalue())
    return 2 if found else 0


def cmd_compare(ns) -> int:
    if ns.tiny_seed is not None:
        s = tiny_random_scenario(ns.tiny_seed)
    else:
        s = _need_scenario(ns)
    oracle = enumerate_optimal(s, mode=ns.mode)
    sol = solve(s, _opts(ns))
    same = (sol.admitted_count == oracle.admitted_count
            and abs(sol.total_power_w - oracle.total_power_w) <= 1e-6)
    verdict = "MATCH" if same else "MISMATCH"
    _write(ns.out, f"{verdict} solve=({sol.admitted_count},{sol.total_power_w:.6f}) "
                   f"oracle=({oracle.admitted_count},{oracle.total_power_w:.6f})\n")
    return 0 if same else 3


def cmd_gen(ns) -> int:
    _write(ns.out, dumps(generate_document(_genspec(ns))))
    return 0


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "validate": cmd_validate, "compare": cmd_compare, "gen": cmd_gen}


def _error(code: int, kind: str, exc: BaseException) -> int:
    msg = " ".join(str(exc).split())
    w = csv.writer(sys.stderr, lineterminator="\n")
    w.writerow(["error", code, kind, msg])
    return code


def run(argv: list[str] | None = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        if getattr(ns, "workers", 1) < 1:
            raise UsageError("--workers must be at least 1")
        return COMMANDS[ns.verb](ns)
    except OracleLimitError as exc:
        return _error(2, "OracleLimitError", exc)
    except (UsageError, ScenarioError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        return _error(1, type(exc).__name__, exc)
    except SolverError as exc:
        return _error(3, "SolverError", exc)
    except Exception as exc:  # noqa: BLE001
        return _error(3, type(exc).__name__, exc)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
