"""Instance generation, per-solution metrics and load/threshold sweeps."""
from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

from .assignment import ec_cache_bytes
from .delay import total_user_delay
from .feasibility import wavelength_loads
from .scenario import Scenario, scenario_from_dict, table1_document
from .solver import Solution, SolverOptions, solve

CSV_HEADER = ("mode", "active_users", "total_power_w", "hit_rate", "avg_delay_s", "midhaul_bw_mbps",
              "ec_cache_bytes_total", "wall_time_s", "proven_optimal")
REQUEST_MODELS = ("uniform", "pareto_80_20")


@dataclass(frozen=True)
class GenSpec:
    """Recipe for a generated instance on the default topology.

    ``n_users`` overrides ``active_user_fraction`` when set.
    """
    active_user_fraction: float = 1.0
    n_users: Optional[int] = None
    seed: int = 0
    threshold_mean_s: float = 0.060
    threshold_spread_s: float = 0.010
    request_model: str = "uniform"
    catalog_size: int = 100
    file_size_bytes: int = 20_000_000
    pool_size: int = 95
    n_ec: Optional[int] = None
    cells_per_ec: Optional[int] = None
    head_fraction: float = 0.2
    head_share: float = 0.8

    def __post_init__(self):
        if self.request_model not in REQUEST_MODELS:
            raise ValueError(f"unknown request model {self.request_model!r}")
        if not 0.0 <= self.active_user_fraction <= 1.0:
            raise ValueError("active_user_fraction must lie in [0, 1]")
        if self.n_users is not None and not 0 <= self.n_users <= self.pool_size:
            raise ValueError("n_users must be within [0, pool_size]")
        if self.catalog_size < 1 or self.file_size_bytes < 1:
            raise ValueError("catalog_size and file_size_bytes must be positive")
        if self.threshold_mean_s - self.threshold_spread_s <= 0:
            raise ValueError("thresholds must stay positive")

    @property
    def user_count(self) -> int:
        if self.n_users is not None:
            return self.n_users
        return int(round(self.active_user_fraction * self.pool_size))


def _base_document(g: GenSpec) -> dict:
    doc = table1_document()
    topo = doc["topology"]
    ecs = topo["edge_clouds"]
    if g.n_ec is not None:
        ecs = ecs[:g.n_ec] if g.n_ec <= len(ecs) else [
            {**ecs[0], "id": r, "cells": []} for r in range(g.n_ec)]
    if g.cells_per_ec is not None or g.n_ec is not None:
        k = g.cells_per_ec or len(doc["topology"]["edge_clouds"][0]["cells"])
        ecs = [{**e, "cells": [{"id": e["id"] * k + j, "radius_m": 250.0, "rb_per_user": 1}
                               for j in range(k)]} for e in ecs]
    topo["edge_clouds"] = ecs
    doc["files"] = [{"id": f, "size_bytes": g.file_size_bytes} for f in range(g.catalog_size)]
    return doc


def generate_document(g: GenSpec) -> dict:
    """Scenario document for ``g``.  Users are a prefix of a fixed pool, so load points nest."""
    doc = _base_document(g)
    cells = [(c["id"], e["id"], c["radius_m"]) for e in doc["topology"]["edge_clouds"] for c in e["cells"]]
    files = [f["id"] for f in doc["files"]]
    rng = random.Random(g.seed)
    pool = []
    for k in range(g.pool_size):
        cid, rid, radius = cells[k % len(cells)]
        pool.append({"cell": cid, "ec": rid, "dist": rng.uniform(0.0, radius), "u": rng.random(),
                     "head": rng.random(), "any": rng.random()})
    n_head = max(1, round(g.head_fraction * len(files)))
    users = []
    per_ec: dict = {}
    for k, p in enumerate(pool[:g.user_count]):
        if g.request_model == "uniform":
            f = files[int(p["any"] * len(files))]
        else:
            per_ec.setdefault(p["ec"], []).append(k)
        users.append({"id": k, "cell_id": p["cell"], "distance_m": round(p["dist"], 3),
                      "demanded_file": f if g.request_model == "uniform" else -1,
                      "delay_threshold_s": round(g.threshold_mean_s + g.threshold_spread_s * (2 * p["u"] - 1), 9)})
    if g.request_model == "pareto_80_20":
        for rid, ks in per_ec.items():
            n_hot = round(g.head_share * len(ks))
            for j, k in enumerate(ks):
                p = pool[k]
                if j < n_hot:
                    f = files[int(p["head"] * n_head)]
                else:
                    f = files[n_head + int(p["any"] * (len(files) - n_head))]
                users[k]["demanded_file"] = f
    doc["users"] = users
    return doc


def generate_scenario(g: GenSpec) -> Scenario:
    return scenario_from_dict(generate_document(g))


def tiny_random_document(seed: int) -> dict:
    """Random instance inside the oracle limits (F_UP = F_CP = 2, <= 2 ECs x 2 cells, <= 4 users).

    Parameters are drawn so that capacities, bandwidth, cache size and delay all bind
    on some seeds, and edge caching is sometimes the faster path.
    """
    from .split_maps import linear_split_tables

    rng = random.Random(seed)
    n_ec = rng.randint(1, 2)
    ecs, cell_ids = [], []
    for r in range(n_ec):
        cells = []
        for k in range(rng.randint(1, 2)):
            cid = len(cell_ids)
            cell_ids.append(cid)
            cells.append({"id": cid, "radius_m": 500.0, "rb_per_user": rng.randint(1, 2)})
        ecs.append({"id": r, "du_count": rng.randint(1, 2), "du_cp_capacity": rng.randint(1, 3),
                    "du_up_capacity": rng.randint(2, 5), "cache_capacity_bytes": rng.choice([0, 1000, 2000, 4000]),
                    "cells": cells})
    files = [{"id": f, "size_bytes": rng.choice([1000, 2000])} for f in range(3)]
    users = [{"id": u, "cell_id": rng.choice(cell_ids), "distance_m": round(rng.uniform(0, 500), 1),
              "demanded_file": rng.randrange(3), "delay_threshold_s": round(rng.uniform(0.012, 0.03), 4)}
             for u in range(rng.randint(1, 4))]
    ub = sorted((round(rng.uniform(1, 20), 2) for _ in range(3)), reverse=True)
    cb = sorted((round(rng.uniform(50, 800), 1) for _ in range(2)), reverse=True) + [0.0]
    a_up = sorted((rng.randint(100, 1200) for _ in range(2)), reverse=True) + [0]
    b_cp = sorted((rng.randint(500, 8000) for _ in range(2)), reverse=True) + [0]
    vol = [[a_up[p] + b_cp[q] for q in range(3)] for p in range(3)]
    tables = linear_split_tables(2, 2, user_bw=ub, cell_bw=cb, volume=vol,
                                 cc_delay_s=rng.choice([50e-6, 200e-6]), ec_delay_s=rng.choice([100e-6, 400e-6]))
    return {
        "version": 1,
        "topology": {"f_up": 2, "f_cp": 2, "wavelengths": rng.randint(1, 2),
                     "wavelength_capacity_mbps": float(rng.choice([600, 1200, 5000])),
                     "central_cloud": {"du_count": rng.randint(1, 3), "du_cp_capacity": rng.randint(3, 5),
                                       "du_up_capacity": rng.randint(3, 6), "cache_capacity_bytes": 10_000},
                     "edge_clouds": ecs},
        "users": users,
        "files": files,
        "split_tables": tables.to_dict(),
        "power_params": {"p_du_cc": float(rng.choice([60, 100])), "p_du_ec": float(rng.choice([30, 50, 80])),
                         "p_lc": 20.0, "p_onu": 5.0, "p_tx": 20.0, "p_fh": 40.0,
                         "p_cool_cc": float(rng.choice([0, 15])), "p_cool_ec": float(rng.choice([0, 10])),
                         "p_cache_cc": 20.0, "p_cache_ec": float(rng.choice([5, 30])),
                         "cc_cache_always_on": rng.random() < 0.7},
        "delay_params": {"t_of_s": 125e-6, "s_of_bytes": rng.choice([2000, 8000]), "delay_payload_bytes": 200,
                         "d_cache_cc_s": rng.choice([0.004, 0.008]), "d_cache_ec_s": rng.choice([0.002, 0.006, 0.01]),
                         "d_sw_eth_s": 0.002, "d_sw_opt_s": 0.001},
        "solver_defaults": {"mode": "fscp", "time_budget_s": 30.0,
                            "split_once_relation": rng.choice(["eq", "eq", "le"])},
    }


def tiny_random_scenario(seed: int) -> Scenario:
    return scenario_from_dict(tiny_random_document(seed))


@dataclass(frozen=True)
class MetricsRow:
    mode: str
    active_users: int
    total_power_w: float
    hit_rate: float
    avg_delay_s: Optional[float]
    midhaul_bw_mbps: float
    ec_cache_bytes_total: int
    wall_time_s: float
    proven_optimal: bool
    admitted: int = 0
    served: int = 0

    def csv_fields(self, timing: bool = False) -> list[str]:
        return [self.mode, str(self.active_users), _num(self.total_power_w), _num(self.hit_rate),
                "" if self.avg_delay_s is None else _num(self.avg_delay_s, 9), _num(self.midhaul_bw_mbps),
                str(self.ec_cache_bytes_total), _num(self.wall_time_s, 3) if timing else "",
                "true" if self.proven_optimal else "false"]


def _num(x: float, digits: int = 6) -> str:
    return f"{x:.{digits}f}"


def metrics(sol: Solution, s: Scenario) -> MetricsRow:
    """Row for one solution, recomputed from its assignment.

    Users whose delay bound is waived by the mode and missed count as admitted for
    delay and bandwidth but not as served for the hit rate.
    """
    a = sol.assignment
    n = len(s.users)
    admitted = sorted(a.admitted)
    served = len(admitted) - len(sol.dropped)
    delays = [total_user_delay(u, a, s) for u in admitted]
    return MetricsRow(
        mode=sol.mode,
        active_users=n,
        total_power_w=sol.total_power_w,
        hit_rate=served / n if n else 0.0,
        avg_delay_s=sum(delays) / len(delays) if delays else None,
        midhaul_bw_mbps=sum(wavelength_loads(a, s).values()),
        ec_cache_bytes_total=sum(ec_cache_bytes(a, s).values()),
        wall_time_s=sol.wall_time_s,
        proven_optimal=sol.proven_optimal,
        admitted=len(admitted),
        served=served,
    )


LOAD_POINTS = (0.2, 0.4, 0.6, 0.8, 1.0)
THRESHOLD_POINTS = (0.045, 0.050, 0.055, 0.060, 0.065, 0.070)
AXES = ("load", "delay_threshold")


class SweepError(RuntimeError):
    pass


def point_spec(template: GenSpec, axis: str, point: float) -> GenSpec:
    if axis == "load":
        return replace(template, active_user_fraction=float(point), n_users=None)
    if axis == "delay_threshold":
        return replace(template, threshold_mean_s=float(point))
    raise ValueError(f"unknown sweep axis {axis!r}")


def run_sweep(template: GenSpec, axis: str, points: Sequence[float], modes: Sequence[str],
              opts: SolverOptions, *, keep_solutions: bool = False):
    """One row per (point, mode), in that order.  All modes of a point see the same instance."""
    rows, sols = [], []
    for point in points:
        g = point_spec(template, axis, point)
        s = generate_scenario(g)
        for mode in modes:
            try:
                sol = solve(s, replace(opts, mode=mode))
            except Exception as exc:
                raise SweepError(f"{axis}={point} mode={mode}: {exc}") from exc
            rows.append(metrics(sol, s))
            if keep_solutions:
                sols.append((g, s, sol))
    return (rows, sols) if keep_solutions else rows


def rows_to_csv(rows: Sequence[MetricsRow], timing: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_fields(timing))
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def sidecar(template: GenSpec, axis: str, points: Sequence[float], modes: Sequence[str],
            opts: SolverOptions, **extra) -> dict:
    return {"genspec": asdict(template), "seed": template.seed, "axis": axis, "points": list(points),
            "modes": list(modes), "solver": asdict(opts), **extra}


def write_sweep(path: str, rows: Sequence[MetricsRow], meta: dict, timing: bool = False) -> None:
    """CSV at ``path`` plus ``path + '.json'`` holding the resolved recipe."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows, timing))
    with open(path + ".json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _collapse_tables(t, keep=(0, 2, 3)):
    """Three-function chains reduced to two by fusing the first two functions."""
    from .split_maps import SplitTables

    f = t.f_up
    up_d, cp_d = t.per_function_delay_cc_s[:f], t.per_function_delay_cc_s[f:]
    up_e, cp_e = t.per_function_delay_ec_s[:f], t.per_function_delay_ec_s[f:]

    def fuse(xs):
        return (xs[0] + xs[1], xs[2])

    return SplitTables(
        up_at_ec=(0, 1, 2), cp_at_ec=(0, 1, 2),
        user_bw_mbps_per_rb=tuple(t.user_bw_mbps_per_rb[k] for k in keep),
        cell_bw_mbps=tuple(t.cell_bw_mbps[k] for k in keep),
        cc_volume_bytes=tuple(tuple(t.cc_volume_bytes[i][j] for j in keep) for i in keep),
        per_function_delay_cc_s=fuse(up_d) + fuse(cp_d),
        per_function_delay_ec_s=fuse(up_e) + fuse(cp_e),
    )


def small_analog_document(g: GenSpec, max_users: int = 4) -> dict:
    """Oracle-sized counterpart of a default-topology point.

    Two ECs of two cells each, two-function chains, three files, and
    ``round(fraction * max_users)`` users drawn like the full-size generator.
    Capacities are those of the full topology scaled to two-function chains.
    """
    from .split_maps import SplitTables

    n = max(1, int(round(g.user_count / g.pool_size * max_users)))
    small = replace(g, n_users=n, pool_size=max_users, n_ec=2, cells_per_ec=2, catalog_size=3)
    doc = generate_document(small)
    topo = doc["topology"]
    topo["f_up"] = topo["f_cp"] = 2
    topo["wavelengths"] = 2
    topo["central_cloud"].update(du_count=2, du_cp_capacity=2 * 8, du_up_capacity=2 * 30)
    for ec in topo["edge_clouds"]:
        ec.update(du_count=2, du_cp_capacity=2, du_up_capacity=10, cache_capacity_bytes=2 * g.file_size_bytes)
    doc["split_tables"] = _collapse_tables(SplitTables.from_dict(doc["split_tables"])).to_dict()
    return doc


def small_analog_scenario(g: GenSpec, max_users: int = 4) -> Scenario:
    return scenario_from_dict(small_analog_document(g, max_users))
