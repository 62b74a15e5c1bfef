"""Brute-force reference solver for tiny instances.

Shares nothing with the search code except the scenario/delay/power/feasibility
models: every admission set, split pair and cache bit is enumerated, DU counts come
from trying every grouping of a site's items, and wavelengths from every grouping of
the active ECs.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from itertools import product

from .assignment import Assignment, canonical_order
from .delay import delay_components
from .feasibility import check
from .power import total_power
from .scenario import Scenario
from .split_maps import CC, EC


class OracleLimitError(ValueError):
    pass


@dataclass(frozen=True)
class OracleLimits:
    max_ecs: int = 2
    max_cells_per_ec: int = 2
    max_users: int = 4
    max_f: int = 2
    max_files: int = 3
    max_du_count: int = 4


def _check_limits(s: Scenario, lim: OracleLimits):
    problems = []
    if len(s.edge_clouds) > lim.max_ecs:
        problems.append(f"{len(s.edge_clouds)} ECs > {lim.max_ecs}")
    if any(len(ec.cells) > lim.max_cells_per_ec for ec in s.edge_clouds):
        problems.append(f"more than {lim.max_cells_per_ec} cells in an EC")
    if len(s.users) > lim.max_users:
        problems.append(f"{len(s.users)} users > {lim.max_users}")
    if max(s.f_up, s.f_cp) > lim.max_f:
        problems.append(f"F_UP/F_CP above {lim.max_f}")
    if len({u.demanded_file for u in s.users}) > lim.max_files:
        problems.append(f"more than {lim.max_files} requested files")
    if max([s.central_cloud.du_count] + [ec.du_count for ec in s.edge_clouds]) > lim.max_du_count:
        problems.append(f"a site has more than {lim.max_du_count} DUs")
    if problems:
        raise OracleLimitError("instance exceeds oracle limits: " + "; ".join(problems))


def _groupings(n: int, max_blocks: int):
    """Every labelling of n items with blocks numbered in order of first use."""
    def rec(i, used, acc):
        if i == n:
            yield tuple(acc)
            return
        for b in range(min(used + 1, max_blocks)):
            yield from rec(i + 1, max(used, b + 1), acc + [b])
    yield from rec(0, 0, [])


def _site_min(items: tuple, cap_cp: int, cap_up: int, du_count: int, memo: dict):
    """Fewest DUs holding all (cp, up) items, with one labelling achieving it, or None."""
    key = (items, cap_cp, cap_up, du_count)
    if key in memo:
        return memo[key]
    best = None
    for lab in _groupings(len(items), du_count):
        k = max(lab) + 1 if lab else 0
        if best is not None and k >= best[0]:
            continue
        cp = [0] * k
        up = [0] * k
        for (a, b), d in zip(items, lab):
            cp[d] += a
            up[d] += b
        if all(x <= cap_cp for x in cp) and all(x <= cap_up for x in up):
            best = (k, lab)
    memo[key] = best
    return best


def _user_choices(mode: str, f_up: int):
    if mode == "all_ec":
        return [(f_up, 1)]
    if mode == "all_cc":
        return [(0, 0)]
    return [(p, b) for p in range(f_up + 1) for b in (0, 1)]


def _cell_qs(mode: str, f_cp: int):
    if mode == "all_ec":
        return [f_cp]
    if mode == "all_cc":
        return [0]
    return list(range(f_cp + 1))


def enumerate_optimal(s: Scenario, limits: OracleLimits = OracleLimits(), *, mode: str = "fscp",
                      split_once: str | None = None):
    """Lexicographic optimum (most users, then least power, then smallest canonical order)."""
    from .solver import Solution, bypassed_constraints

    _check_limits(s, limits)
    t0 = time.perf_counter()
    split_once = split_once or s.solver_defaults.split_once_relation
    bypass = bypassed_constraints(mode)
    t = s.split_tables
    cc = s.central_cloud
    cells = [c for c in s.cells if s.users_by_cell[c.id]]
    memo: dict = {}

    # per cell: every (q, per-user choice or None) combination, all-dropped counted once
    per_cell = []
    for c in cells:
        users = s.users_by_cell[c.id]
        opts = [(None, ())]
        for q in _cell_qs(mode, s.f_cp):
            for combo in product([None] + _user_choices(mode, s.f_up), repeat=len(users)):
                if all(x is None for x in combo):
                    continue
                if not _local_ok(q, combo, s.f_up, s.f_cp, split_once, bypass):
                    continue
                opts.append((q, tuple(zip(users, combo))))
        per_cell.append(opts)

    best_key = None
    best = None
    for pick in product(*per_cell):
        admitted = [(u, pb) for q, us in pick if q is not None for u, pb in us if pb is not None]
        n_adm = len(admitted)
        if best_key is not None and n_adm < best_key[0]:
            continue
        q_of = {c.id: q for c, (q, _) in zip(cells, pick) if q is not None}
        live_ecs = sorted({s.cell(cid).ec_id for cid in q_of})
        for lab in _groupings(len(live_ecs), max(s.wavelengths, 0)):
            wl = dict(zip(live_ecs, lab))
            cand = _realise(s, q_of, admitted, wl, bypass, memo)
            if cand is None:
                continue
            a, power = cand
            # C12 violations only count when the mode waives the delay constraint
            viol = sum(1 for v in check(a, s) if v.constraint_id == "C12") if "C12" in bypass else 0
            key = (n_adm, -power, viol)
            if best_key is None or key[0] > best_key[0]:
                better = True
            elif key[0] < best_key[0]:
                better = False
            elif power < -best_key[1] - 1e-9:
                better = True
            elif power > -best_key[1] + 1e-9:
                better = False
            else:
                better = (viol, canonical_order(a)) < (best_key[2], canonical_order(best))
            if better:
                best_key, best = key, a
    if best is None:
        best = Assignment()
    leftover = check(best, s, bypass=bypass)
    if leftover:
        raise AssertionError(f"oracle produced an infeasible assignment: {leftover[0]}")
    p = total_power(best, s)
    dropped = ()
    if "C12" in bypass:
        dropped = tuple(sorted(int(v.subject.split()[1]) for v in check(best, s) if v.constraint_id == "C12"))
    return Solution(best, p, len(best.admitted), True, p, time.perf_counter() - t0, mode, dropped, bypass)


def _local_ok(q, combo, f_up, f_cp, split_once, bypass) -> bool:
    m = f_up + 1
    for pb in combo:
        if pb is None:
            continue
        p, b = pb
        if not (p - f_up <= m * (1 - b) and p - f_up >= -m * (1 - b)):
            return False
        if "C1" not in bypass:
            n = (p < f_up) + (q < f_cp)
            if (split_once == "eq" and n != 1) or (split_once != "eq" and n > 1):
                return False
    return True


def _realise(s, q_of, admitted, wl, bypass, memo):
    """Cheapest concrete assignment for fixed splits and wavelengths, or None if infeasible."""
    t = s.split_tables
    cc = s.central_cloud
    f_up, f_cp = s.f_up, s.f_cp
    users = dict(admitted)
    # C8, C11 and C12 do not depend on DU indices
    for w in set(wl.values()):
        load = 0.0
        for r, ww in wl.items():
            if ww != w:
                continue
            for cid, q in q_of.items():
                if s.cell(cid).ec_id != r:
                    continue
                cell = s.cell(cid)
                load += t.cell_midhaul_bw(q) + sum(t.user_midhaul_bw(users[u][0], cell.rb_per_user)
                                                   for u in s.users_by_cell[cid] if u in users)
        if load > s.wavelength_capacity_mbps + 1e-9:
            return None
    for ec in s.edge_clouds:
        files = {s.user(u).demanded_file for u, (p, b) in users.items() if b and s.ec_of_user(u) == ec.id}
        if sum(s.file(f).size_bytes for f in files) > ec.cache_capacity_bytes:
            return None
    if "C12" not in bypass:
        for u, (p, b) in users.items():
            us = s.user(u)
            cell = s.cell(us.cell_id)
            r = cell.ec_id
            div = s.delay_params.frame_share_divisor or sum(
                len(s.ec(x).cells) for x in wl if wl[x] == wl[r])
            d = sum(delay_components(p, q_of[us.cell_id], b, s.file(us.demanded_file).size_bytes,
                                     cell.rb_per_user, us.distance_m, div, t, s.delay_params).values())
            if d > us.delay_threshold_s:
                return None
    # DU indices, site by site; linked users travel with their cell
    ec_up_du, cc_up_du, ec_cp_du, cc_cp_du = {}, {}, {}, {}
    sites = [(EC, ec.id, ec.du_count, ec.du_cp_capacity, ec.du_up_capacity) for ec in s.edge_clouds] + \
            [(CC, None, cc.du_count, cc.du_cp_capacity, cc.du_up_capacity)]
    for site, r, n_du, cap_cp, cap_up in sites:
        items, owners = [], []
        for cid, q in sorted(q_of.items()):
            if site == EC and s.cell(cid).ec_id != r:
                continue
            linked = [u for u in s.users_by_cell[cid] if u in users
                      and (users[u][0] < f_up if site == EC else q < f_cp)]
            cp = t.cp_functions_at(site, q)
            up = sum(t.up_functions_at(site, users[u][0]) for u in linked)
            items.append((cp, up))
            owners.append(("cell", cid, linked))
            for u in s.users_by_cell[cid]:
                if u in users and u not in linked:
                    items.append((0, t.up_functions_at(site, users[u][0])))
                    owners.append(("user", u, []))
        live = [i for i, it in enumerate(items) if it != (0, 0)]
        got = _site_min(tuple(items[i] for i in live), cap_cp, cap_up, n_du, memo)
        if got is None:
            return None
        where = [0] * len(items)
        for i, d in zip(live, got[1]):
            where[i] = d
        for (kind, x, linked), d in zip(owners, where):
            if kind == "cell":
                (ec_cp_du if site == EC else cc_cp_du)[x] = d
                for u in linked:
                    (ec_up_du if site == EC else cc_up_du)[u] = d
            else:
                (ec_up_du if site == EC else cc_up_du)[x] = d
    a = Assignment(frozenset(users), {u: pb[0] for u, pb in users.items()}, dict(q_of), ec_up_du, cc_up_du,
                   ec_cp_du, cc_cp_du, dict(wl), {u: pb[1] for u, pb in users.items()})
    if check(a, s, bypass=bypass):
        return None
    return a, total_power(a, s)
