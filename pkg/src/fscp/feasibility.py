"""Constraint checking.  Ids C1..C12 follow the printed constraint order:

C1 split once, C2/C3 same-DU linking, C4/C5 CP capacity at EC/CC, C6/C7 UP capacity
at EC/CC, C8 wavelength capacity, C9/C10 the big-M pair tying edge caching to full UP
distribution, C11 EC cache capacity, C12 delay threshold.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

from .delay import total_user_delay
from .assignment import ec_cache_bytes
from .split_maps import CC, EC

if TYPE_CHECKING:
    from .assignment import Assignment
    from .scenario import Scenario

CONSTRAINT_IDS = tuple(f"C{k}" for k in range(1, 13))


@dataclass(frozen=True)
class Violation:
    constraint_id: str
    subject: str
    measured: float
    bound: float

    def csv_row(self) -> list:
        return [self.constraint_id, self.subject, self.measured, self.bound]


def big_m(f_up: int) -> int:
    return f_up + 1


def bigm_upper_ok(p: int, b: int, f_up: int, m: int | None = None) -> bool:
    m = big_m(f_up) if m is None else m
    return p - f_up <= m * (1 - b)


def bigm_lower_ok(p: int, b: int, f_up: int, m: int | None = None) -> bool:
    m = big_m(f_up) if m is None else m
    return p - f_up >= -m * (1 - b)


def cell_bandwidth(cid: int, a: "Assignment", s: "Scenario") -> float:
    t = s.split_tables
    cell = s.cell(cid)
    users = [u for u in s.users_by_cell[cid] if u in a.admitted]
    if not users:
        return 0.0
    return t.cell_midhaul_bw(a.cp_split[cid]) + sum(
        t.user_midhaul_bw(a.up_split[u], cell.rb_per_user) for u in users
        if 0 <= a.up_split[u] <= t.f_up)


def wavelength_loads(a: "Assignment", s: "Scenario") -> dict[int, float]:
    """C8 left-hand side per used wavelength."""
    out: dict[int, float] = {}
    for ec in s.edge_clouds:
        if ec.id not in a.wavelength:
            continue
        bw = sum(cell_bandwidth(c.id, a, s) for c in ec.cells)
        if bw > 0 or any(s.ec_of_user(u) == ec.id for u in a.admitted):
            w = a.wavelength[ec.id]
            out[w] = out.get(w, 0.0) + bw
    return out


def check(a: "Assignment", s: "Scenario", *, split_once: str | None = None,
          bypass: Iterable[str] = ()) -> list[Violation]:
    """Every violated constraint instance, in constraint-id order."""
    split_once = split_once or s.solver_defaults.split_once_relation
    skip = set(bypass)
    t = s.split_tables
    f_up, f_cp = s.f_up, s.f_cp
    out: list[Violation] = []
    admitted = sorted(a.admitted)
    # p outside [0, f_up] can only be reported through the big-M pair
    in_domain = [u for u in admitted if 0 <= a.up_split[u] <= f_up]
    cells = sorted({s.user(u).cell_id for u in admitted})

    if "C1" not in skip:
        for u in admitted:
            c = s.user(u).cell_id
            n = int(a.up_split[u] < f_up) + int(a.cp_split[c] < f_cp)
            if (n != 1) if split_once == "eq" else (n > 1):
                out.append(Violation("C1", f"user {u}", n, 1))
    for u in admitted:
        c = s.user(u).cell_id
        if "C2" not in skip and a.up_split[u] < f_up and a.ec_up_du[u] != a.ec_cp_du[c]:
            out.append(Violation("C2", f"user {u}", a.ec_up_du[u], a.ec_cp_du[c]))
    for u in admitted:
        c = s.user(u).cell_id
        if "C3" not in skip and a.cp_split[c] < f_cp and a.cc_up_du[u] != a.cc_cp_du[c]:
            out.append(Violation("C3", f"user {u}", a.cc_up_du[u], a.cc_cp_du[c]))

    # capacity sums per DU
    ec_cp: dict = {}
    cc_cp: dict = {}
    ec_up: dict = {}
    cc_up: dict = {}
    for c in cells:
        r = s.cell(c).ec_id
        q = a.cp_split[c]
        k = (r, a.ec_cp_du[c])
        ec_cp[k] = ec_cp.get(k, 0) + t.cp_functions_at(EC, q)
        cc_cp[a.cc_cp_du[c]] = cc_cp.get(a.cc_cp_du[c], 0) + t.cp_functions_at(CC, q)
    for u in in_domain:
        r = s.ec_of_user(u)
        p = a.up_split[u]
        k = (r, a.ec_up_du[u])
        ec_up[k] = ec_up.get(k, 0) + t.up_functions_at(EC, p)
        cc_up[a.cc_up_du[u]] = cc_up.get(a.cc_up_du[u], 0) + t.up_functions_at(CC, p)
    cc = s.central_cloud
    for cid, sums, cap_of, label in (
            ("C4", ec_cp, lambda k: s.ec(k[0]).du_cp_capacity, lambda k: f"EC {k[0]} DU {k[1]}"),
            ("C5", cc_cp, lambda k: cc.du_cp_capacity, lambda k: f"CC DU {k}"),
            ("C6", ec_up, lambda k: s.ec(k[0]).du_up_capacity, lambda k: f"EC {k[0]} DU {k[1]}"),
            ("C7", cc_up, lambda k: cc.du_up_capacity, lambda k: f"CC DU {k}")):
        if cid in skip:
            continue
        for k in sorted(sums):
            if sums[k] > cap_of(k):
                out.append(Violation(cid, label(k), sums[k], cap_of(k)))

    if "C8" not in skip:
        loads = wavelength_loads(a, s)
        for w in sorted(loads):
            if loads[w] > s.wavelength_capacity_mbps + 1e-9:
                out.append(Violation("C8", f"wavelength {w}", loads[w], s.wavelength_capacity_mbps))

    for u in admitted:
        p, b = a.up_split[u], int(a.edge_cached.get(u, 0))
        # C9 is the half that caching with p < F_UP breaks; C10 only catches p > F_UP
        if "C9" not in skip and not bigm_lower_ok(p, b, f_up):
            out.append(Violation("C9", f"user {u}", p - f_up, -big_m(f_up) * (1 - b)))
        if "C10" not in skip and not bigm_upper_ok(p, b, f_up):
            out.append(Violation("C10", f"user {u}", p - f_up, big_m(f_up) * (1 - b)))

    if "C11" not in skip:
        xs = ec_cache_bytes(a, s)
        for ec in s.edge_clouds:
            x = xs[ec.id]
            if x > ec.cache_capacity_bytes:
                out.append(Violation("C11", f"EC {ec.id}", x, ec.cache_capacity_bytes))
    if "C12" not in skip:
        for u in in_domain:
            d = total_user_delay(u, a, s)
            if d > s.user(u).delay_threshold_s:
                out.append(Violation("C12", f"user {u}", d, s.user(u).delay_threshold_s))
    return out


def is_feasible(a: "Assignment", s: "Scenario", **kw) -> bool:
    return not check(a, s, **kw)
