"""Candidate solutions and the counters derived from them."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .split_maps import CC, EC

if TYPE_CHECKING:
    from .scenario import Scenario


@dataclass(frozen=True)
class Assignment:
    """Decision variables for one solution.

    Per-user maps are keyed by user id and cover admitted users only; per-cell maps
    cover cells with at least one admitted user; ``wavelength`` covers active ECs.
    DU indices are local to their site (``0 .. du_count-1``).
    """
    admitted: frozenset = frozenset()
    up_split: dict = field(default_factory=dict)
    cp_split: dict = field(default_factory=dict)
    ec_up_du: dict = field(default_factory=dict)
    cc_up_du: dict = field(default_factory=dict)
    ec_cp_du: dict = field(default_factory=dict)
    cc_cp_du: dict = field(default_factory=dict)
    wavelength: dict = field(default_factory=dict)
    edge_cached: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def m(d):
            return {str(k): v for k, v in sorted(d.items())}
        return {
            "admitted": sorted(self.admitted),
            "up_split": m(self.up_split),
            "cp_split": m(self.cp_split),
            "ec_up_du": m(self.ec_up_du),
            "cc_up_du": m(self.cc_up_du),
            "ec_cp_du": m(self.ec_cp_du),
            "cc_cp_du": m(self.cc_cp_du),
            "wavelength": m(self.wavelength),
            "edge_cached": m(self.edge_cached),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Assignment":
        def m(key):
            return {int(k): int(v) for k, v in d.get(key, {}).items()}
        return cls(
            admitted=frozenset(int(u) for u in d.get("admitted", [])),
            up_split=m("up_split"), cp_split=m("cp_split"),
            ec_up_du=m("ec_up_du"), cc_up_du=m("cc_up_du"),
            ec_cp_du=m("ec_cp_du"), cc_cp_du=m("cc_cp_du"),
            wavelength=m("wavelength"), edge_cached=m("edge_cached"),
        )


@dataclass(frozen=True)
class DerivedCounts:
    active_ec_dus: dict
    active_cc_dus: int
    active_wavelengths: int
    edge_hit: dict
    ec_cache_bytes: dict


def structural_errors(a: Assignment, s: "Scenario") -> list[str]:
    """Problems that make the assignment meaningless (missing or out-of-domain indices)."""
    out = []
    user_ids = {u.id for u in s.users}
    for uid in sorted(a.admitted):
        if uid not in user_ids:
            out.append(f"admitted user {uid} does not exist")
            continue
        ec = s.ec(s.ec_of_user(uid))
        for name, dom in (("up_split", s.f_up + 1), ("ec_up_du", ec.du_count),
                          ("cc_up_du", s.central_cloud.du_count)):
            v = getattr(a, name).get(uid)
            if v is None or not 0 <= v < dom:
                out.append(f"user {uid}: {name} missing or outside [0, {dom - 1}]")
        if a.edge_cached.get(uid, 0) not in (0, 1):
            out.append(f"user {uid}: edge_cached must be 0 or 1")
    cells = {s.user(u).cell_id for u in a.admitted if u in user_ids}
    for cid in sorted(cells):
        ec = s.ec(s.cell(cid).ec_id)
        for name, dom in (("cp_split", s.f_cp + 1), ("ec_cp_du", ec.du_count),
                          ("cc_cp_du", s.central_cloud.du_count)):
            v = getattr(a, name).get(cid)
            if v is None or not 0 <= v < dom:
                out.append(f"cell {cid}: {name} missing or outside [0, {dom - 1}]")
    for rid in sorted({s.cell(c).ec_id for c in cells}):
        w = a.wavelength.get(rid)
        if w is None or not 0 <= w < s.wavelengths:
            out.append(f"EC {rid}: wavelength missing or outside [0, {s.wavelengths - 1}]")
    return out


def site_loads(a: Assignment, s: "Scenario") -> dict:
    """Functions hosted per DU: {(site, ec_or_None, du): [cp, up]} for DUs hosting anything."""
    t = s.split_tables
    loads: dict = {}

    def add(key, k, n):
        if n > 0:
            loads.setdefault(key, [0, 0])[k] += n

    for uid in a.admitted:
        r = s.ec_of_user(uid)
        p = a.up_split[uid]
        add((EC, r, a.ec_up_du[uid]), 1, t.up_functions_at(EC, p))
        add((CC, None, a.cc_up_du[uid]), 1, t.up_functions_at(CC, p))
    for cid in {s.user(u).cell_id for u in a.admitted}:
        r = s.cell(cid).ec_id
        q = a.cp_split[cid]
        add((EC, r, a.ec_cp_du[cid]), 0, t.cp_functions_at(EC, q))
        add((CC, None, a.cc_cp_du[cid]), 0, t.cp_functions_at(CC, q))
    return loads


def derive_counts(a: Assignment, s: "Scenario") -> DerivedCounts:
    loads = site_loads(a, s)
    active_ec = {ec.id: 0 for ec in s.edge_clouds}
    active_cc = 0
    for (site, r, _du), _ in loads.items():
        if site == EC:
            active_ec[r] += 1
        else:
            active_cc += 1
    live = s.active_ecs(a)
    g = len({a.wavelength[r] for r in live})
    hit = {uid: int(a.edge_cached.get(uid, 0)) for uid in a.admitted}
    return DerivedCounts(active_ec, active_cc, g, hit, ec_cache_bytes(a, s))


def ec_cache_bytes(a: Assignment, s: "Scenario") -> dict[int, int]:
    """X_r with each distinct cached file counted once per EC."""
    cached: dict[int, set] = {ec.id: set() for ec in s.edge_clouds}
    for uid in a.admitted:
        if a.edge_cached.get(uid, 0):
            cached[s.ec_of_user(uid)].add(s.user(uid).demanded_file)
    return {r: sum(s.file(f).size_bytes for f in fs) for r, fs in cached.items()}


def canonical_order(a: Assignment) -> tuple:
    """Total-order key: admitted ids, then p, q, DU vectors, wavelengths, cache bits."""
    def vec(d):
        return tuple(sorted(d.items()))
    return (tuple(sorted(a.admitted)), vec(a.up_split), vec(a.cp_split), vec(a.ec_up_du),
            vec(a.cc_up_du), vec(a.ec_cp_du), vec(a.cc_cp_du), vec(a.wavelength),
            vec(a.edge_cached))
