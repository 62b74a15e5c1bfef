"""Exact branch-and-bound for joint split selection and content placement.

Objective is lexicographic: admit as many users as possible, then minimise total
power.  The search runs once per way of grouping the ECs onto wavelengths (the
grouping fixes every user's optical frame share, hence every delay), and inside a
grouping branches cell by cell on the CP split and user by user on (UP split, edge
cache bit) or dropping the user.  DU and wavelength indices are not branched on:
DU counts come from an exact packer and wavelengths from the grouping.
"""
from __future__ import annotations

import math
import time
from itertools import combinations
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

from .assignment import Assignment
from .delay import delay_components
from .feasibility import check
from .packing import min_bins
from .plans import PlanBudget, PlanEngine, PlanLimit, assemble, choices_of
from .power import total_power
from .scenario import Scenario
from .split_maps import CC, EC

EPS = 1e-9
DROP = None


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverOptions:
    mode: str = "fscp"
    time_budget_s: float = 60.0
    seed: int = 0
    optimality_gap: float = 0.0
    split_once_relation: Optional[str] = None
    path_aware_delay: Optional[bool] = None
    parallel_workers: int = 1
    node_limit: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("fscp", "all_ec", "all_cc", "greedy"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.time_budget_s <= 0:
            raise ValueError("time_budget_s must be positive")
        if not 0 <= self.optimality_gap < 1:
            raise ValueError("optimality_gap must be in [0, 1)")


@dataclass(frozen=True)
class Solution:
    assignment: Assignment
    total_power_w: float
    admitted_count: int
    proven_optimal: bool
    bound_w: float
    wall_time_s: float
    mode: str = "fscp"
    dropped: tuple = ()
    bypassed: tuple = ()
    nodes: int = 0
    note: str = ""
    trace: tuple = field(default=(), compare=False)

    @property
    def served_count(self) -> int:
        return self.admitted_count - len(self.dropped)

    def to_dict(self) -> dict:
        """Document form.  Wall time is left out so that reruns serialize identically."""
        return {"mode": self.mode, "total_power_w": self.total_power_w, "admitted_count": self.admitted_count,
                "proven_optimal": self.proven_optimal, "bound_w": self.bound_w, "dropped": list(self.dropped),
                "bypassed": list(self.bypassed), "note": self.note, "assignment": self.assignment.to_dict()}


def effective_scenario(s: Scenario, opts: SolverOptions) -> Scenario:
    changes = {}
    if opts.path_aware_delay is not None and opts.path_aware_delay != s.delay_params.path_aware_delay:
        changes["delay_params"] = replace(s.delay_params, path_aware_delay=opts.path_aware_delay)
    if opts.split_once_relation is not None:
        changes["solver_defaults"] = replace(s.solver_defaults,
                                             split_once_relation=opts.split_once_relation)
    return replace(s, **changes) if changes else s


def bypassed_constraints(mode: str) -> tuple:
    return {"all_ec": ("C1",), "all_cc": ("C1", "C12")}.get(mode, ())


def set_partitions(items: list, max_blocks: int):
    """Set partitions of ``items`` into at most ``max_blocks`` blocks, in restricted-growth order."""
    n = len(items)
    if n == 0:
        yield []
        return
    labels = [0] * n

    def rec(i: int, used: int):
        if i == n:
            blocks = [[] for _ in range(used)]
            for it, b in zip(items, labels):
                blocks[b].append(it)
            yield blocks
            return
        for b in range(min(used + 1, max_blocks)):
            labels[i] = b
            yield from rec(i + 1, max(used, b + 1))

    yield from rec(0, 0)


# ---------------------------------------------------------------------------
# preparation shared by every grouping

@dataclass
class _Opt:
    p: int
    delta: int
    ec_up: int
    cc_up: int
    bw: float
    delay: float


class _Prep:
    def __init__(self, s: Scenario, opts: SolverOptions):
        self.s = s
        self.mode = "fscp" if opts.mode == "greedy" else opts.mode
        self.t = s.split_tables
        self.f_up, self.f_cp = s.f_up, s.f_cp
        self.bypass = bypassed_constraints(self.mode)
        self.split_once = s.solver_defaults.split_once_relation
        self.pp = s.power_params
        self.cc = s.central_cloud
        thr = {u.id: u.delay_threshold_s for u in s.users}
        self.ec_ids = [ec.id for ec in s.edge_clouds if any(s.users_by_cell[c.id] for c in ec.cells)]
        self.cells_of: dict[int, list[int]] = {}
        self.users_of: dict[int, list[int]] = {}
        for ec in s.edge_clouds:
            cs = [c.id for c in ec.cells if s.users_by_cell[c.id]]
            cs.sort(key=lambda c: (min(thr[u] for u in s.users_by_cell[c]), c))
            self.cells_of[ec.id] = cs
            for c in cs:
                self.users_of[c] = sorted(s.users_by_cell[c], key=lambda u: (thr[u], u))

    def pq_allowed(self, p: int, q: int) -> bool:
        if self.mode == "all_ec":
            return p == self.f_up and q == self.f_cp
        if self.mode == "all_cc":
            return p == 0 and q == 0
        n = int(p < self.f_up) + int(q < self.f_cp)
        return n == 1 if self.split_once == "eq" else n <= 1

    def deltas(self, p: int) -> tuple:
        if self.mode == "all_ec":
            return (1,)
        if self.mode == "all_cc":
            return (0,)
        return (0, 1) if p == self.f_up else (0,)


class _Group:
    """Per-grouping option tables and static bound ingredients."""

    def __init__(self, prep: _Prep, blocks: list[list[int]]):
        s, t = prep.s, prep.t
        self.blocks = blocks
        self.block_of = {r: b for b, blk in enumerate(blocks) for r in blk}
        fixed = s.delay_params.frame_share_divisor
        self.divisor = {}
        for blk in blocks:
            n = sum(len(s.ec(r).cells) for r in blk)
            for r in blk:
                self.divisor[r] = fixed if fixed is not None else max(n, 1)
        check_delay = "C12" not in prep.bypass
        pruned_cache = prep.mode == "fscp"
        # options[c][q] -> {uid: [_Opt]}; qs[c] -> ordered q list
        self.options: dict = {}
        self.qs: dict = {}
        for r in prep.ec_ids:
            for c in prep.cells_of[r]:
                if r not in self.block_of:
                    self.options[c], self.qs[c] = {}, []
                    continue
                cell = s.cell(c)
                per_q = {}
                for q in range(prep.f_cp + 1):
                    table = {}
                    any_user = False
                    for u in prep.users_of[c]:
                        us = s.user(u)
                        size = s.file(us.demanded_file).size_bytes
                        opts = []
                        for p in range(prep.f_up, -1, -1):
                            if not prep.pq_allowed(p, q):
                                continue
                            by_delta = {}
                            for d in prep.deltas(p):
                                dl = sum(delay_components(p, q, d, size, cell.rb_per_user, us.distance_m,
                                                          self.divisor[r], t, s.delay_params).values())
                                if check_delay and dl > us.delay_threshold_s:
                                    continue
                                by_delta[d] = dl
                            if pruned_cache and 0 in by_delta and 1 in by_delta and by_delta[1] >= by_delta[0]:
                                del by_delta[1]
                            for d in sorted(by_delta):
                                opts.append(_Opt(p, d, t.up_functions_at(EC, p), t.up_functions_at(CC, p),
                                                 t.user_midhaul_bw(p, cell.rb_per_user), by_delta[d]))
                        table[u] = opts
                        any_user = any_user or bool(opts)
                    if any_user:
                        per_q[q] = table
                self.options[c] = per_q
                self.qs[c] = sorted(per_q, key=lambda q: (self._q_estimate(prep, c, q), q))
        self._static_bounds(prep)

    def _q_estimate(self, prep: _Prep, c: int, q: int) -> float:
        s, t, pp = prep.s, prep.t, prep.pp
        ec = s.ec(s.cell(c).ec_id)
        cc = prep.cc
        table = self.options[c][q] if c in self.options else None
        ec_up = cc_up = 0
        n = 0
        for u, opts in (table or {}).items():
            if opts:
                n += 1
                ec_up += min(o.ec_up for o in opts)
                cc_up += min(o.cc_up for o in opts)
        frac_ec = max(t.cp_functions_at(EC, q) / max(ec.du_cp_capacity, 1), ec_up / max(ec.du_up_capacity, 1))
        frac_cc = max(t.cp_functions_at(CC, q) / max(cc.du_cp_capacity, 1), cc_up / max(cc.du_up_capacity, 1))
        return -1000.0 * n + frac_ec * pp.p_du_ec + frac_cc * pp.p_du_cc

    def _static_bounds(self, prep: _Prep):
        s, t = prep.s, prep.t
        cc = prep.cc
        self.max_adm: dict = {}
        self.cell_min: dict = {}
        for r in prep.ec_ids:
            ec = s.ec(r)
            for c in prep.cells_of[r]:
                counts = {q: sum(1 for o in tab.values() if o) for q, tab in self.options[c].items()}
                best = max(counts.values(), default=0)
                self.max_adm[c] = best
                qs = [q for q, n in counts.items() if n == best and best > 0]
                if not qs:
                    self.cell_min[c] = None
                    continue
                mins = []
                for q in qs:
                    tab = self.options[c][q]
                    live = [o for o in tab.values() if o]
                    ec_cp = t.cp_functions_at(EC, q)
                    cc_cp = t.cp_functions_at(CC, q)
                    mins.append((
                        ec_cp,
                        sum(min(o.ec_up for o in os) for os in live),
                        cc_cp,
                        sum(min(o.cc_up for o in os) for os in live),
                        t.cell_midhaul_bw(q) + sum(min(o.bw for o in os) for os in live),
                        2 * ec_cp > ec.du_cp_capacity,
                        2 * cc_cp > cc.du_cp_capacity,
                        all(all(o.delta for o in os) for os in live),
                    ))
                self.cell_min[c] = (
                    min(m[0] for m in mins), min(m[1] for m in mins), min(m[2] for m in mins),
                    min(m[3] for m in mins), min(m[4] for m in mins),
                    all(m[5] for m in mins), all(m[6] for m in mins), all(m[7] for m in mins),
                )


# ---------------------------------------------------------------------------
# the search inside one grouping

class _Budget(Exception):
    pass


class _Search:
    def __init__(self, prep: _Prep, group: _Group, *, ext_adm: int = -1, ext_power: float = math.inf,
                 deadline: float = math.inf, node_limit: Optional[int] = None, first_leaf: bool = False,
                 gap: float = 0.0, bound_pruning: bool = True):
        self.prep, self.g = prep, group
        s = prep.s
        self.s = s
        self.ext_adm, self.ext_power = ext_adm, ext_power
        self.deadline, self.node_limit = deadline, node_limit
        self.first_leaf = first_leaf
        self.gap = gap
        self.bound_pruning = bound_pruning
        self.nodes = 0
        self.best = None  # (adm, power, record)
        self.complete = False
        self.trace: list = []
        self.t0 = time.perf_counter()

        # flat step list
        self.steps: list = []
        for r in prep.ec_ids:
            for c in prep.cells_of[r]:
                self.steps.append(("cell", c))
                for u in prep.users_of[c]:
                    self.steps.append(("user", u))
            self.steps.append(("ec_end", r))
        self.cell_pos = {st[1]: k for k, st in enumerate(self.steps) if st[0] == "cell"}

        # suffix sums of forced minima per EC and globally (indexed by the cell's order)
        self.order_cells = [st[1] for st in self.steps if st[0] == "cell"]
        zero = (0, 0, 0, 0, 0.0, 0, 0, 0, 0)
        self.suffix_ec: dict = {}
        self.suffix_all: dict = {}
        acc_all = list(zero)
        for r in reversed(prep.ec_ids):
            acc = list(zero)
            for c in reversed(prep.cells_of[r]):
                m = group.cell_min[c]
                if m is not None:
                    vals = (m[0], m[1], m[2], m[3], m[4], int(m[5]), int(m[6]), int(m[7]), 1)
                    acc = [a + b for a, b in zip(acc, vals)]
                    acc_all = [a + b for a, b in zip(acc_all, vals)]
                self.suffix_ec[c] = tuple(acc)
                self.suffix_all[c] = tuple(acc_all)
        self.adm_suffix: dict = {}
        tot = 0
        for c in reversed(self.order_cells):
            tot += group.max_adm[c]
            self.adm_suffix[c] = tot
        self.ec_total_min = {r: (self.suffix_ec[prep.cells_of[r][0]] if prep.cells_of[r] else zero)
                             for r in prep.ec_ids}
        # state
        self.q: dict = {}
        self.choice: dict = {}
        self.cur_cell = None
        self.cur_rem: list = []
        self.admitted = 0
        self.cell_adm: dict = {}
        self.ec_cp = {r: 0 for r in prep.ec_ids}
        self.ec_up = {r: 0 for r in prep.ec_ids}
        self.ec_big = {r: 0 for r in prep.ec_ids}
        self.ec_cells = {r: 0 for r in prep.ec_ids}
        self.ec_users = {r: 0 for r in prep.ec_ids}
        self.ec_delta = {r: 0 for r in prep.ec_ids}
        self.ec_files = {r: {} for r in prep.ec_ids}
        self.ec_bytes = {r: 0 for r in prep.ec_ids}
        self.ec_done: dict = {}
        self.cc_cp = 0
        self.cc_up = 0
        self.cc_big = 0
        self.block_bw = [0.0] * len(group.blocks)
        self.bundle_ec: dict = {}
        self.bundle_cc: dict = {}
        self.pos = 0

    # -- bound ---------------------------------------------------------------
    def _future(self):
        """(next undecided cell or None, remaining admittable in current cell)."""
        k = self.pos
        nxt = None
        while k < len(self.steps):
            if self.steps[k][0] == "cell":
                nxt = self.steps[k][1]
                break
            k += 1
        return nxt

    def adm_ub(self) -> int:
        nxt = self._future()
        ub = self.admitted + (self.adm_suffix[nxt] if nxt is not None else 0)
        if self.cur_cell is not None:
            ub += sum(1 for u in self.cur_rem if self._user_opts(u))
        return ub

    def _user_opts(self, u):
        c = self.cur_cell
        return self.g.options[c][self.q[c]].get(u, ())

    def lower_bound(self, forced: bool) -> float:
        """Admissible power bound over completions; with ``forced`` every admittable user is admitted."""
        prep, g, s = self.prep, self.g, self.s
        pp = prep.pp
        nxt = self._future()
        nxt_ec = s.cell(nxt).ec_id if nxt is not None else None
        # contribution of the partially decided current cell
        cur = [0, 0, 0, 0, 0.0, 0]
        if forced and self.cur_cell is not None:
            for u in self.cur_rem:
                os = self._user_opts(u)
                if os:
                    cur[0] += min(o.ec_up for o in os)
                    cur[1] += min(o.cc_up for o in os)
                    cur[2] += min(o.bw for o in os)
                    if all(o.delta for o in os):
                        cur[3] = 1
        cur_r = s.cell(self.cur_cell).ec_id if self.cur_cell is not None else None
        lb = pp.p_cache_cc if pp.cc_cache_always_on else 0.0
        block_live = [False] * len(g.blocks)
        block_bw = list(self.block_bw)
        zero = (0, 0, 0, 0, 0.0, 0, 0, 0, 0)
        for r in prep.ec_ids:
            if r not in g.block_of:
                continue
            if r in self.ec_done:
                fut = zero
            elif forced:
                if r == nxt_ec:
                    fut = self.suffix_ec[nxt]
                elif nxt_ec is not None and prep.ec_ids.index(r) > prep.ec_ids.index(nxt_ec):
                    fut = self.ec_total_min[r]
                else:
                    fut = zero
            else:
                fut = zero
            cells = self.ec_cells[r] + fut[8]
            live = self.ec_users[r] > 0 or cells > 0 or (forced and r == cur_r and any(
                self._user_opts(u) for u in self.cur_rem))
            if live:
                block_live[g.block_of[r]] = True
                lb += pp.p_onu
            lb += (self.ec_cells[r] + fut[8]) * (pp.p_tx + pp.p_fh)
            block_bw[g.block_of[r]] += fut[4] + (cur[2] if r == cur_r else 0.0)
            if r in self.ec_done:
                du = self.ec_done[r][0]
            else:
                ec = s.ec(r)
                cp = self.ec_cp[r] + fut[0]
                up = self.ec_up[r] + fut[1] + (cur[0] if r == cur_r else 0)
                if cp == 0 and up == 0:
                    du = 0
                else:
                    du = max(math.ceil(cp / ec.du_cp_capacity) if ec.du_cp_capacity else 0,
                             math.ceil(up / ec.du_up_capacity) if ec.du_up_capacity else 0,
                             self.ec_big[r] + fut[5], 1)
                if du > ec.du_count:
                    return math.inf
            lb += du * pp.p_du_ec + (pp.p_cool_ec if du > 0 else 0.0)
            if self.ec_delta[r] > 0 or fut[7] > 0 or (r == cur_r and cur[3]):
                lb += pp.p_cache_ec
        for b, bw in enumerate(block_bw):
            if bw > s.wavelength_capacity_mbps + EPS:
                return math.inf
        lb += sum(block_live) * pp.p_lc
        tail = self.suffix_all[nxt] if (forced and nxt is not None) else zero
        cp = self.cc_cp + tail[2]
        up = self.cc_up + tail[3] + cur[1]
        cc = prep.cc
        if cp == 0 and up == 0:
            du = 0
        else:
            du = max(math.ceil(cp / cc.du_cp_capacity) if cc.du_cp_capacity else 0,
                     math.ceil(up / cc.du_up_capacity) if cc.du_up_capacity else 0,
                     self.cc_big + tail[6], 1)
        if du > cc.du_count:
            return math.inf
        if du > 0:
            lb += du * pp.p_du_cc + pp.p_cool_cc
            if not pp.cc_cache_always_on:
                lb += pp.p_cache_cc
        return lb

    # -- search ----------------------------------------------------------------
    def _prune(self) -> bool:
        if not self.bound_pruning:
            return False
        ub = self.adm_ub()
        best_adm = self.best[0] if self.best else -1
        if ub < self.ext_adm or ub < best_adm:
            return True
        forced_ext = ub == self.ext_adm
        forced_own = ub == best_adm
        if not (forced_ext or forced_own):
            return self.lower_bound(False) == math.inf
        lb = self.lower_bound(True)
        if lb == math.inf:
            return True
        if forced_ext and lb > self.ext_power * (1 - self.gap) + EPS:
            return True
        if forced_own and lb >= self.best[1] * (1 - self.gap) - EPS:
            return True
        return False

    def _tick(self):
        self.nodes += 1
        if self.node_limit is not None and self.nodes > self.node_limit:
            raise _Budget
        if (self.nodes & 255) == 0 and time.perf_counter() > self.deadline:
            raise _Budget

    def run(self):
        try:
            self._rec()
            self.complete = True
        except _Budget:
            self.complete = False
        except _FirstLeaf:
            self.complete = False
        return self

    def _rec(self):
        self._tick()
        if self.pos == len(self.steps):
            self._leaf()
            return
        if self._prune():
            return
        kind, x = self.steps[self.pos]
        if kind == "cell":
            self._branch_cell(x)
        elif kind == "user":
            self._branch_user(x)
        else:
            self._end_ec(x)

    def _advance(self):
        self.pos += 1
        try:
            self._rec()
        finally:
            self.pos -= 1

    def _branch_cell(self, c: int):
        g, prep, s = self.g, self.prep, self.s
        r = s.cell(c).ec_id
        users = prep.users_of[c]
        saved = (self.cur_cell, self.cur_rem)
        try:
            self._cell_options(c, r, users)
        finally:
            self.cur_cell, self.cur_rem = saved

    def _cell_options(self, c: int, r: int, users: list):
        g, prep, s = self.g, self.prep, self.s
        for q in g.qs[c]:
            self.q[c] = q
            self.cur_cell = c
            self.cur_rem = list(users)
            self.cell_adm[c] = 0
            self.bundle_ec[c] = [prep.t.cp_functions_at(EC, q), 0]
            self.bundle_cc[c] = [prep.t.cp_functions_at(CC, q), 0]
            self.ec_cp[r] += self.bundle_ec[c][0]
            self.cc_cp += self.bundle_cc[c][0]
            big_e = int(2 * self.bundle_ec[c][0] > s.ec(r).du_cp_capacity)
            big_c = int(2 * self.bundle_cc[c][0] > prep.cc.du_cp_capacity)
            self.ec_big[r] += big_e
            self.cc_big += big_c
            bw = prep.t.cell_midhaul_bw(q)
            self.block_bw[g.block_of[r]] += bw
            self.ec_cells[r] += 1
            try:
                self._advance()
            finally:
                self.ec_cells[r] -= 1
                self.block_bw[g.block_of[r]] -= bw
                self.ec_big[r] -= big_e
                self.cc_big -= big_c
                self.ec_cp[r] -= self.bundle_ec[c][0]
                self.cc_cp -= self.bundle_cc[c][0]
                del self.q[c]
                self.cur_cell = None
        # cell left empty
        self.q[c] = None
        self.cur_cell = None
        self.cur_rem = []
        try:
            self._advance_skip_cell(c)
        finally:
            del self.q[c]

    def _advance_skip_cell(self, c: int):
        n = len(self.prep.users_of[c])
        saved = self.pos
        for u in self.prep.users_of[c]:
            self.choice[u] = DROP
        self.pos += n
        try:
            self._advance()
        finally:
            self.pos = saved
            for u in self.prep.users_of[c]:
                del self.choice[u]

    def _branch_user(self, u: int):
        prep, s, g = self.prep, self.s, self.g
        c = self.cur_cell
        q = self.q[c]
        r = s.cell(c).ec_id
        users = prep.users_of[c]
        k = users.index(u)
        opts = g.options[c][q].get(u, [])
        last = (k == len(users) - 1)
        # symmetry: an identical neighbour never takes a smaller option index
        lo = 0
        if k > 0:
            prev = users[k - 1]
            popts = g.options[c][q].get(prev, [])
            if self._same(u, prev, opts, popts):
                pc = self.choice[prev]
                lo = len(opts) if pc is None else pc[0]
        at = self.cur_rem.index(u)
        self.cur_rem.pop(at)
        try:
            for j in range(lo, len(opts)):
                o = opts[j]
                self._apply(u, c, r, q, o, +1)
                self.choice[u] = (j, o)
                try:
                    self._advance()
                finally:
                    self._apply(u, c, r, q, o, -1)
                    del self.choice[u]
            # drop, unless it would leave an opened cell empty
            if not (last and self.cell_adm[c] == 0):
                self.choice[u] = DROP
                try:
                    self._advance()
                finally:
                    del self.choice[u]
        finally:
            self.cur_rem.insert(at, u)

    def _same(self, u, v, ou, ov) -> bool:
        s = self.s
        if s.user(u).demanded_file != s.user(v).demanded_file:
            return False
        return [(o.p, o.delta) for o in ou] == [(o.p, o.delta) for o in ov]

    def _apply(self, u, c, r, q, o: _Opt, sign: int):
        prep, s = self.prep, self.s
        self.admitted += sign
        self.cell_adm[c] += sign
        self.ec_users[r] += sign
        self.block_bw[self.g.block_of[r]] += sign * o.bw
        if o.p < prep.f_up:
            self.bundle_ec[c][1] += sign * o.ec_up
        self.ec_up[r] += sign * o.ec_up
        if q < prep.f_cp:
            self.bundle_cc[c][1] += sign * o.cc_up
        self.cc_up += sign * o.cc_up
        if o.delta:
            self.ec_delta[r] += sign
            f = s.user(u).demanded_file
            files = self.ec_files[r]
            if sign > 0:
                files[f] = files.get(f, 0) + 1
                if files[f] == 1:
                    self.ec_bytes[r] += s.file(f).size_bytes
            else:
                files[f] -= 1
                if files[f] == 0:
                    del files[f]
                    self.ec_bytes[r] -= s.file(f).size_bytes

    def _cache_ok(self, r) -> bool:
        return self.ec_bytes[r] <= self.s.ec(r).cache_capacity_bytes

    def _rec_guard(self):
        pass

    def _end_ec(self, r: int):
        s, prep = self.s, self.prep
        ec = s.ec(r)
        if not self._cache_ok(r):
            return
        bundles, free, keys = self._ec_items(r)
        got = min_bins(bundles, free, ec.du_cp_capacity, ec.du_up_capacity, ec.du_count)
        if got is None:
            return
        self.ec_done[r] = (got[0], got[1], got[2], keys)
        try:
            self._advance()
        finally:
            del self.ec_done[r]

    def _ec_items(self, r: int):
        prep = self.prep
        bundles, free, keys = [], [], []
        for c in prep.cells_of[r]:
            if self.q.get(c) is None:
                continue
            bundles.append(tuple(self.bundle_ec[c]))
            for u in prep.users_of[c]:
                ch = self.choice.get(u)
                if ch is not None and ch[1].p == prep.f_up:
                    free.append(ch[1].ec_up)
                    keys.append(u)
        return bundles, free, keys

    def _leaf(self):
        prep, s = self.prep, self.s
        adm = self.admitted
        if adm < self.ext_adm:
            return
        cc = prep.cc
        cells = [c for c in self.order_cells if self.q.get(c) is not None]
        bundles = [tuple(self.bundle_cc[c]) for c in cells]
        free, fkeys = [], []
        for c in cells:
            if self.q[c] == prep.f_cp:
                for u in prep.users_of[c]:
                    ch = self.choice.get(u)
                    if ch is not None:
                        free.append(ch[1].cc_up)
                        fkeys.append(u)
        got = min_bins(bundles, free, cc.du_cp_capacity, cc.du_up_capacity, cc.du_count)
        if got is None:
            return
        power = self._leaf_power(got[0])
        best = self.best
        if best is not None and (adm < best[0] or (adm == best[0] and power >= best[1] - EPS)):
            return
        if adm == self.ext_adm and power > self.ext_power + EPS:
            return
        a = self._build(cells, got, fkeys)
        self.best = (adm, power, a)
        self.trace.append((time.perf_counter() - self.t0, adm, power, self.nodes))
        if self.first_leaf:
            raise _FirstLeaf

    def _leaf_power(self, cc_du: int) -> float:
        prep, s = self.prep, self.s
        pp = prep.pp
        pw = 0.0
        live_blocks = set()
        for r in prep.ec_ids:
            if self.ec_users[r] == 0:
                continue
            live_blocks.add(self.g.block_of[r])
            du = self.ec_done[r][0]
            pw += self.ec_cells[r] * (pp.p_tx + pp.p_fh) + pp.p_onu
            pw += du * pp.p_du_ec + (pp.p_cool_ec if du else 0.0)
            if self.ec_delta[r]:
                pw += pp.p_cache_ec
        pw += len(live_blocks) * pp.p_lc
        if cc_du:
            pw += cc_du * pp.p_du_cc + pp.p_cool_cc
        if pp.cc_cache_always_on or cc_du:
            pw += pp.p_cache_cc
        return pw

    def _build(self, cells, cc_got, fkeys) -> Assignment:
        prep, s = self.prep, self.s
        admitted, up, cp, ec_up_du, cc_up_du, ec_cp_du, cc_cp_du, cached = set(), {}, {}, {}, {}, {}, {}, {}
        cc_b = dict(zip(cells, cc_got[1]))
        cc_f = dict(zip(fkeys, cc_got[2]))
        wl = {}
        for r in prep.ec_ids:
            if self.ec_users[r] == 0:
                continue
            wl[r] = self.g.block_of[r]
            _, bplace, fplace, keys = self.ec_done[r]
            ec_cells = [c for c in prep.cells_of[r] if self.q.get(c) is not None]
            eb = dict(zip(ec_cells, bplace))
            ef = dict(zip(keys, fplace))
            for c in ec_cells:
                q = self.q[c]
                cp[c] = q
                ec_cp_du[c] = eb[c]
                cc_cp_du[c] = cc_b[c]
                for u in prep.users_of[c]:
                    ch = self.choice.get(u)
                    if ch is None:
                        continue
                    o = ch[1]
                    admitted.add(u)
                    up[u] = o.p
                    cached[u] = o.delta
                    ec_up_du[u] = eb[c] if o.p < prep.f_up else ef.get(u, eb[c])
                    cc_up_du[u] = cc_b[c] if q < prep.f_cp else cc_f.get(u, cc_b[c])
        return Assignment(frozenset(admitted), up, cp, ec_up_du, cc_up_du, ec_cp_du, cc_cp_du, wl, cached)


class _FirstLeaf(Exception):
    pass


# ---------------------------------------------------------------------------
# drivers

def _empty_solution(s: Scenario, mode: str, t0: float, note: str = "", proven: bool = True) -> Solution:
    a = Assignment()
    p = total_power(a, s)
    return Solution(a, p, 0, proven, p, time.perf_counter() - t0, mode, (), bypassed_constraints(mode),
                    0, note)


def _groupings(prep: _Prep) -> list:
    s = prep.s
    if s.wavelengths <= 0 or not prep.ec_ids:
        return []
    # an EC left without users takes no wavelength, which shortens its neighbours' frame share
    out = []
    n = len(prep.ec_ids)
    for k in range(n, 0, -1):
        for on in combinations(prep.ec_ids, k):
            out += set_partitions(list(on), s.wavelengths)
    return out


def _root_key(prep: _Prep, group: _Group):
    srch = _Search(prep, group)
    return (-srch.adm_ub(), srch.lower_bound(True))


def _solve_group(args):
    s, opts, blocks, ext, deadline, first_leaf = args
    prep = _Prep(s, opts)
    group = _Group(prep, blocks)
    srch = _Search(prep, group, ext_adm=ext[0], ext_power=ext[1], deadline=deadline,
                   node_limit=opts.node_limit, first_leaf=first_leaf, gap=opts.optimality_gap)
    srch.run()
    best = srch.best
    root = _Search(prep, group)
    return {
        "best": (best[0], best[1], best[2]) if best else None,
        "complete": srch.complete,
        "nodes": srch.nodes,
        "trace": srch.trace,
        "root_ub": root.adm_ub(),
        "root": root,
    }


def _better(a, b) -> bool:
    """a strictly better than b, both (adm, power, ...) or None."""
    if a is None:
        return False
    if b is None:
        return True
    return a[0] > b[0] or (a[0] == b[0] and a[1] < b[1] - EPS)


def solve(s: Scenario, opts: SolverOptions = SolverOptions()) -> Solution:
    t0 = time.perf_counter()
    s = effective_scenario(s, opts)
    mode = opts.mode
    prep = _Prep(s, opts)
    groupings = _groupings(prep)
    if not groupings:
        return _empty_solution(s, mode, t0)
    deadline = t0 + opts.time_budget_s
    ordered = sorted(range(len(groupings)),
                     key=lambda i: (_root_key(prep, _Group(prep, groupings[i])), i))

    # greedy incumbent: first leaf of every grouping
    incumbent = None
    nodes = 0
    for i in ordered:
        res = _solve_group((s, replace(opts, node_limit=None), groupings[i], (-1, math.inf), deadline, True))
        nodes += res["nodes"]
        if _better(res["best"], incumbent):
            incumbent = res["best"]
    if mode == "greedy" or incumbent is None:
        return _finish(s, opts, incumbent, False, None, t0, nodes, (), "greedy" if mode == "greedy" else
                       "no incumbent within budget")

    try:
        got = _solve_with_plans(s, opts, prep, groupings, deadline)
    except PlanBudget:
        got = None
        note = "time budget exhausted during plan search"
    except PlanLimit as e:
        got = None
        note = f"plan search abandoned ({e}); cell-level search used"
    else:
        note = ""
    if got is not None:
        best, exact, n = got
        if _better(incumbent, best):
            raise SolverError("internal error: exact search lost to the greedy incumbent")
        return _finish(s, opts, best, exact, best[1], t0, nodes + n, (), "")
    if note.startswith("time"):
        bound = min((_Search(prep, _Group(prep, groupings[i])).lower_bound(True) for i in ordered),
                    default=incumbent[1])
        return _finish(s, opts, incumbent, False, min(bound, incumbent[1]), t0, nodes, (), note)

    ext = (incumbent[0], incumbent[1])
    results = {}
    if opts.parallel_workers > 1:
        jobs = [(s, opts, groupings[i], ext, deadline, False) for i in ordered]
        with ProcessPoolExecutor(max_workers=opts.parallel_workers) as pool:
            outs = list(pool.map(_solve_group, jobs))
        for i, res in zip(ordered, outs):
            results[i] = res
    else:
        for i in ordered:
            res = _solve_group((s, opts, groupings[i], ext, deadline, False))
            results[i] = res
            if _better(res["best"], (ext[0], ext[1])):
                ext = (res["best"][0], res["best"][1])
    best = None
    best_i = None
    trace = []
    for i in ordered:
        res = results[i]
        nodes += res["nodes"]
        trace += res["trace"]
        if _better(res["best"], best):
            best, best_i = res["best"], i
    if best is None or _better(incumbent, best):
        best = incumbent
    complete = all(r["complete"] for r in results.values())
    bound = best[1]
    if not complete:
        for i, res in results.items():
            if res["complete"] or res["root_ub"] < best[0]:
                continue
            lb = res["root"].lower_bound(res["root_ub"] == best[0])
            bound = min(bound, lb)
    trace.sort()
    return _finish(s, opts, best, complete, bound, t0, nodes, tuple(trace), note)


_WORKER: dict = {}


def _plan_worker_init(s, opts, deadline):
    prep = _Prep(s, opts)
    _WORKER.update(prep=prep, eng=PlanEngine(prep, deadline))


def _plan_job(args):
    """One grouping in a worker process; the engine and its plan caches live for the whole pool."""
    blocks, s_target, d_map, ext = args
    prep, eng = _WORKER["prep"], _WORKER["eng"]
    n0, eng.exact = eng.nodes, True
    res = eng.solve_group(_Group(prep, blocks), s_target, ext_power=ext, d_map=d_map)
    out = None if res is None else (res[0], choices_of(res[1]))
    return out, eng.exact, eng.nodes - n0


def _violations(prep, g, ch) -> int:
    a = assemble(prep, g, *ch)
    return sum(1 for v in check(a, prep.s) if v.constraint_id == "C12")


def _solve_with_plans(s, opts, prep, groupings, deadline):
    """Lexicographic optimum via per-EC plans, or None when nothing is feasible."""
    groups = [_Group(prep, b) for b in groupings]
    eng = PlanEngine(prep, deadline)
    ub, sh_min = [], []
    for g in groups:
        mins = {r: eng.min_shortfall(g, r) for r in g.block_of}
        sh_min.append(mins)
        ub.append(sum(g.max_adm[c] for r in prep.ec_ids for c in prep.cells_of[r]) - sum(mins.values()))
    workers = opts.parallel_workers
    # without C12, equal-power groupings are told apart by their delay violations
    tie_share = "C12" in prep.bypass
    par = {"nodes": 0, "exact": True}

    def fold(found, i, res, ch):
        if found is None or res < found[0] - EPS:
            return (res, i, ch)
        if tie_share and abs(res - found[0]) <= EPS:
            if _violations(prep, groups[i], ch) < _violations(prep, groups[found[1]], found[2]):
                return (res, i, ch)
        return found

    def bound(found):
        return math.inf if (tie_share or found is None) else found[0]

    pool = None
    try:
        for target in range(max(ub), -1, -1):
            plan_args = []
            for i in range(len(groups)):
                if ub[i] >= target:
                    extra = ub[i] - target
                    d_map = {r: m + extra for r, m in sh_min[i].items()}
                    plan_args.append((i, sum(sh_min[i].values()) + extra, d_map))
            found = None
            if workers > 1 and len(plan_args) > 1:
                # waves of ``workers`` groupings, each bounded by the earlier waves; a grouping's
                # own optimum does not depend on that bound, so the fold matches the serial loop
                pool = pool or ProcessPoolExecutor(max_workers=workers, initializer=_plan_worker_init,
                                                   initargs=(s, opts, deadline))
                # the first grouping runs alone so every wave after it starts with a bound
                waves = [plan_args[:1]] + [plan_args[k:k + workers] for k in range(1, len(plan_args), workers)]
                for wave in waves:
                    ext = bound(found)
                    jobs = [(groupings[i], st, dm, ext) for i, st, dm in wave]
                    for (i, _, _), (res, ex, n) in zip(wave, pool.map(_plan_job, jobs)):
                        par["nodes"] += n
                        par["exact"] = par["exact"] and ex
                        if res is not None:
                            found = fold(found, i, res[0], res[1])
            else:
                for i, st, dm in plan_args:
                    res = eng.solve_group(groups[i], st, ext_power=bound(found), d_map=dm)
                    if res is not None:
                        found = fold(found, i, res[0], choices_of(res[1]))
            if found is not None:
                power, i, (q_of, opt_of) = found
                a = assemble(prep, groups[i], q_of, opt_of)
                return (len(a.admitted), power, a), eng.exact and par["exact"], eng.nodes + par["nodes"]
        return None
    finally:
        if pool is not None:
            pool.shutdown()


def _finish(s, opts, best, proven, bound, t0, nodes, trace, note) -> Solution:
    mode = opts.mode
    if best is None:
        return _empty_solution(s, mode, t0, note or "no incumbent", proven=False)
    adm, power, a = best
    byp = bypassed_constraints("fscp" if mode == "greedy" else mode)
    violations = check(a, s, bypass=byp)
    if violations:
        raise SolverError(f"internal error: solver produced an infeasible assignment: {violations[0]}")
    exact = total_power(a, s)
    if abs(exact - power) > 1e-6:
        raise SolverError(f"internal error: search power {power} != evaluated power {exact}")
    dropped = ()
    if "C12" in byp:
        dropped = tuple(v.subject for v in check(a, s) if v.constraint_id == "C12")
        dropped = tuple(sorted(int(x.split()[1]) for x in dropped))
    return Solution(a, exact, adm, proven, exact if proven else min(bound if bound is not None else exact, exact),
                    time.perf_counter() - t0, mode, dropped, byp, nodes, note, trace)


def lower_bound(s: Scenario, decisions: list, opts: SolverOptions = SolverOptions(),
                blocks: Optional[list] = None, target_admission: Optional[int] = None) -> float:
    """Bound of the search node reached by replaying ``decisions`` (see ``replay``)."""
    srch = replay(s, decisions, opts, blocks)
    ub = srch.adm_ub()
    forced = target_admission is not None and ub == target_admission
    if srch.pos == len(srch.steps):
        return srch.leaf_cost()
    return srch.lower_bound(forced)


def replay(s: Scenario, decisions: list, opts: SolverOptions = SolverOptions(),
           blocks: Optional[list] = None) -> "_Search":
    """Search positioned after ``decisions``: per cell a q value (or None to leave it
    empty), per user an option index (or None to drop).  EC-end steps are implicit."""
    s = effective_scenario(s, opts)
    prep = _Prep(s, opts)
    blocks = blocks if blocks is not None else [[r] for r in prep.ec_ids]
    srch = _Search(prep, _Group(prep, blocks))
    srch.replay(decisions)
    return srch


def _replay(self, decisions):
    it = iter(decisions)
    while self.pos < len(self.steps):
        kind, x = self.steps[self.pos]
        if kind == "ec_end":
            r = x
            bundles, free, keys = self._ec_items(r)
            ec = self.s.ec(r)
            got = min_bins(bundles, free, ec.du_cp_capacity, ec.du_up_capacity, ec.du_count)
            if got is None:
                raise ValueError(f"EC {r} cannot be packed")
            self.ec_done[r] = (got[0], got[1], got[2], keys)
            self.pos += 1
            continue
        try:
            d = next(it)
        except StopIteration:
            return
        if kind == "cell":
            c = x
            if d is None:
                self.q[c] = None
                for u in self.prep.users_of[c]:
                    self.choice[u] = DROP
                self.pos += 1 + len(self.prep.users_of[c])
                self.cur_cell = None
                continue
            if d not in self.g.options[c]:
                raise ValueError(f"q={d} not available for cell {c}")
            q = d
            r = self.s.cell(c).ec_id
            self.q[c] = q
            self.cur_cell = c
            self.cur_rem = list(self.prep.users_of[c])
            self.cell_adm[c] = 0
            self.bundle_ec[c] = [self.prep.t.cp_functions_at(EC, q), 0]
            self.bundle_cc[c] = [self.prep.t.cp_functions_at(CC, q), 0]
            self.ec_cp[r] += self.bundle_ec[c][0]
            self.cc_cp += self.bundle_cc[c][0]
            self.ec_big[r] += int(2 * self.bundle_ec[c][0] > self.s.ec(r).du_cp_capacity)
            self.cc_big += int(2 * self.bundle_cc[c][0] > self.prep.cc.du_cp_capacity)
            self.block_bw[self.g.block_of[r]] += self.prep.t.cell_midhaul_bw(q)
            self.ec_cells[r] += 1
        else:
            u = x
            c = self.cur_cell
            q = self.q[c]
            r = self.s.cell(c).ec_id
            self.cur_rem.remove(u)
            if d is None:
                self.choice[u] = DROP
            else:
                o = self.g.options[c][q][u][d]
                self._apply(u, c, r, q, o, +1)
                self.choice[u] = (d, o)
            if not self.cur_rem:
                self.cur_cell = None
        self.pos += 1


def _leaf_cost(self) -> float:
    prep = self.prep
    cc = prep.cc
    cells = [c for c in self.order_cells if self.q.get(c) is not None]
    bundles = [tuple(self.bundle_cc[c]) for c in cells]
    free = []
    for c in cells:
        if self.q[c] == prep.f_cp:
            free += [self.choice[u][1].cc_up for u in prep.users_of[c] if self.choice.get(u) is not None]
    got = min_bins(bundles, free, cc.du_cp_capacity, cc.du_up_capacity, cc.du_count)
    if got is None:
        return math.inf
    return self._leaf_power(got[0])


def _leaf_assignment(self) -> Optional[Assignment]:
    """Assignment of a fully replayed state, or None when the CC cannot host it."""
    prep = self.prep
    cc = prep.cc
    cells = [c for c in self.order_cells if self.q.get(c) is not None]
    bundles = [tuple(self.bundle_cc[c]) for c in cells]
    free, fkeys = [], []
    for c in cells:
        if self.q[c] == prep.f_cp:
            for u in prep.users_of[c]:
                ch = self.choice.get(u)
                if ch is not None:
                    free.append(ch[1].cc_up)
                    fkeys.append(u)
    got = min_bins(bundles, free, cc.du_cp_capacity, cc.du_up_capacity, cc.du_count)
    return None if got is None else self._build(cells, got, fkeys)


_Search.replay = _replay
_Search.leaf_cost = _leaf_cost
_Search.leaf_assignment = _leaf_assignment
