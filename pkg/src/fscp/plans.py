"""Two-level exact search used by ``solve``.

Level one enumerates, for every EC, all non-dominated *plans*: complete choices for
the EC's cells and users summarised by what the rest of the network sees (CC items,
midhaul bandwidth, admitted count) plus the EC-local power, whose DU count is exact.
Level two picks one plan per EC with a depth-first search bounded by a table of the
cheapest completion for every remaining CC capacity budget.
"""
from __future__ import annotations

import math
import time
from itertools import product
from typing import Optional

import numpy as np

from .assignment import Assignment
from .packing import lower_bound_bins, min_bins
from .split_maps import CC, EC

EPS = 1e-9
MAX_TABLE_CELLS = 4_000_000


class PlanLimit(Exception):
    """Plan enumeration grew beyond its state cap."""


class PlanBudget(Exception):
    """Wall-clock budget ran out."""


def _compositions(n: int, parts: int):
    if parts == 1:
        yield (n,)
        return
    for k in range(n, -1, -1):
        for rest in _compositions(n - k, parts - 1):
            yield (k,) + rest


def _merge(a: tuple, b: tuple) -> tuple:
    if not b:
        return a
    if not a:
        return b
    return tuple(sorted(a + b))


class _CellCfg:
    __slots__ = ("a", "short", "ec_b", "ec_f", "cc_b", "cc_f", "bw", "files", "radio", "q", "choices", "cell")

    def __init__(self, **kw):
        for k, v in kw.items():
            setattr(self, k, v)

    def key(self):
        return (self.ec_b, self.ec_f, self.cc_b, self.cc_f, self.files, self.a, round(self.bw, 6))


class _Plan:
    __slots__ = ("a", "short", "e", "cc_b", "cc_f", "bw", "cells")

    def __init__(self, a, short, e, cc_b, cc_f, bw, cells):
        self.a, self.short, self.e, self.cc_b, self.cc_f, self.bw, self.cells = a, short, e, cc_b, cc_f, bw, cells


class PlanEngine:
    def __init__(self, prep, deadline: float = math.inf, max_states: int = 300_000):
        self.prep = prep
        self.s = prep.s
        self.deadline = deadline
        self.max_states = max_states
        self._ec_pack: dict = {}
        self._plans: dict = {}
        self._classes: dict = {}
        self.nodes = 0
        self.exact = True

    def _time(self):
        if time.perf_counter() > self.deadline:
            raise PlanBudget

    # -- level one -------------------------------------------------------------
    def cell_configs(self, g, c: int, d: int) -> list:
        prep, s, t = self.prep, self.s, self.prep.t
        users = prep.users_of[c]
        maxa = g.max_adm[c]
        out: dict = {}
        if maxa <= d:
            cfg = _CellCfg(a=0, short=maxa, ec_b=(), ec_f=(), cc_b=(), cc_f=(), bw=0.0, files=frozenset(),
                           radio=0.0, q=None, choices=tuple((u, None) for u in users), cell=c)
            out[cfg.key()] = cfg
        radio = prep.pp.p_tx + prep.pp.p_fh
        for q in g.qs[c]:
            tab = g.options[c][q]
            classes: dict = {}
            for u in users:
                os = tab.get(u) or []
                if not os:
                    continue
                key = (tuple((o.p, o.delta) for o in os),
                       s.user(u).demanded_file if any(o.delta for o in os) else None)
                classes.setdefault(key, []).append(u)
            if "C12" in prep.bypass:
                # delay is not enforced: turn away users that would miss their threshold first
                for us in classes.values():
                    us.sort(key=lambda u: tab[u][0].delay > s.user(u).delay_threshold_s)
            ckeys = list(classes)
            per_class = [[comp for comp in _compositions(len(classes[k]), len(k[0]) + 1) if comp[-1] <= d]
                         for k in ckeys]
            ec_cp, cc_cp = t.cp_functions_at(EC, q), t.cp_functions_at(CC, q)
            for combo in product(*per_class):
                a = sum(len(classes[k]) - comp[-1] for k, comp in zip(ckeys, combo))
                if a == 0 or maxa - a > d:
                    continue
                choices = []
                ec_up_b = cc_up_b = 0
                ec_f, cc_f = [], []
                bw = t.cell_midhaul_bw(q)
                files = set()
                for k, comp in zip(ckeys, combo):
                    us = classes[k]
                    i = 0
                    for j, cnt in enumerate(comp):
                        for _ in range(cnt):
                            u = us[i]
                            i += 1
                            if j == len(comp) - 1:
                                choices.append((u, None))
                                continue
                            o = tab[u][j]
                            choices.append((u, j))
                            if o.p < prep.f_up:
                                ec_up_b += o.ec_up
                            elif o.ec_up:
                                ec_f.append(o.ec_up)
                            if q < prep.f_cp:
                                cc_up_b += o.cc_up
                            elif o.cc_up:
                                cc_f.append(o.cc_up)
                            bw += o.bw
                            if o.delta:
                                files.add(s.user(u).demanded_file)
                choices += [(u, None) for u in users if not tab.get(u)]
                ec_b = ((ec_cp, ec_up_b),) if (ec_cp or ec_up_b) else ()
                cc_b = ((cc_cp, cc_up_b),) if (cc_cp or cc_up_b) else ()
                cfg = _CellCfg(a=a, short=maxa - a, ec_b=ec_b, ec_f=tuple(sorted(ec_f)), cc_b=cc_b,
                               cc_f=tuple(sorted(cc_f)), bw=bw, files=frozenset(files), radio=radio, q=q,
                               choices=tuple(sorted(choices)), cell=c)
                k2 = cfg.key()
                if k2 not in out or cfg.bw < out[k2].bw - EPS:
                    out[k2] = cfg
        return list(out.values())

    def ec_plans(self, g, r: int, d: int) -> list:
        key = (r, g.divisor[r], d)
        if key in self._plans:
            return self._plans[key]
        prep, s = self.prep, self.s
        ec, cc = s.ec(r), prep.cc
        K = s.wavelength_capacity_mbps
        states = {((), (), (), (), frozenset(), 0, 0.0): (0.0, 0.0, ())}
        for c in prep.cells_of[r]:
            self._time()
            cfgs = self.cell_configs(g, c, d)
            new: dict = {}
            for (eb, ef, cb, cf, files, short, _), (radio, bw, cells) in states.items():
                for cfg in cfgs:
                    sh = short + cfg.short
                    if sh > d:
                        continue
                    nfiles = files | cfg.files if cfg.files else files
                    if nfiles and sum(s.file(f).size_bytes for f in nfiles) > ec.cache_capacity_bytes:
                        continue
                    nbw = bw + cfg.bw
                    if nbw > K + EPS:
                        continue
                    neb, nef = _merge(eb, cfg.ec_b), _merge(ef, cfg.ec_f)
                    if cfg.ec_b or cfg.ec_f:
                        if lower_bound_bins(neb, nef, ec.du_cp_capacity, ec.du_up_capacity) > ec.du_count:
                            continue
                    ncb, ncf = _merge(cb, cfg.cc_b), _merge(cf, cfg.cc_f)
                    if cfg.cc_b or cfg.cc_f:
                        if lower_bound_bins(ncb, ncf, cc.du_cp_capacity, cc.du_up_capacity) > cc.du_count:
                            continue
                    k = (neb, nef, ncb, ncf, nfiles, sh, round(nbw, 6))
                    val = (radio + cfg.radio, nbw, cells + (cfg,))
                    old = new.get(k)
                    if old is None or (val[0], val[1]) < (old[0] - EPS, old[1] - EPS):
                        new[k] = val
            states = new
            if len(states) > self.max_states:
                raise PlanLimit(f"EC {r}: more than {self.max_states} partial plans")
        pp = prep.pp
        proj: dict = {}
        for (eb, ef, cb, cf, files, short, _), (radio, bw, cells) in states.items():
            pk = (ec.du_count, ec.du_cp_capacity, ec.du_up_capacity, eb, ef)
            if pk not in self._ec_pack:
                got = min_bins(list(eb), list(ef), ec.du_cp_capacity, ec.du_up_capacity, ec.du_count)
                self._ec_pack[pk] = None if got is None else got[0]
            du = self._ec_pack[pk]
            if du is None:
                continue
            a = sum(cfg.a for cfg in cells)
            e = radio + du * pp.p_du_ec
            if a:
                e += pp.p_onu
            if du:
                e += pp.p_cool_ec
            if files:
                e += pp.p_cache_ec
            plan = _Plan(a, short, e, cb, cf, bw, cells)
            lst = proj.setdefault((short, cb, cf), [])
            if any(p.e <= e + EPS and p.bw <= bw + EPS for p in lst):
                continue
            lst[:] = [p for p in lst if not (e <= p.e + EPS and bw <= p.bw + EPS)] + [plan]
        plans = [p for lst in proj.values() for p in lst]
        self._plans[key] = plans
        return plans

    def ec_classes(self, g, r: int, d: int) -> list:
        """Plans grouped by (shortfall, CC CP sum, CC UP sum, CC big bundles, EC power)."""
        key = (r, g.divisor[r], d)
        if key in self._classes:
            return self._classes[key]
        cc = self.prep.cc
        groups: dict = {}
        for p in self.ec_plans(g, r, d):
            cp = sum(b[0] for b in p.cc_b)
            up = sum(b[1] for b in p.cc_b) + sum(p.cc_f)
            big = sum(1 for b in p.cc_b if 2 * b[0] > cc.du_cp_capacity)
            groups.setdefault((p.short, cp, up, big, round(p.e, 9)), []).append(p)
        out = []
        for k in sorted(groups):
            members = sorted(groups[k], key=lambda p: p.bw)
            out.append((k[0], k[1], k[2], k[3], members[0].e, members))
        self._classes[key] = out
        return out

    # -- level two -------------------------------------------------------------
    def _cc_power(self, k: int) -> float:
        pp = self.prep.pp
        if k == 0:
            return 0.0
        return k * pp.p_du_cc + pp.p_cool_cc + (0.0 if pp.cc_cache_always_on else pp.p_cache_cc)

    def min_shortfall(self, g, r: int) -> int:
        """Fewest admittable users EC ``r`` must turn away on its own."""
        ub = sum(g.max_adm[c] for c in self.prep.cells_of[r])
        for d in range(ub + 1):
            if self.ec_plans(g, r, d):
                return d
        return ub

    def solve_group(self, g, s_target: int, ext_power: float = math.inf, strict_ext: bool = False,
                    d_map: Optional[dict] = None):
        """Cheapest combination with total shortfall exactly ``s_target``.

        Returns (power, [plan per EC]) or None.  Nodes whose bound reaches
        ``ext_power`` are pruned (ties too, unless ``strict_ext``).
        """
        prep, s = self.prep, self.s
        cc = prep.cc
        pp = prep.pp
        order = [r for blk in g.blocks for r in blk]
        self._order, self._block_of = order, g.block_of
        classes = {r: self.ec_classes(g, r, d_map[r] if d_map else s_target) for r in order}
        if any(not classes[r] for r in order):
            return None
        ub = {r: sum(g.max_adm[c] for c in prep.cells_of[r]) for r in order}
        Xmax, Ymax = cc.du_count * cc.du_cp_capacity, cc.du_count * cc.du_up_capacity
        T = s_target + 1
        bx = by = 1
        while T * (Xmax // bx + 1) * (Ymax // by + 1) > MAX_TABLE_CELLS:
            if Ymax // by >= Xmax // bx:
                by *= 2
            else:
                bx *= 2
        nx, ny = Xmax // bx + 1, Ymax // by + 1
        # suffix[j][t, x, y]: cheapest EC power of order[j:] with shortfall t and CC loads within (x, y)
        suffix = [None] * (len(order) + 1)
        base = np.full((T, nx, ny), np.inf)
        base[0] = 0.0
        suffix[len(order)] = base
        for j in range(len(order) - 1, -1, -1):
            self._time()
            nxt = suffix[j + 1]
            cur = np.full((T, nx, ny), np.inf)
            best_e: dict = {}
            for sh, cp, up, big, e, _ in classes[order[j]]:
                k = (sh, cp // bx, up // by)
                if k not in best_e or e < best_e[k]:
                    best_e[k] = e
            for (sh, qx, qy), e in best_e.items():
                if sh >= T or qx >= nx or qy >= ny:
                    continue
                np.minimum(cur[sh:, qx:, qy:], nxt[:T - sh, :nx - qx, :ny - qy] + e, out=cur[sh:, qx:, qy:])
            suffix[j] = cur
        fixed = pp.p_cache_cc if pp.cc_cache_always_on else 0.0
        block_of = g.block_of
        best = [ext_power, None]
        own = [False]

        def future(j, t, cp, up, big) -> float:
            tab = suffix[j][t]
            lo = math.inf
            for k in range(0, cc.du_count + 1):
                if k == 0:
                    if cp or up:
                        continue
                    v = tab[0, 0]
                else:
                    X, Y = k * cc.du_cp_capacity - cp, k * cc.du_up_capacity - up
                    if X < 0 or Y < 0 or big > k:
                        continue
                    v = tab[X // bx, Y // by] + self._cc_power(k)
                lo = min(lo, v)
            return lo

        def blocks_lb(j, t, live: set) -> int:
            n = set(live)
            for r in order[j:]:
                if ub[r] > t:
                    n.add(block_of[r])
            return len(n)

        chosen: list = []
        bw_block = [0.0] * len(g.blocks)

        def rec(j, t, e_sum, cp, up, big, live):
            self.nodes += 1
            if (self.nodes & 1023) == 0:
                self._time()
            if j == len(order):
                if t != 0:
                    return
                self._leaf(chosen, e_sum, len(live), fixed, best, own, strict_ext)
                return
            r = order[j]
            kids = []
            for idx, (sh, ccp, cup, cbig, e, members) in enumerate(classes[r]):
                if sh > t:
                    continue
                if bw_block[block_of[r]] + members[0].bw > s.wavelength_capacity_mbps + EPS:
                    continue
                nt = t - sh
                nlive = live | {block_of[r]} if members[0].a else live
                lb = (fixed + e_sum + e + future(j + 1, nt, cp + ccp, up + cup, big + cbig)
                      + pp.p_lc * blocks_lb(j + 1, nt, nlive))
                if lb == math.inf:
                    continue
                kids.append((lb, idx, nt, nlive))
            kids.sort(key=lambda x: (x[0], x[1]))
            for lb, idx, nt, nlive in kids:
                if self._pruned(lb, best, own, strict_ext):
                    break
                sh, ccp, cup, cbig, e, members = classes[r][idx]
                chosen.append(members)
                bw_block[block_of[r]] += members[0].bw
                try:
                    rec(j + 1, nt, e_sum + e, cp + ccp, up + cup, big + cbig, nlive)
                finally:
                    chosen.pop()
                    bw_block[block_of[r]] -= members[0].bw

        rec(0, s_target, 0.0, 0, 0, 0, frozenset())
        if best[1] is None:
            return None
        return best[0], best[1]

    @staticmethod
    def _pruned(lb, best, own, strict_ext) -> bool:
        if own[0] or not strict_ext:
            return lb >= best[0] - EPS
        return lb > best[0] + EPS

    def _leaf(self, chosen, e_sum, n_live, fixed, best, own, strict_ext, product_cap: int = 4096):
        prep, s = self.prep, self.s
        cc = prep.cc
        base = fixed + e_sum + n_live * prep.pp.p_lc

        def cc_cost(plans):
            bundles = [b for p in plans for b in p.cc_b]
            free = [f for p in plans for f in p.cc_f]
            got = min_bins(bundles, free, cc.du_cp_capacity, cc.du_up_capacity, cc.du_count)
            if got is None:
                return None, None
            return got[0], lower_bound_bins(bundles, free, cc.du_cp_capacity, cc.du_up_capacity)

        reps = [m[0] for m in chosen]
        k, lb = cc_cost(reps)
        pick = (k, reps) if k is not None else (None, None)
        if k is None or k > lb:
            sizes = [len(m) for m in chosen]
            if math.prod(sizes) > product_cap:
                self.exact = False
            else:
                for combo in product(*chosen):
                    if not self._bw_ok(combo):
                        continue
                    k2, _ = cc_cost(list(combo))
                    if k2 is not None and (pick[0] is None or k2 < pick[0]):
                        pick = (k2, list(combo))
        if pick[0] is None:
            return
        power = base + self._cc_power(pick[0])
        if self._pruned(power, best, own, strict_ext):
            return
        best[0], best[1] = power, list(pick[1])
        own[0] = True

    def _bw_ok(self, plans) -> bool:
        load: dict = {}
        for r, p in zip(self._order, plans):
            b = self._block_of[r]
            load[b] = load.get(b, 0.0) + p.bw
        return all(v <= self.s.wavelength_capacity_mbps + EPS for v in load.values())


def choices_of(plans: list) -> tuple[dict, dict]:
    """(q per active cell, option index per admitted user) for one plan per EC."""
    q_of, opt_of = {}, {}
    for plan in plans:
        for cfg in plan.cells:
            if cfg.a == 0:
                continue
            for u, j in cfg.choices:
                if j is not None:
                    opt_of[u] = j
            q_of[cfg.cell] = cfg.q
    return q_of, opt_of


def assemble(prep, g, q_of: dict, opt_of: dict) -> Assignment:
    """Assignment with minimum-DU placements for the given split/option choices."""
    s, t = prep.s, prep.t
    cc = prep.cc
    up, cp, cached = {}, {}, {}
    opt = {}
    for u, j in opt_of.items():
        c = s.user(u).cell_id
        o = g.options[c][q_of[c]][u][j]
        opt[u] = o
        up[u] = o.p
        cached[u] = o.delta
    cp = dict(q_of)
    ec_up_du, cc_up_du, ec_cp_du, cc_cp_du, wl = {}, {}, {}, {}, {}
    cc_cells, cc_bundles, cc_free, cc_keys = [], [], [], []
    for r in prep.ec_ids:
        ec = s.ec(r)
        cells = [c for c in prep.cells_of[r] if c in q_of]
        if not cells:
            continue
        wl[r] = g.block_of[r]
        bundles, free, keys = [], [], []
        for c in cells:
            q = q_of[c]
            users = [u for u in prep.users_of[c] if u in opt]
            bundles.append((t.cp_functions_at(EC, q), sum(opt[u].ec_up for u in users if opt[u].p < prep.f_up)))
            cc_cells.append(c)
            cc_bundles.append((t.cp_functions_at(CC, q),
                               sum(opt[u].cc_up for u in users) if q < prep.f_cp else 0))
            for u in users:
                if opt[u].p == prep.f_up:
                    free.append(opt[u].ec_up)
                    keys.append(u)
                if q == prep.f_cp:
                    cc_free.append(opt[u].cc_up)
                    cc_keys.append(u)
        got = min_bins(bundles, free, ec.du_cp_capacity, ec.du_up_capacity, ec.du_count)
        if got is None:
            raise ValueError(f"EC {r} cannot host the chosen splits")
        where_b = dict(zip(cells, got[1]))
        where_f = dict(zip(keys, got[2]))
        for c in cells:
            ec_cp_du[c] = where_b[c]
            for u in prep.users_of[c]:
                if u in opt:
                    ec_up_du[u] = where_f[u] if u in where_f else where_b[c]
    got = min_bins(cc_bundles, cc_free, cc.du_cp_capacity, cc.du_up_capacity, cc.du_count)
    if got is None:
        raise ValueError("the central cloud cannot host the chosen splits")
    where_b = dict(zip(cc_cells, got[1]))
    where_f = dict(zip(cc_keys, got[2]))
    for c in cc_cells:
        cc_cp_du[c] = where_b[c]
        for u in prep.users_of[c]:
            if u in opt:
                cc_up_du[u] = where_f[u] if u in where_f else where_b[c]
    return Assignment(frozenset(opt), up, cp, ec_up_du, cc_up_du, ec_cp_du, cc_cp_du, wl, cached)
