"""Exact minimum-DU packing for one site.

Items are 2-D (cp, up) function counts.  A *bundle* must sit on a single DU as a
whole (the same-DU linking constraints); *free* items are UP-only chunks that may go
anywhere.  Returns the minimum number of DUs and a placement.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence


def _fits_free(free: Sequence[int], residual: list[int]) -> Optional[list[int]]:
    """Place 1-D free items into bins with the given residual capacities, or None."""
    if not free:
        return []
    if sum(free) > sum(residual):
        return None
    order = sorted(range(len(free)), key=lambda i: -free[i])
    sizes = [free[i] for i in order]
    if len(set(sizes)) == 1:
        s = sizes[0]
        slots = []
        for b, r in enumerate(residual):
            slots += [b] * (r // s)
        if len(slots) < len(sizes):
            return None
        where = [0] * len(free)
        for k, i in enumerate(order):
            where[i] = slots[k]
        return where
    res = list(residual)
    place = [0] * len(sizes)
    failed: set = set()
    suffix = [0] * (len(sizes) + 1)
    for k in range(len(sizes) - 1, -1, -1):
        suffix[k] = suffix[k + 1] + sizes[k]

    def rec(k: int) -> bool:
        if k == len(sizes):
            return True
        if suffix[k] > sum(res):
            return False
        key = (k, tuple(sorted(res)))
        if key in failed:
            return False
        tried = set()
        for b in range(len(res)):
            if res[b] >= sizes[k] and res[b] not in tried:
                tried.add(res[b])
                res[b] -= sizes[k]
                place[k] = b
                if rec(k + 1):
                    return True
                res[b] += sizes[k]
        failed.add(key)
        return False

    if not rec(0):
        return None
    where = [0] * len(free)
    for k, i in enumerate(order):
        where[i] = place[k]
    return where


def pack_into(bundles: Sequence[tuple[int, int]], free: Sequence[int], cap_cp: int, cap_up: int,
              bins: int) -> Optional[tuple[list[int], list[int]]]:
    """Placement of bundles and free items into ``bins`` DUs, or None if impossible."""
    for cp, up in bundles:
        if cp > cap_cp or up > cap_up:
            return None
    if any(f > cap_up for f in free):
        return None
    if sum(b[0] for b in bundles) > bins * cap_cp:
        return None
    if sum(b[1] for b in bundles) + sum(free) > bins * cap_up:
        return None
    order = sorted(range(len(bundles)), key=lambda i: (-bundles[i][0], -bundles[i][1]))
    res_cp = [cap_cp] * bins
    res_up = [cap_up] * bins
    place = [0] * len(bundles)
    failed: set = set()

    def rec(k: int) -> Optional[list[int]]:
        if k == len(order):
            return _fits_free(free, res_up)
        key = (k, tuple(sorted(zip(res_cp, res_up))))
        if key in failed:
            return None
        cp, up = bundles[order[k]]
        seen = set()
        for b in range(bins):
            state = (res_cp[b], res_up[b])
            if state in seen or res_cp[b] < cp or res_up[b] < up:
                continue
            seen.add(state)
            res_cp[b] -= cp
            res_up[b] -= up
            place[order[k]] = b
            got = rec(k + 1)
            if got is not None:
                return got
            res_cp[b] += cp
            res_up[b] += up
        failed.add(key)
        return None

    free_place = rec(0)
    if free_place is None:
        return None
    return list(place), free_place


def lower_bound_bins(bundles: Sequence[tuple[int, int]], free: Sequence[int], cap_cp: int,
                     cap_up: int) -> int:
    cp = sum(b[0] for b in bundles)
    up = sum(b[1] for b in bundles) + sum(free)
    if cp == 0 and up == 0:
        return 0
    lb = max(math.ceil(cp / cap_cp) if cap_cp else (math.inf if cp else 0),
             math.ceil(up / cap_up) if cap_up else (math.inf if up else 0))
    # bundles taking more than half the CP capacity cannot share a DU
    big = sum(1 for b in bundles if 2 * b[0] > cap_cp)
    return max(lb, big, 1)


def min_bins(bundles: Sequence[tuple[int, int]], free: Sequence[int], cap_cp: int, cap_up: int,
             max_bins: int) -> Optional[tuple[int, list[int], list[int]]]:
    """(DU count, bundle placement, free placement) with the fewest DUs, None if > max_bins.

    Zero-size items are placed on DU 0 and do not count towards the DU total.
    """
    live_b = [i for i, b in enumerate(bundles) if b[0] or b[1]]
    live_f = [i for i, f in enumerate(free) if f]
    bl = [bundles[i] for i in live_b]
    fl = [free[i] for i in live_f]
    lb = lower_bound_bins(bl, fl, cap_cp, cap_up)
    if lb == 0:
        return 0, [0] * len(bundles), [0] * len(free)
    if lb == math.inf:
        return None
    for k in range(lb, max_bins + 1):
        got = pack_into(bl, fl, cap_cp, cap_up, k)
        if got is not None:
            bp, fp = got
            out_b = [0] * len(bundles)
            out_f = [0] * len(free)
            for j, i in enumerate(live_b):
                out_b[i] = bp[j]
            for j, i in enumerate(live_f):
                out_f[i] = fp[j]
            return k, out_b, out_f
    return None
