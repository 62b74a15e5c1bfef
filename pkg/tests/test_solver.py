import math
import random

import pytest

from fscp.assignment import derive_counts
from fscp.experiments import GenSpec, generate_scenario, tiny_random_scenario
from fscp.feasibility import check
from fscp.oracle import OracleLimitError, enumerate_optimal
from fscp.power import total_power
from fscp.solver import SolverOptions, lower_bound, replay, solve

from conftest import table1_with_users, user


def same_objective(a, b):
    return a.admitted_count == b.admitted_count and abs(a.total_power_w - b.total_power_w) <= 1e-6


@pytest.mark.parametrize("mode,seeds", [("fscp", range(0, 60)), ("all_ec", range(60, 90)),
                                        ("all_cc", range(90, 120))])
def test_matches_oracle(mode, seeds):
    bad = []
    for seed in seeds:
        s = tiny_random_scenario(seed)
        got, want = solve(s, SolverOptions(mode=mode)), enumerate_optimal(s, mode=mode)
        if not same_objective(got, want) or not got.proven_optimal:
            bad.append(seed)
    assert bad == []


@pytest.mark.parametrize("seed", range(20))
def test_solutions_feasible_under_mode(seed):
    s = tiny_random_scenario(seed)
    for mode in ("fscp", "all_ec", "all_cc", "greedy"):
        sol = solve(s, SolverOptions(mode=mode))
        assert check(sol.assignment, s, bypass=sol.bypassed) == []
        assert sol.bound_w <= sol.total_power_w + 1e-9
        assert abs(total_power(sol.assignment, s) - sol.total_power_w) < 1e-9


def test_no_users(table1):
    sol = solve(table1)
    assert sol.admitted_count == 0 and sol.total_power_w == 20.0 and sol.proven_optimal


def test_nothing_fits_admits_nobody():
    s = table1_with_users([user(0, 0, d=0.001)])
    sol = solve(s)
    assert sol.admitted_count == 0
    assert sol.assignment.admitted == frozenset()


def test_single_user_uses_one_cc_du():
    s = table1_with_users([user(0, 0)])
    sol = solve(s)
    assert sol.admitted_count == 1
    assert derive_counts(sol.assignment, s).active_cc_dus <= 1


def test_baseline_power_order_on_defaults():
    s = generate_scenario(GenSpec(n_users=19))
    cc, ec = solve(s, SolverOptions(mode="all_cc")), solve(s, SolverOptions(mode="all_ec"))
    assert cc.total_power_w <= ec.total_power_w


def test_greedy_is_not_proven():
    s = tiny_random_scenario(3)
    assert not solve(s, SolverOptions(mode="greedy")).proven_optimal


def test_deterministic_across_workers():
    s = generate_scenario(GenSpec(n_users=12, seed=4))
    a = solve(s, SolverOptions(parallel_workers=1))
    b = solve(s, SolverOptions(parallel_workers=2))
    c = solve(s, SolverOptions(parallel_workers=1))
    assert a.to_dict() == b.to_dict() == c.to_dict()


def test_oracle_limits_enforced(table1):
    with pytest.raises(OracleLimitError):
        enumerate_optimal(table1)


# ---- lower bound -----------------------------------------------------------

def _choices(srch):
    kind, x = srch.steps[srch.pos]
    if kind == "cell":
        return [None] + sorted(srch.g.options[x])
    c = srch.cur_cell
    opts = list(range(len(srch.g.options[c][srch.q[c]][x])))
    # a cell given a split keeps at least one user; emptying it is the skip-cell branch
    if opts and len(srch.cur_rem) == 1 and srch.cell_adm[c] == 0:
        return opts
    return [None] + opts


def _completions(s, prefix):
    """Leaf cost of every completion of ``prefix`` (infeasible packings skipped)."""
    try:
        srch = replay(s, prefix)
    except ValueError:
        return
    if srch.pos == len(srch.steps):
        a = srch.leaf_assignment()
        if a is not None and not check(a, s):
            yield total_power(a, s)
        return
    for d in _choices(srch):
        yield from _completions(s, prefix + [d])


def _random_prefix(s, rng):
    prefix = []
    srch = replay(s, prefix)
    stop = rng.randint(0, len(srch.steps))
    while srch.pos < len(srch.steps) and len(prefix) < stop:
        nxt = prefix + [rng.choice(_choices(srch))]
        try:
            srch = replay(s, nxt)
        except ValueError:
            break
        prefix = nxt
    return prefix


def test_root_bound_at_least_cc_cache(table1):
    s = table1_with_users([user(0, 0), user(1, 5)])
    assert lower_bound(s, []) >= s.power_params.p_cache_cc


def test_fully_fixed_state_bound_is_total_power():
    checked = 0
    for seed in range(40):
        s = tiny_random_scenario(seed)
        rng = random.Random(seed)
        prefix, srch = [], replay(s, [])
        while srch.pos < len(srch.steps):
            prefix.append(rng.choice(_choices(srch)))
            try:
                srch = replay(s, prefix)
            except ValueError:
                break
        else:
            a = srch.leaf_assignment()
            if a is None:
                continue
            assert lower_bound(s, prefix) == total_power(a, s)
            checked += 1
    assert checked >= 20


def test_partial_bound_below_completion_minimum():
    trials = 0
    seed = 0
    while trials < 100:
        s = tiny_random_scenario(1000 + seed)
        rng = random.Random(seed)
        seed += 1
        prefix = _random_prefix(s, rng)
        best = min(_completions(s, prefix), default=math.inf)
        if best == math.inf:
            continue
        assert lower_bound(s, prefix) <= best + 1e-9, (seed, prefix)
        trials += 1
