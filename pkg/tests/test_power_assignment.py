import copy

from hypothesis import given, settings, strategies as st

from fscp.assignment import Assignment, canonical_order, derive_counts, ec_cache_bytes
from fscp.experiments import tiny_random_scenario
from fscp.power import power_breakdown, total_power
from fscp.scenario import scenario_from_dict, table1_document
from fscp.solver import SolverOptions, solve

from conftest import table1_with_users, user
from test_golden import two_user_one_cell


def test_empty_breakdown(table1):
    parts = power_breakdown(Assignment(), table1)
    assert [k for k, v in parts if v] == ["cc_cache"]
    assert len(parts) == 4 + 5 * len(table1.edge_clouds)


def test_inactive_ec_duplicate_keeps_power():
    s, a = two_user_one_cell()
    doc = copy.deepcopy(table1_document())
    doc["users"] = [user(0, 0), user(1, 0)]
    extra = copy.deepcopy(doc["topology"]["edge_clouds"][3])
    extra["id"] = 9
    for k, c in enumerate(extra["cells"]):
        c["id"] = 90 + k
    doc["topology"]["edge_clouds"].append(extra)
    assert total_power(a, scenario_from_dict(doc)) == total_power(a, s)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_breakdown_sums_to_total(seed):
    s = tiny_random_scenario(seed)
    a = solve(s, SolverOptions(mode="greedy")).assignment
    assert abs(sum(v for _, v in power_breakdown(a, s)) - total_power(a, s)) < 1e-9


def test_empty_counts(table1):
    dc = derive_counts(Assignment(), table1)
    assert dc.active_cc_dus == 0 and dc.active_wavelengths == 0
    assert set(dc.active_ec_dus.values()) == {0}
    assert set(dc.ec_cache_bytes.values()) == {0}


def test_shared_ec_du_counted_once():
    s = table1_with_users([user(0, 0), user(1, 1)])
    a = Assignment(frozenset({0, 1}), {0: 3, 1: 3}, {0: 1, 1: 1}, {0: 1, 1: 1}, {0: 0, 1: 0},
                   {0: 0, 1: 0}, {0: 0, 1: 0}, {0: 0}, {0: 0, 1: 0})
    assert derive_counts(a, s).active_ec_dus[0] == 2


def test_cache_dedup_per_ec():
    s = table1_with_users([user(0, 0, file=7), user(1, 1, file=7)])
    a = Assignment(frozenset({0, 1}), {0: 3, 1: 3}, {0: 2, 1: 2}, {0: 0, 1: 0}, {0: 0, 1: 0},
                   {0: 0, 1: 1}, {0: 0, 1: 0}, {0: 0}, {0: 1, 1: 1})
    assert ec_cache_bytes(a, s)[0] == 20_000_000


def test_canonical_order_examples():
    base = dict(cp_split={}, ec_up_du={}, cc_up_du={}, ec_cp_du={}, cc_cp_du={}, wavelength={}, edge_cached={})
    a = Assignment(frozenset({1}), up_split={1: 0}, **base)
    b = Assignment(frozenset({1}), up_split={1: 1}, **base)
    assert canonical_order(a) == canonical_order(a)
    assert canonical_order(a) < canonical_order(b)
    c = Assignment(frozenset({1, 2}), up_split={1: 0, 2: 0}, **base)
    d = Assignment(frozenset({1, 3}), up_split={1: 0, 3: 0}, **base)
    assert canonical_order(c) < canonical_order(d)


def test_assignment_dict_roundtrip():
    _, a = two_user_one_cell()
    assert Assignment.from_dict(a.to_dict()) == a
