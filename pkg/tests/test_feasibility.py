import copy

import pytest
from hypothesis import given, strategies as st

from fscp.assignment import Assignment
from fscp.feasibility import CONSTRAINT_IDS, big_m, bigm_lower_ok, bigm_upper_ok, check, is_feasible
from fscp.scenario import scenario_from_dict, table1_document

from conftest import user


def scen(users, tweak=None):
    doc = copy.deepcopy(table1_document())
    doc["users"] = users
    if tweak:
        tweak(doc)
    return scenario_from_dict(doc)


def mk(users, cells, wl=None):
    """users: uid -> (p, b, ec_du, cc_du); cells: cid -> (q, ec_du, cc_du)."""
    return Assignment(frozenset(users), {u: v[0] for u, v in users.items()}, {c: v[0] for c, v in cells.items()},
                      {u: v[2] for u, v in users.items()}, {u: v[3] for u, v in users.items()},
                      {c: v[1] for c, v in cells.items()}, {c: v[2] for c, v in cells.items()},
                      wl or {0: 0}, {u: v[1] for u, v in users.items()})


def cc_caps(cp, up):
    def f(doc):
        doc["topology"]["central_cloud"].update(du_cp_capacity=cp, du_up_capacity=up)
        for ec in doc["topology"]["edge_clouds"]:
            ec["du_up_capacity"] = min(ec["du_up_capacity"], up)
    return f


def small_k(doc):
    doc["topology"]["wavelength_capacity_mbps"] = 8.0


def one_file_cache(doc):
    doc["topology"]["edge_clouds"][0]["cache_capacity_bytes"] = 20_000_000


one = [user(0, 0)]
six = [user(k, 0) for k in range(6)]
two_cells = [user(0, 0), user(1, 1)]
two_files = [user(0, 0, file=0), user(1, 0, file=1)]

# constraint -> (scenario users, tweak, violating assignment, satisfying assignment)
FIXTURES = {
    "C1": (one, None, mk({0: (0, 0, 0, 0)}, {0: (0, 0, 0)}), mk({0: (0, 0, 0, 0)}, {0: (3, 0, 0)})),
    "C2": (one, None, mk({0: (0, 0, 1, 0)}, {0: (3, 0, 0)}), mk({0: (0, 0, 0, 0)}, {0: (3, 0, 0)})),
    "C3": (one, None, mk({0: (3, 0, 0, 1)}, {0: (2, 0, 0)}), mk({0: (3, 0, 0, 0)}, {0: (2, 0, 0)})),
    "C4": (two_cells, None, mk({0: (3, 0, 1, 0), 1: (3, 0, 1, 0)}, {0: (2, 0, 0), 1: (2, 0, 0)}),
           mk({0: (3, 0, 2, 0), 1: (3, 0, 2, 0)}, {0: (2, 0, 0), 1: (2, 1, 0)})),
    "C5": (two_cells, cc_caps(3, 15), mk({0: (3, 0, 0, 0), 1: (3, 0, 1, 0)}, {0: (0, 0, 0), 1: (0, 1, 0)}),
           mk({0: (3, 0, 0, 0), 1: (3, 0, 1, 1)}, {0: (0, 0, 0), 1: (0, 1, 1)})),
    "C6": (six, None, mk({k: (3, 0, 1, 0) for k in range(6)}, {0: (2, 0, 0)}),
           mk({k: (3, 0, 1 + k // 3, 0) for k in range(6)}, {0: (2, 0, 0)})),
    "C7": (six, cc_caps(37, 15), mk({k: (0, 0, 0, 1) for k in range(6)}, {0: (3, 0, 0)}),
           mk({k: (0, 0, 0, 1 + k // 3) for k in range(6)}, {0: (3, 0, 0)})),
    "C8": (one, small_k, mk({0: (0, 0, 0, 0)}, {0: (3, 0, 0)}), mk({0: (2, 0, 0, 0)}, {0: (3, 0, 0)})),
    "C9": (one, None, mk({0: (2, 1, 0, 0)}, {0: (3, 0, 0)}), mk({0: (2, 0, 0, 0)}, {0: (3, 0, 0)})),
    "C10": (one, None, mk({0: (4, 1, 0, 0)}, {0: (2, 0, 0)}), mk({0: (3, 1, 0, 0)}, {0: (2, 0, 0)})),
    "C11": (two_files, one_file_cache, mk({0: (3, 1, 1, 0), 1: (3, 1, 1, 0)}, {0: (2, 0, 0)}),
            mk({0: (3, 1, 1, 0), 1: (3, 0, 1, 0)}, {0: (2, 0, 0)})),
    "C12": ([user(0, 0, d=0.010)], None, mk({0: (0, 0, 0, 0)}, {0: (3, 0, 0)}), mk({0: (0, 0, 0, 0)}, {0: (3, 0, 0)})),
}


def test_every_constraint_has_fixtures():
    assert sorted(FIXTURES, key=lambda c: int(c[1:])) == list(CONSTRAINT_IDS)


@pytest.mark.parametrize("cid", CONSTRAINT_IDS)
def test_violating_fixture_flags_exactly_its_constraint(cid):
    users, tweak, bad, _ = FIXTURES[cid]
    s = scen(users, tweak)
    assert {v.constraint_id for v in check(bad, s)} == {cid}


@pytest.mark.parametrize("cid", CONSTRAINT_IDS)
def test_satisfying_fixture_is_clean(cid):
    users, tweak, _, good = FIXTURES[cid]
    if cid == "C12":
        users = [user(0, 0)]
    s = scen(users, tweak)
    assert check(good, s) == []
    assert is_feasible(good, s)


def test_c4_example_counts():
    users, tweak, bad, _ = FIXTURES["C4"]
    (v,) = check(bad, scen(users, tweak))
    assert (v.measured, v.bound) == (4, 3)


def test_bypass_skips_constraint():
    users, tweak, bad, _ = FIXTURES["C1"]
    assert check(bad, scen(users, tweak), bypass=("C1",)) == []


def test_le_relation_accepts_fully_distributed():
    s = scen(one)
    a = mk({0: (3, 0, 0, 0)}, {0: (3, 0, 0)})
    assert [v.constraint_id for v in check(a, s)] == ["C1"]
    assert check(a, s, split_once="le") == []


def test_empty_assignment_feasible(table1):
    assert is_feasible(Assignment(), table1)


@pytest.mark.parametrize("f_up", [1, 2, 3, 4, 5])
def test_bigm_pair_exhaustive(f_up):
    m = big_m(f_up)
    assert m == f_up + 1
    for p in range(f_up + 1):
        for b in (0, 1):
            both = bigm_upper_ok(p, b, f_up, m) and bigm_lower_ok(p, b, f_up, m)
            assert both == (b == 0 or p == f_up), (p, b)


@given(st.integers(1, 8), st.integers(-20, 20), st.integers(0, 1))
def test_bigm_matches_implication_for_any_p(f_up, p, b):
    # with p in domain the pair is exactly b=1 => p=F_UP; outside, only b=1 is rejected
    ok = bigm_upper_ok(p, b, f_up) and bigm_lower_ok(p, b, f_up)
    if 0 <= p <= f_up or b == 1:
        assert ok == (b == 0 or p == f_up)
