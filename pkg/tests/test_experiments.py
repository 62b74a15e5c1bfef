from collections import Counter

import pytest

from fscp.assignment import Assignment
from fscp.experiments import (CSV_HEADER, LOAD_POINTS, GenSpec, generate_document, generate_scenario, metrics,
                              read_csv, rows_to_csv, run_sweep, small_analog_scenario, tiny_random_scenario)
from fscp.feasibility import wavelength_loads
from fscp.solver import Solution, SolverOptions, solve


def test_full_fraction_gives_pool():
    assert len(generate_scenario(GenSpec(active_user_fraction=1.0)).users) == 95
    assert [GenSpec(active_user_fraction=f).user_count for f in LOAD_POINTS] == [19, 38, 57, 76, 95]


def test_same_seed_same_document():
    g = GenSpec(active_user_fraction=0.4, seed=7, request_model="pareto_80_20")
    assert generate_document(g) == generate_document(g)
    assert generate_document(g) != generate_document(GenSpec(active_user_fraction=0.4, seed=8))


def test_load_points_nest():
    small = generate_document(GenSpec(n_users=19))["users"]
    big = generate_document(GenSpec(n_users=38))["users"]
    assert big[:19] == small


def test_pareto_head_share():
    g = GenSpec(n_users=40, catalog_size=10, request_model="pareto_80_20", pool_size=40)
    s = generate_scenario(g)
    head = Counter()
    for u in s.users:
        head[(s.ec_of_user(u.id), u.demanded_file < 2)] += 1
    for r in range(4):
        assert head[(r, True)] == 8 and head[(r, False)] == 2


def test_users_inside_cells_with_one_rb():
    s = generate_scenario(GenSpec(seed=3))
    for u in s.users:
        c = s.cell(u.cell_id)
        assert 0 <= u.distance_m <= c.radius_m and c.rb_per_user == 1
        assert 0.050 <= u.delay_threshold_s <= 0.070


def test_invalid_genspec():
    with pytest.raises(ValueError):
        GenSpec(active_user_fraction=1.5)
    with pytest.raises(ValueError):
        GenSpec(request_model="zipf")


def _fake(s, admitted, mode="fscp"):
    a = Assignment(frozenset(admitted), {u: 3 for u in admitted}, {0: 2}, {u: 0 for u in admitted},
                   {u: 0 for u in admitted}, {0: 0}, {0: 0}, {0: 0}, {u: 0 for u in admitted})
    return Solution(a, 0.0, len(admitted), True, 0.0, 0.0, mode)


def test_hit_rate_three_of_four():
    s = generate_scenario(GenSpec(n_users=4, pool_size=4, n_ec=1, cells_per_ec=1))
    assert metrics(_fake(s, [0, 1, 2]), s).hit_rate == 0.75


def test_empty_admission_row():
    s = generate_scenario(GenSpec(n_users=4))
    row = metrics(_fake(s, []), s)
    assert row.hit_rate == 0 and row.avg_delay_s is None
    assert row.csv_fields()[4] == ""


@pytest.mark.parametrize("seed", range(15))
def test_bandwidth_recomputed_matches_c8_sum(seed):
    s = tiny_random_scenario(seed)
    sol = solve(s)
    row = metrics(sol, s)
    assert row.midhaul_bw_mbps == pytest.approx(sum(wavelength_loads(sol.assignment, s).values()))
    g = len(set(sol.assignment.wavelength.values()))
    assert row.midhaul_bw_mbps <= g * s.wavelength_capacity_mbps + 1e-9
    assert 0 <= row.hit_rate <= 1


def test_load_sweep_structure():
    g = GenSpec(pool_size=10)
    rows = run_sweep(g, "load", LOAD_POINTS, ["fscp", "all_ec", "all_cc"], SolverOptions(time_budget_s=30))
    assert len(rows) == 15
    assert [r.mode for r in rows[:3]] == ["fscp", "all_ec", "all_cc"]
    assert [r.active_users for r in rows[::3]] == [2, 4, 6, 8, 10]
    text = rows_to_csv(rows)
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    assert len(read_csv(text)) == 15


def test_small_analog_within_oracle_limits():
    from fscp.oracle import enumerate_optimal
    s = small_analog_scenario(GenSpec())
    assert len(s.users) == 4 and s.f_up == 2
    assert enumerate_optimal(s).admitted_count == solve(s).admitted_count
