import pytest

from fscp.split_maps import CC, EC, SplitTables, lte_split_tables

T = lte_split_tables()


def test_function_counts():
    assert T.up_functions_at(EC, 3) == 3
    assert T.up_functions_at(CC, 0) == 3
    assert T.cp_functions_at(EC, 3) == 3
    assert T.cp_functions_at(CC, 3) == 0
    assert T.cp_functions_at(EC, 0) == 0
    for p in range(4):
        assert T.up_functions_at(CC, p) + T.up_functions_at(EC, p) == 3


def test_bandwidth_tables():
    for p in range(4):
        assert T.user_midhaul_bw(p, 2) == 2 * T.user_midhaul_bw(p, 1)
    assert T.user_midhaul_bw(3, 1) == min(T.user_bw_mbps_per_rb)
    assert T.cell_midhaul_bw(3) == min(T.cell_bw_mbps)
    assert T.cell_midhaul_bw(0) == max(T.cell_bw_mbps)
    assert T.cell_midhaul_bw(0) == pytest.approx(1843.2)


def test_volume_table():
    assert T.cc_volume(3, 3) == 0
    for p in range(3):
        for q in range(4):
            assert T.cc_volume(p, q) >= T.cc_volume(p + 1, q)
    for q in range(3):
        assert T.cc_volume(0, q) >= T.cc_volume(0, q + 1)


def test_valid_and_roundtrip():
    assert T.problems() == []
    assert SplitTables.from_dict(T.to_dict()) == T


def test_out_of_range_index():
    with pytest.raises(IndexError):
        T.cc_volume(4, 0)


def test_non_monotone_reported():
    d = T.to_dict()
    d["cell_bw_mbps"] = [1.0, 2.0, 0.5, 0.0]
    assert any("non-increasing" in m for m in SplitTables.from_dict(d).problems())
