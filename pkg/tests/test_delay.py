from hypothesis import given, strategies as st

from fscp.delay import DelayParams, optical_frame_count, processing_delay, radio_subframe_count
from fscp.split_maps import SplitTables, lte_split_tables


def tables(cc, ec):
    t = lte_split_tables()
    return SplitTables(t.up_at_ec, t.cp_at_ec, t.user_bw_mbps_per_rb, t.cell_bw_mbps, t.cc_volume_bytes,
                       tuple(cc), tuple(ec))


@given(st.integers(0, 3), st.integers(0, 3))
def test_equal_function_delays(p, q):
    assert abs(processing_delay(p, q, tables([0.5] * 6, [0.5] * 6)) - 3.0) < 1e-12


def test_full_centralisation_uses_cc_table():
    t = tables([1, 2, 3, 4, 5, 6], [0] * 6)
    assert processing_delay(0, 0, t) == 21


def test_mixed_hand_sum():
    t = tables([1, 2, 4, 8, 16, 32], [100, 200, 400, 800, 1600, 3200])
    # p=2: UP 0,1 at EC, UP 2 at CC; q=3: every CP function at EC
    assert processing_delay(2, 3, t) == 100 + 200 + 4 + 800 + 1600 + 3200


@given(st.integers(1, 10**6), st.integers(1, 4))
def test_subframe_count_is_ceiling(nbytes, prb):
    p = DelayParams()
    n = radio_subframe_count(nbytes, prb, p)
    per = prb * p.bits_per_symbol * p.n_symbols_per_prb
    assert (n - 1) * per < 8 * nbytes <= n * per


@given(st.integers(0, 3), st.integers(0, 3), st.integers(1, 50), st.integers(1, 20))
def test_frame_count_monotone_in_divisor(p, q, n_rsf, div):
    t, d = lte_split_tables(), DelayParams()
    assert optical_frame_count(p, q, n_rsf, t, d, div) <= optical_frame_count(p, q, n_rsf, t, d, div + 1)
