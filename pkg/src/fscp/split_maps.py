"""Split-option lookup tables (function counts, midhaul bandwidth, midhaul volume, processing delay).

Function positions are numbered along one chain: UP functions occupy positions
``0 .. f_up-1`` and CP functions ``f_up .. f_up+f_cp-1``.  When ``k`` functions of a
chain run at the EC they are the first ``k`` positions of that chain.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

CC = "CC"
EC = "EC"


class SplitTableError(ValueError):
    pass


def _non_increasing(xs: Sequence[float]) -> bool:
    return all(a >= b for a, b in zip(xs, xs[1:]))


@dataclass(frozen=True)
class SplitTables:
    up_at_ec: tuple[int, ...]
    cp_at_ec: tuple[int, ...]
    user_bw_mbps_per_rb: tuple[float, ...]
    cell_bw_mbps: tuple[float, ...]
    cc_volume_bytes: tuple[tuple[int, ...], ...]
    per_function_delay_cc_s: tuple[float, ...]
    per_function_delay_ec_s: tuple[float, ...]

    @property
    def f_up(self) -> int:
        return len(self.up_at_ec) - 1

    @property
    def f_cp(self) -> int:
        return len(self.cp_at_ec) - 1

    def problems(self) -> list[str]:
        """Every broken table invariant, as readable messages (empty when valid)."""
        out = []
        f_up, f_cp = self.f_up, self.f_cp
        if f_up < 1 or f_cp < 1:
            out.append("split tables need f_up >= 1 and f_cp >= 1")
            return out
        for name, tab, f in (("up_at_ec", self.up_at_ec, f_up), ("cp_at_ec", self.cp_at_ec, f_cp)):
            if tab[0] != 0 or tab[-1] != f:
                out.append(f"{name} must start at 0 and end at {f}")
            if any(a > b for a, b in zip(tab, tab[1:])):
                out.append(f"{name} must be non-decreasing")
        if len(self.user_bw_mbps_per_rb) != f_up + 1:
            out.append(f"user_bw_mbps_per_rb needs {f_up + 1} entries")
        elif not _non_increasing(self.user_bw_mbps_per_rb):
            out.append("user_bw_mbps_per_rb must be non-increasing")
        if len(self.cell_bw_mbps) != f_cp + 1:
            out.append(f"cell_bw_mbps needs {f_cp + 1} entries")
        elif not _non_increasing(self.cell_bw_mbps):
            out.append("cell_bw_mbps must be non-increasing")
        vol = self.cc_volume_bytes
        if len(vol) != f_up + 1 or any(len(row) != f_cp + 1 for row in vol):
            out.append(f"cc_volume_bytes must be {f_up + 1}x{f_cp + 1}")
        else:
            if any(not _non_increasing(row) for row in vol):
                out.append("cc_volume_bytes must be non-increasing in q")
            if any(not _non_increasing(col) for col in zip(*vol)):
                out.append("cc_volume_bytes must be non-increasing in p")
        n = f_up + f_cp
        for name, tab in (("per_function_delay_cc_s", self.per_function_delay_cc_s),
                          ("per_function_delay_ec_s", self.per_function_delay_ec_s)):
            if len(tab) != n:
                out.append(f"{name} needs {n} entries (UP chain then CP chain)")
        negatives = [x for x in (*self.user_bw_mbps_per_rb, *self.cell_bw_mbps,
                                 *(v for row in vol for v in row),
                                 *self.per_function_delay_cc_s, *self.per_function_delay_ec_s) if x < 0]
        if negatives:
            out.append("table entries must be non-negative")
        return out

    def _check_p(self, p: int) -> None:
        if not 0 <= p <= self.f_up:
            raise IndexError(f"UP split index {p} outside [0, {self.f_up}]")

    def _check_q(self, q: int) -> None:
        if not 0 <= q <= self.f_cp:
            raise IndexError(f"CP split index {q} outside [0, {self.f_cp}]")

    def up_functions_at(self, site: str, p: int) -> int:
        self._check_p(p)
        at_ec = self.up_at_ec[p]
        return at_ec if site == EC else self.f_up - at_ec

    def cp_functions_at(self, site: str, q: int) -> int:
        self._check_q(q)
        at_ec = self.cp_at_ec[q]
        return at_ec if site == EC else self.f_cp - at_ec

    def user_midhaul_bw(self, p: int, rbs: int) -> float:
        self._check_p(p)
        return self.user_bw_mbps_per_rb[p] * rbs

    def cell_midhaul_bw(self, q: int) -> float:
        self._check_q(q)
        return self.cell_bw_mbps[q]

    def cc_volume(self, p: int, q: int) -> int:
        self._check_p(p)
        self._check_q(q)
        return self.cc_volume_bytes[p][q]

    def to_dict(self) -> dict:
        return {
            "up_at_ec": list(self.up_at_ec),
            "cp_at_ec": list(self.cp_at_ec),
            "user_bw_mbps_per_rb": list(self.user_bw_mbps_per_rb),
            "cell_bw_mbps": list(self.cell_bw_mbps),
            "cc_volume_bytes": [list(r) for r in self.cc_volume_bytes],
            "per_function_delay_cc_s": list(self.per_function_delay_cc_s),
            "per_function_delay_ec_s": list(self.per_function_delay_ec_s),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SplitTables":
        return cls(
            up_at_ec=tuple(int(x) for x in d["up_at_ec"]),
            cp_at_ec=tuple(int(x) for x in d["cp_at_ec"]),
            user_bw_mbps_per_rb=tuple(float(x) for x in d["user_bw_mbps_per_rb"]),
            cell_bw_mbps=tuple(float(x) for x in d["cell_bw_mbps"]),
            cc_volume_bytes=tuple(tuple(int(x) for x in row) for row in d["cc_volume_bytes"]),
            per_function_delay_cc_s=tuple(float(x) for x in d["per_function_delay_cc_s"]),
            per_function_delay_ec_s=tuple(float(x) for x in d["per_function_delay_ec_s"]),
        )


# 20 MHz LTE carrier, 2x2 MIMO, 64-QAM.
SAMPLE_RATE_MSPS = 30.72
ANTENNAS = 2
IQ_BITS = 15
COMPRESSED_IQ_BITS = 8
SUBCARRIERS = 1200
SUBCARRIERS_PER_RB = 12
SYMBOLS_PER_MS = 14
BITS_PER_SYMBOL = 6
CODE_RATE = 0.75
SUBFRAME_S = 1e-3


def lte_bandwidth_tables() -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Per-RB user bandwidth (index p) and per-cell bandwidth (index q), Mbps.

    Cell chain: time-domain IQ, CP/guard removed IQ, compressed frequency-domain IQ, nothing.
    User chain per RB: uncompressed IQ, compressed IQ, soft bits, transport bits.
    """
    iq = 2
    cell = (
        ANTENNAS * SAMPLE_RATE_MSPS * iq * IQ_BITS,
        SUBCARRIERS * SYMBOLS_PER_MS * 1e3 * ANTENNAS * iq * IQ_BITS / 1e6,
        SUBCARRIERS * SYMBOLS_PER_MS * 1e3 * ANTENNAS * iq * COMPRESSED_IQ_BITS / 1e6 * 0.5,
        0.0,
    )
    re = SUBCARRIERS_PER_RB * SYMBOLS_PER_MS * 1e3
    user = (
        re * ANTENNAS * iq * IQ_BITS / 1e6,
        re * ANTENNAS * iq * COMPRESSED_IQ_BITS / 1e6,
        re * ANTENNAS * BITS_PER_SYMBOL / 1e6,
        re * ANTENNAS * BITS_PER_SYMBOL * CODE_RATE / 1e6,
    )
    return tuple(round(x, 6) for x in user), tuple(round(x, 6) for x in cell)


def lte_split_tables(ec_speed_ratio: float = 2.0, cc_function_delay_s: float = 50e-6) -> SplitTables:
    """Default tables for F_UP = F_CP = 3.

    The midhaul volume of (p, q) is one subframe of cell plus one-RB user traffic,
    except the fully distributed corner where nothing crosses the midhaul.
    """
    user, cell = lte_bandwidth_tables()
    vol = []
    for p in range(4):
        row = []
        for q in range(4):
            if p == 3 and q == 3:
                row.append(0)
            else:
                row.append(int(round((cell[q] + user[p]) * 1e6 * SUBFRAME_S / 8)))
        vol.append(tuple(row))
    return SplitTables(
        up_at_ec=(0, 1, 2, 3),
        cp_at_ec=(0, 1, 2, 3),
        user_bw_mbps_per_rb=user,
        cell_bw_mbps=cell,
        cc_volume_bytes=tuple(vol),
        per_function_delay_cc_s=(cc_function_delay_s,) * 6,
        per_function_delay_ec_s=(cc_function_delay_s * ec_speed_ratio,) * 6,
    )


def linear_split_tables(f_up: int, f_cp: int, *, user_bw: Sequence[float], cell_bw: Sequence[float],
                        volume: Sequence[Sequence[int]], cc_delay_s: float = 50e-6,
                        ec_delay_s: float = 100e-6) -> SplitTables:
    return SplitTables(
        up_at_ec=tuple(range(f_up + 1)),
        cp_at_ec=tuple(range(f_cp + 1)),
        user_bw_mbps_per_rb=tuple(float(x) for x in user_bw),
        cell_bw_mbps=tuple(float(x) for x in cell_bw),
        cc_volume_bytes=tuple(tuple(int(v) for v in row) for row in volume),
        per_function_delay_cc_s=(cc_delay_s,) * (f_up + f_cp),
        per_function_delay_ec_s=(ec_delay_s,) * (f_up + f_cp),
    )
