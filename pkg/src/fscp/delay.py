"""Per-user delay model: processing, air interface, midhaul framing and fixed transport terms."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import TYPE_CHECKING, Optional

from .split_maps import CC, EC, SplitTables

if TYPE_CHECKING:
    from .assignment import Assignment
    from .scenario import Scenario

SPEED_OF_LIGHT_M_S = 299_792_458.0


@dataclass(frozen=True)
class DelayParams:
    t_rsf_s: float = 1e-3
    n_symbols_per_prb: int = 168
    bits_per_symbol: int = 6
    s_of_bytes: int = 38880
    t_of_s: float = 125e-6
    d_onu_s: float = 7.5e-6
    d_lc_s: float = 1.5e-6
    d_opg_s: float = 0.4e-3
    d_mw_prg_s: float = 1000.0 / SPEED_OF_LIGHT_M_S
    d_mw_cnv_s: float = 30e-6
    d_sw_eth_s: float = 5.2e-3
    d_sw_opt_s: float = 2.5e-3
    d_cache_cc_s: float = 20e-3
    d_cache_ec_s: float = 25e-3
    # None: cells of every EC sharing the user's wavelength.
    frame_share_divisor: Optional[int] = None
    # None: the whole demanded file goes through the air-interface and midhaul counters.
    delay_payload_bytes: Optional[int] = None
    path_aware_delay: bool = False

    def problems(self) -> list[str]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool) or v is None:
                continue
            if v < 0:
                out.append(f"delay parameter {f.name} is negative")
        if self.s_of_bytes <= 0:
            out.append("s_of_bytes must be positive")
        if self.frame_share_divisor is not None and self.frame_share_divisor < 1:
            out.append("frame_share_divisor must be >= 1")
        if self.n_symbols_per_prb <= 0 or self.bits_per_symbol <= 0:
            out.append("n_symbols_per_prb and bits_per_symbol must be positive")
        if self.delay_payload_bytes is not None and self.delay_payload_bytes <= 0:
            out.append("delay_payload_bytes must be positive")
        return out

    @property
    def d_sw_s(self) -> float:
        return self.d_sw_eth_s + self.d_sw_opt_s

    def to_dict(self) -> dict:
        return asdict(self)


def processing_delay(p: int, q: int, tables: SplitTables) -> float:
    f_up = tables.f_up
    cc, ec = tables.per_function_delay_cc_s, tables.per_function_delay_ec_s
    up_ec = tables.up_functions_at(EC, p)
    cp_ec = tables.cp_functions_at(EC, q)
    return (sum(ec[:up_ec]) + sum(cc[up_ec:f_up])
            + sum(ec[f_up:f_up + cp_ec]) + sum(cc[f_up + cp_ec:]))


def radio_subframe_count(file_bytes: int, u_prb: int, params: DelayParams) -> int:
    denom = u_prb * params.bits_per_symbol * params.n_symbols_per_prb
    if denom <= 0:
        raise ZeroDivisionError("subframe payload is zero bits")
    return -(-(8 * file_bytes) // denom)


def optical_frame_count(p: int, q: int, n_rsf: int, tables: SplitTables, params: DelayParams,
                        divisor: int) -> int:
    vol = tables.cc_volume(p, q)
    if vol == 0 or n_rsf == 0:
        return 0
    # ceil(vol * n_rsf / (s_of / divisor)) in integers
    return -(-(vol * n_rsf * divisor) // params.s_of_bytes)


def delay_components(p: int, q: int, edge_hit: int, file_bytes: int, u_prb: int, distance_m: float,
                     divisor: int, tables: SplitTables, params: DelayParams) -> dict[str, float]:
    """The eleven additive delay terms of one user, keyed by name."""
    payload = params.delay_payload_bytes or file_bytes
    n_rsf = radio_subframe_count(payload, u_prb, params)
    n_of = optical_frame_count(p, q, n_rsf, tables, params, divisor)
    comps = {
        "prc": processing_delay(p, q, tables),
        "rsf": n_rsf * params.t_rsf_s,
        "nof": n_of * params.t_of_s,
        "onu": params.d_onu_s,
        "lc": params.d_lc_s,
        "opg": params.d_opg_s,
        "mw_prg": params.d_mw_prg_s,
        "mw_cnv": params.d_mw_cnv_s,
        "rpg": distance_m / SPEED_OF_LIGHT_M_S,
        "sw": params.d_sw_s,
        "cache": params.d_cache_ec_s if edge_hit else params.d_cache_cc_s,
    }
    if (params.path_aware_delay and edge_hit and p == tables.f_up and q == tables.f_cp):
        for k in ("nof", "onu", "lc", "opg"):
            comps[k] = 0.0
        comps["sw"] = params.d_sw_eth_s
    return comps


def frame_share_divisor(ec_id: int, a: "Assignment", s: "Scenario") -> int:
    """Cells attached to the wavelength of ``ec_id`` (counted over active ECs)."""
    fixed = s.delay_params.frame_share_divisor
    if fixed is not None:
        return fixed
    w = a.wavelength.get(ec_id)
    active = s.active_ecs(a)
    n = sum(len(s.ec(r).cells) for r in active if a.wavelength.get(r) == w)
    return max(n, len(s.ec(ec_id).cells), 1)


def user_delay_components(uid: int, a: "Assignment", s: "Scenario") -> dict[str, float]:
    if uid not in a.admitted:
        raise KeyError(f"user {uid} is not admitted")
    u = s.user(uid)
    cell = s.cell(u.cell_id)
    ec_id = cell.ec_id
    return delay_components(
        a.up_split[uid], a.cp_split[u.cell_id], a.edge_cached.get(uid, 0),
        s.file(u.demanded_file).size_bytes, cell.rb_per_user, u.distance_m,
        frame_share_divisor(ec_id, a, s), s.split_tables, s.delay_params)


def total_user_delay(uid: int, a: "Assignment", s: "Scenario") -> float:
    return sum(user_delay_components(uid, a, s).values())
