"""Network power model."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import TYPE_CHECKING

from .assignment import derive_counts

if TYPE_CHECKING:
    from .assignment import Assignment
    from .scenario import Scenario


@dataclass(frozen=True)
class PowerParams:
    p_du_cc: float = 100.0
    p_du_ec: float = 50.0
    p_lc: float = 20.0
    p_onu: float = 5.0
    p_tx: float = 20.0
    p_fh: float = 40.0
    p_cool_cc: float = 0.0
    p_cool_ec: float = 0.0
    p_cache_cc: float = 20.0
    p_cache_ec: float = 30.0
    # False charges the CC cache only while some CC DU is active.
    cc_cache_always_on: bool = True

    def problems(self) -> list[str]:
        return [f"power parameter {f.name} is negative" for f in fields(self)
                if f.name != "cc_cache_always_on" and getattr(self, f.name) < 0]

    def to_dict(self) -> dict:
        return asdict(self)


def power_breakdown(a: "Assignment", s: "Scenario") -> list[tuple[str, float]]:
    """Labelled power terms; four CC-wide terms then five per EC, in EC order."""
    pp = s.power_params
    dc = derive_counts(a, s)
    cc_on = dc.active_cc_dus > 0
    out = [
        ("line_cards", dc.active_wavelengths * pp.p_lc),
        ("cc_du", dc.active_cc_dus * pp.p_du_cc if cc_on else 0.0),
        ("cc_cooling", pp.p_cool_cc if cc_on else 0.0),
        ("cc_cache", pp.p_cache_cc if (pp.cc_cache_always_on or cc_on) else 0.0),
    ]
    users_in_cell: dict[int, int] = {}
    for uid in a.admitted:
        c = s.user(uid).cell_id
        users_in_cell[c] = users_in_cell.get(c, 0) + 1
    for ec in s.edge_clouds:
        active_cells = sum(1 for c in ec.cells if users_in_cell.get(c.id, 0) > 0)
        l_r = dc.active_ec_dus[ec.id]
        hit = any(dc.edge_hit.get(uid, 0) for uid in a.admitted if s.ec_of_user(uid) == ec.id)
        out += [
            (f"ec{ec.id}_radio", active_cells * (pp.p_tx + pp.p_fh)),
            (f"ec{ec.id}_onu", pp.p_onu if active_cells else 0.0),
            (f"ec{ec.id}_cooling", pp.p_cool_ec if l_r > 0 else 0.0),
            (f"ec{ec.id}_du", l_r * pp.p_du_ec),
            (f"ec{ec.id}_cache", pp.p_cache_ec if hit else 0.0),
        ]
    return out


def total_power(a: "Assignment", s: "Scenario") -> float:
    return sum(v for _, v in power_breakdown(a, s))
