"""Regenerate the packaged default parameter document (and its mirror in defaults/)."""
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from fscp.delay import DelayParams  # noqa: E402
from fscp.power import PowerParams  # noqa: E402
from fscp.split_maps import lte_split_tables  # noqa: E402

N_EC, CELLS_PER_EC = 4, 5
FILE_BYTES = 20_000_000


def document() -> dict:
    ecs = []
    for r in range(N_EC):
        ecs.append({
            "id": r, "du_count": 6, "du_cp_capacity": 3, "du_up_capacity": 15,
            "cache_capacity_bytes": 15 * FILE_BYTES,
            "cells": [{"id": r * CELLS_PER_EC + k, "radius_m": 250.0, "rb_per_user": 1}
                      for k in range(CELLS_PER_EC)],
        })
    return {
        "version": 1,
        "topology": {
            "f_up": 3, "f_cp": 3, "wavelengths": 4, "wavelength_capacity_mbps": 26000.0,
            "central_cloud": {"du_count": 4, "du_cp_capacity": 37, "du_up_capacity": 135,
                              "cache_capacity_bytes": 100 * FILE_BYTES},
            "edge_clouds": ecs,
        },
        "users": [],
        "files": [{"id": f, "size_bytes": FILE_BYTES} for f in range(100)],
        "split_tables": lte_split_tables().to_dict(),
        "power_params": PowerParams().to_dict(),
        "delay_params": {**DelayParams().to_dict(), "delay_payload_bytes": 500},
        "solver_defaults": {"mode": "fscp", "time_budget_s": 60.0, "split_once_relation": "eq"},
    }


if __name__ == "__main__":
    text = json.dumps(document(), indent=2) + "\n"
    for p in (ROOT / "src/fscp/data/table1.json", ROOT / "defaults/table1.json"):
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8")
        print(f"wrote {p.relative_to(ROOT)}")
