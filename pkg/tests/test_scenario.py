import copy
import json
from pathlib import Path

import pytest

from fscp.scenario import (ScenarioError, load_scenario, save_scenario, scenario_from_dict, scenario_to_dict,
                           table1_document, validate)

ROOT = Path(__file__).resolve().parents[1]


def test_table1_shape(table1):
    assert len(table1.edge_clouds) == 4
    assert len(table1.cells) == 20
    assert table1.users == ()
    assert (table1.f_up, table1.f_cp) == (3, 3)


def test_table1_validates_clean(table1):
    assert [d for d in validate(table1) if d.severity == "error"] == []


def test_shipped_defaults_mirror_package_data():
    shipped = json.loads((ROOT / "defaults" / "table1.json").read_text())
    assert shipped == table1_document()


def test_unknown_cell_rejected():
    doc = copy.deepcopy(table1_document())
    doc["users"] = [{"id": 0, "cell_id": 99, "distance_m": 1.0, "demanded_file": 0, "delay_threshold_s": 0.05}]
    with pytest.raises(ScenarioError, match="unknown cell"):
        scenario_from_dict(doc)


def test_nonpositive_threshold_diagnostic():
    doc = copy.deepcopy(table1_document())
    doc["users"] = [{"id": 0, "cell_id": 0, "distance_m": 1.0, "demanded_file": 0, "delay_threshold_s": 0.0}]
    s = scenario_from_dict(doc, check=False)
    assert any("nonpositive delay threshold" in d.message for d in validate(s))


def test_missing_key_reported():
    doc = copy.deepcopy(table1_document())
    del doc["topology"]
    with pytest.raises(ScenarioError, match="topology"):
        scenario_from_dict(doc)


def test_roundtrip(tmp_path, table1):
    path = tmp_path / "s.json"
    text = save_scenario(table1, path)
    again = load_scenario(path)
    assert scenario_to_dict(again) == scenario_to_dict(table1)
    assert save_scenario(again) == text


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{nope")
    with pytest.raises(ScenarioError, match="invalid JSON"):
        load_scenario(p)
