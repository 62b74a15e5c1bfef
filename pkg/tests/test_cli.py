import json

from fscp.cli import run
from fscp.experiments import tiny_random_document

from test_feasibility import FIXTURES, scen


def test_gen_then_solve(tmp_path, capsys):
    scen_path = tmp_path / "s.json"
    assert run(["gen", "--n-users", "5", "--seed", "2", "--out", str(scen_path)]) == 0
    out = tmp_path / "sol.json"
    assert run(["solve", "--scenario", str(scen_path), "--out", str(out), "--time-budget", "30"]) == 0
    doc = json.loads(out.read_text())
    assert doc["admitted_count"] == 5 and doc["proven_optimal"]
    lines = (tmp_path / "sol.csv").read_text().splitlines()
    assert lines[0].startswith("mode,active_users") and lines[1].startswith("fscp,5,")
    assert capsys.readouterr().out.strip() == lines[1]


def test_solve_defaults_document(tmp_path):
    out = tmp_path / "sol.json"
    assert run(["solve", "--scenario", "defaults/table1.json", "--mode", "fscp", "--time-budget", "60",
                "--out", str(out)]) == 0
    assert json.loads(out.read_text())["total_power_w"] == 20.0


def test_validate_c1_fixture(tmp_path):
    from fscp.scenario import save_scenario
    users, tweak, bad, _ = FIXTURES["C1"]
    sp, ap, out = tmp_path / "s.json", tmp_path / "a.json", tmp_path / "v.csv"
    save_scenario(scen(users, tweak), sp)
    ap.write_text(json.dumps(bad.to_dict()))
    assert run(["validate", "--scenario", str(sp), "--assignment", str(ap), "--out", str(out)]) == 2
    rows = out.read_text().splitlines()
    assert len(rows) == 1 and rows[0].startswith("C1,")


def test_compare_tiny(tmp_path, capsys):
    p = tmp_path / "t.json"
    p.write_text(json.dumps(tiny_random_document(11)))
    assert run(["compare", "--scenario", str(p)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("MATCH") and "oracle=(" in out


def test_compare_over_limits(capsys):
    assert run(["compare", "--scenario", "defaults/table1.json"]) == 2
    err = capsys.readouterr().err.strip()
    assert err.startswith("error,2,OracleLimitError,") and "\n" not in err


def test_usage_errors(capsys):
    assert run(["frobnicate"]) == 1
    assert run(["solve"]) == 1
    assert run(["solve", "--scenario", "missing.json"]) == 1
    errs = capsys.readouterr().err.strip().splitlines()
    assert len(errs) == 3 and all(e.startswith("error,1,") for e in errs)


def test_sweep_files_identical_across_runs(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["sweep", "--points", "0.05", "0.1", "--modes", "fscp", "all_ec", "all_cc"]
    assert run(base + ["--out", str(a)]) == 0
    assert run(base + ["--out", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    meta = json.loads((tmp_path / "a.csv.json").read_text())
    assert meta["seed"] == 0 and meta["axis"] == "load"
