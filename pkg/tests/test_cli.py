import json
from importlib import resources

import pytest

from pfkm.cli import main

DATA = resources.files("pfkm") / "data"


@pytest.fixture
def tiny(tmp_path):
    csv = tmp_path / "t.csv"
    csv.write_text("g,x\na,0\nb,0.1\na,0.2\nb,5\na,5.1\nb,5.3\n")
    schema = tmp_path / "s.json"
    schema.write_text(json.dumps({"group_column": "g", "numeric_columns": ["x"]}))
    return csv, schema


def test_solve(tiny, tmp_path, capsys):
    csv, schema = tiny
    out = tmp_path / "out"
    assert main(["solve", "--input", str(csv), "--schema", str(schema), "--k", "2", "--t", "2",
                 "--d-mode", "exact", "--post", "--emit-traces", "--out", str(out)]) == 0
    lines = (out / "assignment.csv").read_text().splitlines()
    assert lines[0] == "point_id,group,center_id" and len(lines) == 7
    rep = json.loads((out / "report.json").read_text())
    assert rep["t"] == 2 and rep["load_report"]["rows_read"] == 6
    assert "fair=" in capsys.readouterr().out


def test_solve_t1_rejected(tiny, tmp_path, capsys):
    csv, schema = tiny
    code = main(["solve", "--input", str(csv), "--schema", str(schema), "--k", "2", "--t-min",
                 "--out", str(tmp_path / "o")])
    assert code == 2 and "t = 1" in capsys.readouterr().err


def test_oracle(tiny, capsys):
    csv, schema = tiny
    assert main(["oracle", "--input", str(csv), "--schema", str(schema), "--k", "2", "--t", "2"]) == 0
    assert capsys.readouterr().out.startswith("OPT=")


def test_reduce(tmp_path, capsys):
    c = tmp_path / "c.json"
    c.write_text(json.dumps({"dist": [[0, 1], [1, 0]], "k": 1, "u": 2}))
    assert main(["reduce", "ckm", "--input", str(c), "--eps", "0.5", "--solve"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["W"] == 2 and doc["t"] == 4
    assert doc["extracted_ckm_cost"] <= doc["pfkm_opt"] / doc["W"] + 1e-9
    h = tmp_path / "h.json"
    h.write_text(json.dumps({"n_vertices": 3, "edges": [[1, 2, 3]]}))
    out = tmp_path / "h_out.json"
    assert main(["reduce", "hypergraph", "--input", str(h), "--solve", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["n"] == 21 and doc["two_colorable"] and doc["pfkm_opt"] == 3


def test_experiment(tmp_path, capsys):
    cfg = tmp_path / "e.json"
    cfg.write_text(json.dumps({
        "datasets": [{"name": "bank", "path": "pkg:bank_synth.csv",
                      "schema": "pkg:bank_synth.schema.json"}],
        "k": [3], "subsample": 80, "out_dir": "res"}))
    assert main(["experiment", "--config", str(cfg)]) == 0
    assert (tmp_path / "res" / "experiment.csv").exists()
    assert "bank k=3" in capsys.readouterr().out
