import csv
import io
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from visgame import cli
from visgame.scenario import ScenarioError, parse

SCEN = Path(__file__).resolve().parents[1] / "scenarios"


def invoke(tmp_path, *argv):
    out = tmp_path / "out.csv"
    code = cli.main([*argv, "-o", str(out)])
    text = out.read_text() if out.exists() else ""
    return code, text


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def minimal(**over):
    doc = {"schema": "visgame.scenario/1", "id": "t",
           "obstacle": {"type": "circle", "center": [0, 0], "radius": 1},
           "speeds": {"gamma_e": 1, "gamma_p": 0.4},
           "states": [{"id": "a", "E": [-2, 1.05], "P": [2, 1.05]}]}
    doc.update(over)
    return doc


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc, indent=2))
    return str(p)


def test_malformed_json_reports_line(tmp_path, capsys):
    p = write(tmp_path, '{\n  "schema": "visgame.scenario/1",\n  "id": \n}')
    assert cli.main(["classify", p]) == 2
    assert "line" in capsys.readouterr().err


def test_schema_error_reports_line(tmp_path, capsys):
    doc = minimal(speeds={"gamma_e": -1, "gamma_p": 1})
    assert cli.main(["classify", write(tmp_path, doc)]) == 2
    assert "line" in capsys.readouterr().err


def test_duplicate_state_ids_rejected():
    doc = minimal(states=[{"id": "a", "E": [-2, 1.05], "P": [2, 1.05]}] * 2)
    with pytest.raises(ScenarioError):
        parse(json.dumps(doc))


def test_missing_file(tmp_path):
    assert cli.main(["classify", str(tmp_path / "nope.json")]) == 2


def test_empty_state_list_writes_header(tmp_path):
    code, text = invoke(tmp_path, "value", write(tmp_path, minimal(states=[])))
    assert code == 0
    assert text.strip() == ",".join(cli.VALUE_COLUMNS)


def test_value_row_full_precision(tmp_path):
    code, text = invoke(tmp_path, "value", str(SCEN / "circle.json"))
    assert code == 0
    r = rows(text)[0]
    assert r["state"] == "near-top"
    assert float(r["V_rep"]) == pytest.approx(0.161099, abs=1e-6)
    assert len(r["V_rep"].split(".")[1]) >= 15


def test_corner_value_and_note(tmp_path):
    code, text = invoke(tmp_path, "value", str(SCEN / "corner.json"), "--method", "corner")
    assert code == 0
    usable, nonusable = rows(text)[:2]
    assert float(usable["V_rep"]) == pytest.approx(0.19770123907, abs=1e-9)
    assert float(usable["upper"]) == pytest.approx(0.2)
    assert nonusable["V_note"] == ">=t0" and nonusable["V_rep"] == ""


def test_corner_method_needs_corner(tmp_path):
    assert cli.main(["value", str(SCEN / "circle.json"), "--method", "corner"]) == 2


def test_classify_labels(tmp_path):
    code, text = invoke(tmp_path, "classify", str(SCEN / "circle_boundary.json"))
    assert code == 0
    labels = {r["state"]: r["label"] for r in rows(text)}
    assert set(labels.values()) >= {"Usable", "NonUsable", "Interface"}


def test_scurve_monotone(tmp_path):
    code, text = invoke(tmp_path, "scurve", str(SCEN / "circle.json"), "--t-samples", "11")
    assert code == 0
    rs = rows(text)
    assert len(rs) == 22
    assert all(r["monotone"] == "true" for r in rs)


def test_profile_grid_parsing():
    g = cli.parse_grid("1e-4:1e-2:3")
    assert g.tolist() == pytest.approx([1e-4, 1e-3, 1e-2])
    assert cli.parse_grid("0:1:3:lin").tolist() == [0.0, 0.5, 1.0]
    with pytest.raises(ValueError):
        cli.parse_grid("1:2")


def test_barrier_summary(tmp_path, capsys):
    code, text = invoke(tmp_path, "barrier", str(SCEN / "barrier.json"), "--opponent", "radial", "--T", "0.05")
    assert code == 0
    assert "max_drift=" in capsys.readouterr().err
    assert max(abs(float(r["drift"])) for r in rows(text)) < 1e-12


def test_sweep_nonconvergence_exit(tmp_path):
    assert cli.main(["sweep", str(SCEN / "static_pursuer.json"), "--n", "9", "--max-sweeps", "1",
                     "-o", str(tmp_path / "o.csv")]) == 3


def test_sweep_dump(tmp_path):
    dump = tmp_path / "f.swpf"
    code, text = invoke(tmp_path, "sweep", str(SCEN / "static_pursuer.json"), "--n", "17", "--dump", str(dump))
    assert code == 0 and dump.read_bytes()[:4] == b"SWPF"
    assert rows(text)


def test_invariant_violation_exit(tmp_path, monkeypatch):
    real = cli._smooth_row

    def broken(sc, st, methods):
        r = real(sc, st, methods)
        r["violations"] = 1
        return r

    monkeypatch.setattr(cli, "_smooth_row", broken)
    assert cli.main(["value", str(SCEN / "circle.json"), "-o", str(tmp_path / "o.csv")]) == 4


def _cli_bytes(args, workers):
    env = dict(os.environ, VISGAME_WORKERS=str(workers))
    return subprocess.run([sys.executable, "-m", "visgame.cli", *args], env=env, capture_output=True,
                          check=True).stdout


def test_output_is_deterministic_across_workers():
    args = ["value", str(SCEN / "circle_boundary.json"), "--method", "bounds"]
    a = _cli_bytes(args, 1)
    assert a == _cli_bytes(args, 1)
    assert a == _cli_bytes(args, 2)
