import json
from pathlib import Path

import pytest

from orbitmetric import assembly
from orbitmetric.cli import run
from orbitmetric.curvature import GRID_CSV_HEADER
from orbitmetric.errors import DesignFailure

EXAMPLES = Path(__file__).resolve().parents[1] / "docs" / "examples"
TUBE = ["--q", "1", "--m", "1", "--eps", "1", "--lambda", "1", "--Lambda", "0.3"]


def read(p):
    return json.loads(Path(p).read_text())


def test_design_tube_passes(tmp_path):
    out = tmp_path / "tube.json"
    assert run(["design-tube", *TUBE, "--nu", "0.2", "-o", str(out)]) == 0
    doc = read(out)
    assert doc["pass"] and doc["report"]["pass"]
    assert {"f", "h", "params", "config"} <= set(doc)
    assert doc["config"]["grid_points"] == 2048


def test_design_tube_at_bound_exits_one(tmp_path):
    out = tmp_path / "tube.json"
    assert run(["design-tube", *TUBE, "--nu", "0.5", "-o", str(out)]) == 1
    doc = read(out)
    assert not doc["pass"]
    assert doc["violated"] == "nu < lambda*eps/(1+eps)"


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(["design-tube", *TUBE, "--nu", "0.2", "-o", str(a)])
    run(["design-tube", *TUBE, "--nu", "0.2", "-o", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"q": 1, "m": 1, "eps": 1, "nu": 0.5, "lambda": 1, "Lambda": 0.3}))
    out = tmp_path / "tube.json"
    assert run(["design-tube", "--config", str(cfg), "--nu", "0.2", "-o", str(out)]) == 0
    assert read(out)["config"]["nu"] == 0.2


def test_unknown_flag_and_key_are_usage_errors(tmp_path):
    assert run(["design-tube", *TUBE, "--nu", "0.2", "--bogus", "1"]) == 2
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nux": 0.2}))
    assert run(["design-tube", "--config", str(cfg)]) == 2
    assert run(["design-tube", "--eps", "1"]) == 2
    assert run(["design-tube", *TUBE[:-1], "1.2", "--nu", "0.2"]) == 2
    assert run(["no-such-command"]) == 2


def test_verify_tube_round_trip(tmp_path):
    tube = tmp_path / "tube.json"
    run(["design-tube", *TUBE, "--nu", "0.2", "-o", str(tube)])
    out = tmp_path / "verify.json"
    csv_dir = tmp_path / "grids"
    assert run(["verify-tube", "--tube", str(tube), "-o", str(out), "--csv-dir", str(csv_dir)]) == 0
    doc = read(out)
    assert doc["pass"] and "ineq521_margin" in doc["quotient_at_boundary"]
    assert abs(doc["horizontal_sign_check"]["round_sphere_gap_with_flipped_signs"]) > 0.1
    header = (csv_dir / "tube.csv").read_text().splitlines()[0]
    assert header == ",".join(GRID_CSV_HEADER)


def test_verify_tube_flags_override_stored_params(tmp_path):
    tube = tmp_path / "tube.json"
    run(["design-tube", *TUBE, "--nu", "0.2", "-o", str(tube)])
    out = tmp_path / "verify.json"
    assert run(["verify-tube", "--tube", str(tube), "--nu", "0.5", "-o", str(out)]) == 1
    names = [e["name"] for e in read(out)["report"]["entries"] if not e["pass"]]
    assert "nu_below_bound" in names


@pytest.mark.parametrize("name", ["suspension_two_tubes.json", "disc_single_orbit.json", "double.json"])
def test_assemble_golden(tmp_path, name):
    out = tmp_path / "report.json"
    assert run(["assemble", "--config", str(EXAMPLES / name), "-o", str(out), "--csv-dir", str(tmp_path / "g")]) == 0
    doc = read(out)
    assert doc["overall"] and doc["config"]["construction"] in ("assembly", "double")


def test_assemble_csv_dump(tmp_path):
    out = tmp_path / "report.json"
    g = tmp_path / "g"
    run(["assemble", "--config", str(EXAMPLES / "suspension_two_tubes.json"), "-o", str(out), "--csv-dir", str(g)])
    assert sorted(p.name for p in g.iterdir()) == [
        "base.csv", "collar_left.csv", "collar_right.csv", "tube_left.csv", "tube_right.csv"]


def test_assemble_override_fails_budget(tmp_path):
    out = tmp_path / "report.json"
    assert run(["assemble", "--config", str(EXAMPLES / "disc_single_orbit.json"), "--nu", "5", "-o", str(out)]) == 1
    assert not read(out)["overall"]


def test_assemble_needs_config():
    assert run(["assemble"]) == 2


def test_double_and_exceptional(tmp_path):
    assert run(["double", "-o", str(tmp_path / "d.json")]) == 0
    assert run(["exceptional", "--n", "2", "--lambda", "1", "--Lambda", "0.5", "--nu", "0.1",
                "-o", str(tmp_path / "e.json")]) == 0
    assert run(["exceptional", "--n", "2", "--lambda", "1", "--Lambda", "1.5", "--nu", "0.1"]) == 2


def test_numeric_failure_exit_code(monkeypatch):
    def fail(*args, **kwargs):
        raise DesignFailure("no concave bridge")
    monkeypatch.setattr(assembly, "build_exceptional_tube", fail)
    assert run(["exceptional", "--n", "2", "--lambda", "1", "--Lambda", "0.5", "--nu", "0.1"]) == 3


def test_oracle_validate_round_s4(tmp_path):
    out = tmp_path / "oracle.json"
    assert run(["oracle-validate", "--chart", "round-s4", "--grid", "50", "-o", str(out)]) == 0
    doc = read(out)
    assert doc["max_rel_err"] <= 1e-4
    assert set(doc["rows"][0]) == {"chart", "point", "component", "closed_form", "oracle", "rel_err"}


def test_experiment_csv(tmp_path):
    out = tmp_path / "scan.csv"
    assert run(["experiment", "--d", "2", "--rhoF", "1", "--cuts", "0.3,1.0", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("label,a,b,") and len(lines) == 3


def test_no_temp_files_left(tmp_path):
    run(["design-tube", *TUBE, "--nu", "0.2", "-o", str(tmp_path / "t.json")])
    assert [p.name for p in tmp_path.iterdir()] == ["t.json"]
