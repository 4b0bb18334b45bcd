import json
import os

import pytest

from flywheel import cli
from flywheel.config import apply_overrides, fixture_names, validate, ConfigError


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fixtures_validate():
    kinds = {
        "steel_4340": "material",
        "solid_disk": "analyze",
        "fit_annulus": "analyze",
        "reference_rotor": "energy",
        "material_set": "compare",
        "shrink_fit_48mpa": "assembly",
        "type1_optimize": "optimize",
        "preload_study": "preload",
    }
    assert sorted(kinds) == fixture_names()
    from flywheel.config import fixture_text

    for name, kind in kinds.items():
        validate(json.loads(fixture_text(name)), kind)


def test_analyze_solid_disk(capsys):
    code, out, _ = run(capsys, "analyze", "--input", "fixture:solid_disk")
    assert code == 0
    doc = json.loads(out)
    assert doc["tool"] == "flywheel" and doc["command"] == "analyze"
    assert len(doc["input_sha256"]) == 64
    res = doc["result"]
    assert res["max_von_mises_location"] == 0.0
    assert res["max_von_mises"] == pytest.approx(1.101e9, rel=1e-3)


def test_analyze_annulus_with_fit(capsys):
    code, out, _ = run(capsys, "analyze", "--input", "fixture:fit_annulus")
    assert code == 0
    res = json.loads(out)["result"]
    assert res["max_von_mises_location"] == pytest.approx(0.2)
    assert res["linear_fit"]["r_squared"] >= 0.9999


def test_byte_identical_output(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert cli.main(["optimize", "--input", "fixture:type1_optimize", "--output", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    doc = json.loads(paths[0].read_text())
    assert doc["result"]["optimization"]["variables"]["t"] == 0.05


def test_seed_override_changes_hash_only_via_config(tmp_path, capsys):
    code, out, _ = run(capsys, "energy", "--input", "fixture:reference_rotor")
    code2, out2, _ = run(capsys, "energy", "--input", "fixture:reference_rotor", "--set", "operating_fraction=0.5")
    assert code == code2 == 0
    a, b = json.loads(out), json.loads(out2)
    assert a["input_sha256"] != b["input_sha256"]
    assert b["result"]["metrics"]["operating_fraction"] == 0.5


def test_energy_and_report(capsys):
    code, out, _ = run(capsys, "report", "--input", "fixture:reference_rotor")
    assert code == 0
    res = json.loads(out)["result"]
    assert res["human_readable"]["max energy [kWh]"] == pytest.approx(148.66, rel=1e-4)
    assert "provenance" in res
    code, out, _ = run(capsys, "energy", "--input", "fixture:reference_rotor", "--format", "csv")
    assert code == 0 and out.startswith("quantity,value\n")


def test_compare_table(capsys):
    code, out, _ = run(capsys, "compare", "--input", "fixture:material_set")
    assert code == 0
    res = json.loads(out)["result"]
    assert len(res["materials"]) == 5
    assert all(abs(r["relative_deviation"]) <= 0.015 for r in res["materials"])
    assert res["lift_ratios"][0]["lambda_II"] == pytest.approx(2.0)


def test_assembly(capsys):
    code, out, _ = run(capsys, "assembly", "--input", "fixture:shrink_fit_48mpa")
    assert code == 0
    res = json.loads(out)["result"]
    assert res["separation_speeds"][0] == pytest.approx(125.4665, rel=1e-5)
    assert res["interface_pressures"][0] < 48e6


def test_contour(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"schema_version": 1, "kind": "rotational-hoop", "poisson_ratio": 0.3,
                               "t_axis": {"start": 0.1, "stop": 0.9, "num": 3}, "r_axis": [0.5, 1.0]}))
    code, out, err = run(capsys, "contour", "--input", str(cfg))
    assert code == 0, err
    code, _, _ = run(capsys, "contour", "--input", "fixture:solid_disk")
    assert code == 2


def test_verify_quick_and_canary(tmp_path, capsys):
    code, out, _ = run(capsys, "verify", "--cases", "50")
    assert code == 0 and json.loads(out)["result"]["passed"]
    target = tmp_path / "v.json"
    code, _, err = run(capsys, "verify", "--cases", "20", "--canary", "--output", str(target))
    assert code == 4 and "verification failed" in err
    assert json.loads(target.read_text())["result"]["passed"] is False


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", "--input", "fixture:solid_disk", "--set", "bogus=1"],
        ["analyze", "--input", "fixture:solid_disk", "--set", "geometry.outer_radius=-1"],
        ["analyze", "--input", "fixture:nope"],
        ["verify", "--cases", "0"],
    ],
)
def test_config_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and "error" in err


def test_malformed_json_and_no_partial_output(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    target = tmp_path / "out.json"
    code, _, _ = run(capsys, "analyze", "--input", str(bad), "--output", str(target))
    assert code == 2 and not target.exists()
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".flywheel-")]


def test_analysis_error_exit_3(capsys):
    code, _, err = run(capsys, "energy", "--input", "fixture:reference_rotor", "--set", "rotor.mass=-1")
    assert code in (2, 3)
    code, _, err = run(capsys, "optimize", "--input", "fixture:type1_optimize",
                       "--set", "fixed.interference=0.05")
    assert code == 3 and "analysis failed" in err


def test_write_atomic_replaces(tmp_path):
    target = tmp_path / "x.txt"
    target.write_text("old")
    cli.write_atomic(str(target), "new")
    assert target.read_text() == "new"
    assert os.listdir(tmp_path) == ["x.txt"]


def test_overrides():
    doc = apply_overrides({"a": {"b": 1}, "l": [1, 2]}, ["a.b=2.5", "l.1=\"x\"", "c=text"])
    assert doc == {"a": {"b": 2.5}, "l": [1, "x"], "c": "text"}
    with pytest.raises(ConfigError):
        apply_overrides({}, ["novalue"])
    with pytest.raises(ConfigError):
        apply_overrides({"l": [1]}, ["l.5=1"])


def test_dump_json_nulls_non_finite():
    assert json.loads(cli.dump_json({"x": float("inf"), "y": [float("nan")]})) == {"x": None, "y": [None]}
