import csv
import json

import pytest

from latgreen.cli import main

WATSON = 1.516386059151978


def run(capsys, *argv):
    status = main(list(argv))
    out, err = capsys.readouterr()
    return status, out, err


def rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# schema_version=1 config=")
    return list(csv.DictReader(lines[1:]))


def test_constants_d3(capsys):
    status, out, _ = run(capsys, "constants", "--dim", "3")
    assert status == 0
    (row,) = rows(out)
    assert row["a_d"] == "0.0795774715459"
    assert row["h0"] == "6" and row["n_d"] == "2"


def test_constants_d4_json(capsys):
    status, out, _ = run(capsys, "constants", "--dim", "4", "--format", "json")
    doc = json.loads(out)
    assert status == 0 and doc["schema_version"] == 1
    assert doc["rows"][0]["n_d"] == 3


def test_constants_rejects_d2(capsys):
    status, out, err = run(capsys, "constants", "--dim", "2")
    assert status != 0 and out == "" and "dimension" in err


def test_green_matches_series(capsys):
    status, out, _ = run(capsys, "green", "--dim", "3", "--x", "1,0,0", "--x", "0,0,0")
    assert status == 0
    r = rows(out)
    assert [x["x"] for x in r] == ["0 0 0", "1 0 0"]
    assert float(r[0]["f"]) == pytest.approx(WATSON, abs=1e-6)
    assert float(r[1]["f"]) == pytest.approx(WATSON - 1, abs=1e-6)
    assert r[1]["method_tag"] == "subtraction+grid"


def test_green_empty_is_header_only(capsys):
    status, out, _ = run(capsys, "green", "--dim", "3")
    assert status == 0
    assert len(out.splitlines()) == 2


def test_green_aliasing_exit(capsys):
    status, out, err = run(capsys, "green", "--dim", "3", "--x", "20,0,0", "--grid-n", "64")
    assert status != 0 and out == "" and "aliasing" in err


def test_green_bad_point(capsys):
    status, _, err = run(capsys, "green", "--dim", "3", "--x", "1,0")
    assert status == 2 and "coordinates" in err


def test_unsupported_model(capsys, tmp_path):
    path = tmp_path / "bip.json"
    path.write_text(json.dumps({"dim": 3, "orbits": [
        {"point": [0, 0, 0], "weight": -0.25},
        {"point": [2, 0, 0], "weight": 1.5 / 36},
        {"point": [1, 1, 0], "weight": 3 / 36}]}))
    status, _, err = run(capsys, "green", "--model", str(path), "--x", "1,0,0")
    assert status == 2 and "vanishes" in err


def test_malformed_model_names_field(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"dim": 3, "orbits": [{"point": [1, 0, 0], "wieght": 0.2}]}))
    status, _, err = run(capsys, "asymptote", "--model", str(path), "--L-min", "10",
                         "--L-max", "20")
    assert status == 2 and "orbits[0].weight" in err


def test_invalid_json_file(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{dim: 3")
    status, _, err = run(capsys, "constants", "--model", str(path))
    assert status == 2 and "invalid JSON" in err


def test_asymptote_output(capsys, tmp_path):
    out = tmp_path / "a.json"
    status, _, _ = run(capsys, "asymptote", "--dim", "3", "--L-min", "10", "--L-max", "30",
                       "--format", "json", "--output", str(out))
    assert status == 0
    doc = json.loads(out.read_text())
    assert doc["schema_version"] == 1
    assert [r["x"][0] for r in doc["rows"]] == [10, 20, 30]
    assert -1.05 <= doc["fitted_exponent"] <= -0.95
    assert doc["bound_ratio"] > 0


def test_asymptote_needs_sweep(capsys):
    status, _, err = run(capsys, "asymptote", "--dim", "3", "--x", "5,0,0")
    assert status == 2 and "sweep" in err


def test_oracle_negative_weights_notice(capsys, tmp_path):
    path = tmp_path / "signed.json"
    path.write_text(json.dumps({"dim": 3, "orbits": [
        {"point": [0, 0, 0], "weight": 0.5}, {"point": [1, 0, 0], "weight": 0.1},
        {"point": [2, 0, 0], "weight": -0.1 / 6}]}))
    # a lazy walk (sigma^2 = 0.2): the short series carries a visible tail uncertainty
    status, out, err = run(capsys, "oracle", "--model", str(path), "--x", "1,0,0",
                           "--n-max", "100", "--tail-tol", "0.05")
    assert status == 0 and "Monte Carlo" in err
    (row,) = rows(out)
    assert row["mc_mean"] == ""
    status, out, _ = run(capsys, "green", "--model", str(path), "--x", "1,0,0")
    (pipe,) = rows(out)
    gap = abs(float(pipe["f"]) - float(row["series"]))
    assert gap <= float(row["tail_estimate"]) + float(pipe["error_estimate"])


def test_oracle_divergent_series(capsys, tmp_path):
    path = tmp_path / "signed.json"
    path.write_text(json.dumps({"dim": 3, "orbits": [
        {"point": [0, 0, 0], "weight": -0.5}, {"point": [1, 0, 0], "weight": 0.25}]}))
    status, _, err = run(capsys, "oracle", "--model", str(path), "--x", "1,0,0")
    assert status == 2 and "diverges" in err


def test_oracle_deterministic(capsys, tmp_path):
    args = ["oracle", "--dim", "3", "--x", "1,0,0", "--walks", "5000", "--seed", "9"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["-o", str(a)]) == 0
    assert main(args + ["-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    (row,) = rows(a.read_text())
    assert float(row["series"]) == pytest.approx(WATSON - 1, abs=1e-8)
