import csv
import io
import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from conftest import CONFIGS
from singular_harvest.cli import SIMULATE_COLUMNS, SWEEP_COLUMNS, main


def _schema(name):
    return json.loads(resources.files("singular_harvest").joinpath(f"schemas/{name}.schema.json").read_text())


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def cfg(name):
    return CONFIGS / f"{name}.json"


def _write(tmp_path, data, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


@pytest.mark.parametrize("name", ["bm2d", "bm2d_threshold", "logistic"])
def test_solve_json_validates(capsys, name):
    code, out, _ = run(capsys, "solve", "--config", cfg(name))
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, _schema("solve"))
    assert doc["command"] == "solve" and "meta" in doc


def test_solve_regime_a_value(capsys):
    code, out, _ = run(capsys, "solve", "--config", cfg("bm2d"), "--no-meta")
    doc = json.loads(out)
    assert doc["value"] == pytest.approx(6.0, rel=1e-14)
    assert "meta" not in doc


def test_solve_general_is_unsupported(capsys):
    code, _, err = run(capsys, "solve", "--config", cfg("general"))
    assert code == 2 and "no analytic" in err


def test_config_errors_exit_1(capsys, tmp_path):
    data = json.loads(cfg("bm2d").read_text())
    del data["prices"]["rho"]
    code, _, err = run(capsys, "solve", "--config", _write(tmp_path, data))
    assert code == 1 and "prices.rho" in err
    code, _, err = run(capsys, "solve", "--config", tmp_path / "nope.json")
    assert code == 1
    code, _, err = run(capsys, "verify", "--config", cfg("bm2d"), "--points", "0")
    assert code == 1


def test_bad_usage_exits_1(capsys):
    with pytest.raises(SystemExit) as info:
        main(["sweep", "--config", str(cfg("bm2d")), "--param", "nope", "--range", "0:1:2"])
    assert info.value.code == 1
    code, _, _ = run(capsys, "sweep", "--config", cfg("bm2d"), "--param", "mu", "--range", "1:0")
    assert code == 1
    code, _, _ = run(capsys, "simulate", "--config", cfg("bm2d"), "--policy", "teleport")
    assert code == 1


def test_simulate_csv_columns_and_determinism(capsys):
    args = ["simulate", "--config", cfg("bm2d"), "--policy", "take_all,chatter:m=100,no_harvest", "--n-paths", 20, "--no-meta"]
    code, out1, _ = run(capsys, *args)
    code2, out2, _ = run(capsys, *args)
    assert code == code2 == 0
    assert out1 == out2
    rows = list(csv.reader(io.StringIO(out1)))
    assert tuple(rows[0]) == SIMULATE_COLUMNS
    assert all(len(r) == len(SIMULATE_COLUMNS) for r in rows)
    by_policy = {r[0]: r for r in rows[1:]}
    assert float(by_policy["take_all"][2]) == pytest.approx(3.0)
    assert float(by_policy["no_harvest"][2]) == 0.0


def test_simulate_json_validates(capsys):
    code, out, _ = run(capsys, "simulate", "--config", cfg("bm2d_threshold"), "--n-paths", 10, "--format", "json", "--extinction", "both")
    assert code == 0
    jsonschema.validate(json.loads(out), _schema("simulate"))


def test_simulate_writes_out_file(capsys, tmp_path):
    dest = tmp_path / "sim.csv"
    code, out, _ = run(capsys, "simulate", "--config", cfg("bm2d"), "--policy", "take_all", "--n-paths", 5, "--out", dest)
    assert code == 0 and out == ""
    assert dest.read_text().startswith(",".join(SIMULATE_COLUMNS))


def test_verify_regime_a_passes(capsys):
    code, out, _ = run(capsys, "verify", "--config", cfg("bm2d"), "--points", 40)
    doc = json.loads(out)
    jsonschema.validate(doc, _schema("verify"))
    assert code == 0 and doc["passed"]


def test_verify_threshold_reports_small_stock_violation(capsys):
    code, out, _ = run(capsys, "verify", "--config", cfg("bm2d_threshold"), "--points", 60)
    doc = json.loads(out)
    assert code == 0 and not doc["passed"]
    comp = doc["report"]["conditions"]
    assert not comp["i"]["pass"] and comp["ii"]["pass"] and comp["iii"]["pass"]


def test_verify_perturbed_threshold_fails_pasting(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--config", cfg("logistic"), "--perturb", 0.1, "--grid-csv", tmp_path / "g.csv")
    doc = json.loads(out)
    assert code == 0 and not doc["passed"]
    assert any(not sp["pass"] for sp in doc["smooth_pasting"])
    assert (tmp_path / "g.csv").read_text().count("\n") > 10
    code, out, _ = run(capsys, "verify", "--config", cfg("logistic"))
    assert json.loads(out)["passed"]


def test_bounds_json_and_csv(capsys):
    code, out, _ = run(capsys, "bounds", "--config", cfg("bm2d_threshold"), "--with-mc", "--n-paths", 30)
    doc = json.loads(out)
    jsonschema.validate(doc, _schema("bounds"))
    assert doc["lower"] <= doc["upper_mc"] <= doc["upper_conservative"]
    code, out, _ = run(capsys, "bounds", "--config", cfg("bm2d"), "--format", "csv", "--no-meta")
    rows = list(csv.reader(io.StringIO(out)))
    assert len({len(r) for r in rows}) == 1


def test_sweep_regime_flips_once(capsys):
    code, out, _ = run(capsys, "sweep", "--config", cfg("bm2d"), "--param", "mu", "--range", "0.1:1.0:10", "--component", 0, "--no-meta")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert tuple(rows[0].keys()) == SWEEP_COLUMNS
    rows = [r for r in rows if r["component"] == "0"]
    assert len(rows) == 10
    regimes = [r["regime"] for r in rows]
    assert sum(a != b for a, b in zip(regimes, regimes[1:])) == 1
    assert float(rows[0]["regime_boundary"]) == pytest.approx(0.2**0.5, rel=1e-9)


def test_sweep_json_validates(capsys):
    code, out, _ = run(capsys, "sweep", "--config", cfg("logistic"), "--param", "sigma", "--range", "0.2:1.5:4", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, _schema("sweep"))
    # small sigma pushes the Kummer argument past its supported range
    notes = [r["note"] for r in doc["rows"]]
    assert notes[0] and "range" in notes[0] and notes[-1] is None


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "singular_harvest", "solve", "--config", str(cfg("bm2d")), "--no-meta"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "solve"
    proc = subprocess.run([sys.executable, "-m", "singular_harvest", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
