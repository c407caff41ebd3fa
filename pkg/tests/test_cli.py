import json
import logging
import subprocess
import sys
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from vbcswitch import cli
from vbcswitch.causal import DeterministicStrategy, strategy_behavior
from vbcswitch.errors import ConfigError
from vbcswitch.inequality import evaluate_functional, evaluate_vbc
from vbcswitch.runconfig import bundled_functional_path, functional_from_dict, load_functional, load_schema
from vbcswitch.stats import read_counts
from vbcswitch.switch import NoiseModel, compute_behavior

ROOT = Path(__file__).resolve().parent.parent
REPORT_SCHEMA = jsonschema.Draft202012Validator(load_schema("report"))


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_json(path: Path, data) -> str:
    path.write_text(json.dumps(data))
    return str(path)


@pytest.fixture
def small_cfg(tmp_path):
    return write_json(tmp_path / "small.json", {"noise": {"visibility": 0.98, "werner_p": 0.92},
                                                 "sampling": {"rounds": 20000, "seed": 1}})


def test_exact_report(capsys):
    code, out, _ = run_cli(capsys, "exact")
    assert code == 0
    rep = json.loads(out)
    REPORT_SCHEMA.validate(rep)
    assert rep["results"]["exact"]["vbc"]["total"] == pytest.approx(1.5 + 2**0.5 / 4, abs=1e-12)
    assert rep["config"]["noise"] == {"visibility": 1.0, "werner_p": 1.0, "efficiency": 1.0}


def test_sample_report_and_reruns_identical(capsys, small_cfg):
    outs = [run_cli(capsys, "sample", "--config", small_cfg)[1] for _ in range(2)]
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    REPORT_SCHEMA.validate(rep)
    assert rep["results"]["sampled"]["counts"]["rounds"] == 20000
    other = run_cli(capsys, "sample", "--config", small_cfg, "--seed", "2")[1]
    assert json.loads(other)["config"]["sampling"]["seed"] == 2
    assert other != outs[0]


def test_sample_csv_written(capsys, small_cfg, tmp_path):
    dest = tmp_path / "counts.csv"
    code, out, _ = run_cli(capsys, "sample", "--config", small_cfg, "--format", "csv", "--output", str(dest))
    assert code == 0 and out == ""
    table = read_counts(dest)
    assert table.detected == 20000 and table.seed == 1
    assert run_cli(capsys, "sample", "--config", small_cfg, "--format", "csv")[0] == 1


def test_bound_report(capsys):
    rep = json.loads(run_cli(capsys, "bound")[1])
    REPORT_SCHEMA.validate(rep)
    b = rep["results"]["bound"]
    assert b["value"] == 1.75
    assert b["strategies_enumerated"] == 131072


def test_optimize_report(capsys):
    rep = json.loads(run_cli(capsys, "optimize")[1])
    REPORT_SCHEMA.validate(rep)
    assert rep["results"]["optimize"]["best_total"] >= 1.8535523


def test_spacetime_report(capsys):
    code, out, _ = run_cli(capsys, "spacetime", "--config", str(ROOT / "configs" / "spacetime_tabletop.json"))
    assert code == 0
    rep = json.loads(out)
    REPORT_SCHEMA.validate(rep)
    assert rep["results"]["spacetime"]["ok"] is False


def test_spacetime_requires_scenario(capsys):
    code, _, err = run_cli(capsys, "spacetime")
    assert code == 1
    assert json.loads(err)["error"]["category"] == "config"


@pytest.mark.slow
def test_membership_report(capsys):
    rep = json.loads(run_cli(capsys, "membership")[1])
    REPORT_SCHEMA.validate(rep)
    assert rep["results"]["membership"]["feasible"] is False


def test_sweep_json_and_csv(capsys):
    rep = json.loads(run_cli(capsys, "exact", "--sweep", "visibility=0.9:1.0:0.05")[1])
    REPORT_SCHEMA.validate(rep)
    rows = rep["results"]["sweep"]["rows"]
    assert [r["visibility"] for r in rows] == [0.9, 0.95, 1.0]
    assert rows[-1]["total"] == pytest.approx(1.8535533906, abs=1e-9)
    text = run_cli(capsys, "exact", "--sweep", "werner_p=0:1:0.5", "--format", "csv")[1]
    lines = text.strip().splitlines()
    assert lines[0] == "visibility,werner_p,term1,term2,term3,total"
    assert len(lines) == 4


def test_exact_csv_has_full_table(capsys):
    lines = run_cli(capsys, "exact", "--format", "csv")[1].strip().splitlines()
    assert lines[0] == "x1,x2,y,z,a1,a2,b,c,probability"
    assert len(lines) == 257


@pytest.mark.parametrize("sweep", ["visibility", "visibility=1:0:0.1", "loss=0:1:0.1", "werner_p=0:1:0"])
def test_bad_sweep(capsys, sweep):
    code, _, err = run_cli(capsys, "exact", "--sweep", sweep)
    assert code == 1
    assert "sweep" in json.loads(err)["error"]["message"]


def test_sweep_only_for_exact(capsys):
    assert run_cli(capsys, "bound", "--sweep", "visibility=0:1:0.5")[0] == 1


@pytest.mark.parametrize(
    "payload, fragment",
    [
        ({"noise": {"visibility": 1.5}}, "noise/visibility"),
        ({"noise": {"visiblity": 1.0}}, "Additional properties"),
        ({"sampling": {"rounds": 0}}, "sampling/rounds"),
        ([1, 2], "top level"),
    ],
)
def test_config_errors(capsys, tmp_path, payload, fragment):
    code, _, err = run_cli(capsys, "exact", "--config", write_json(tmp_path / "c.json", payload))
    assert code == 1
    assert fragment in json.loads(err)["error"]["message"]


def test_config_parse_error_reports_position(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "noise": {"visibility": }\n}')
    code, _, err = run_cli(capsys, "exact", "--config", str(bad))
    assert code == 1
    assert "line 2, column" in json.loads(err)["error"]["message"]


def test_missing_config_file(capsys, tmp_path):
    assert run_cli(capsys, "exact", "--config", str(tmp_path / "nope.json"))[0] == 1


def test_insufficient_data_exit_code(capsys, tmp_path):
    cfg = write_json(tmp_path / "c.json", {"sampling": {"rounds": 3}})
    code, _, err = run_cli(capsys, "sample", "--config", cfg)
    assert code == 2
    assert json.loads(err)["error"]["category"] == "data"


def test_internal_error_exit_code(capsys, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("unexpected")

    monkeypatch.setattr(cli, "run", boom)
    code, _, err = run_cli(capsys, "exact")
    assert code == 4
    assert json.loads(err)["error"]["category"] == "internal"


def test_config_dir_env(capsys, tmp_path, monkeypatch):
    write_json(tmp_path / "default.json", {"noise": {"werner_p": 0.5}})
    write_json(tmp_path / "named.json", {"noise": {"werner_p": 0.25}})
    monkeypatch.setenv("VBCSWITCH_CONFIG_DIR", str(tmp_path))
    rep = json.loads(run_cli(capsys, "exact")[1])
    assert rep["config"]["noise"]["werner_p"] == 0.5
    rep = json.loads(run_cli(capsys, "exact", "--config", "named.json")[1])
    assert rep["config"]["noise"]["werner_p"] == 0.25


def test_output_file(capsys, tmp_path):
    dest = tmp_path / "r.json"
    code, out, _ = run_cli(capsys, "exact", "--output", str(dest))
    assert code == 0 and out == ""
    assert json.loads(dest.read_text())["subcommand"] == "exact"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "vbcswitch", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("vbcswitch ")


# ---------------------------------------------------------------- functionals

def test_bundled_functional_matches_vbc():
    f = load_functional(bundled_functional_path())
    rng = np.random.default_rng(3)
    behaviors = [compute_behavior(NoiseModel(float(v), float(p))) for v, p in rng.random((3, 2))]
    behaviors += [strategy_behavior(DeterministicStrategy.from_index(int(i))) for i in rng.integers(0, 131072, 2)]
    for beh in behaviors:
        assert evaluate_functional(beh, f) == pytest.approx(evaluate_vbc(beh).total, abs=1e-12)


def test_custom_functional_through_cli(capsys, tmp_path):
    fpath = write_json(tmp_path / "f.json", {"name": "chsh", "terms": [
        {"event": "b ^ c == y & z", "given": {"x1": 0, "x2": 0}, "average": ["y", "z"]}]})
    cfg = write_json(tmp_path / "c.json", {"functional": "f.json"})
    rep = json.loads(run_cli(capsys, "bound", "--config", cfg)[1])
    assert rep["results"]["bound"]["value"] == 0.75
    rep = json.loads(run_cli(capsys, "exact", "--config", cfg)[1])
    assert rep["results"]["exact"]["functional_value"] == pytest.approx(0.5 + 2**0.5 / 4)


def test_empty_functional_warns(caplog):
    with caplog.at_level(logging.WARNING):
        f = functional_from_dict({"terms": []}, "empty.json")
    assert "no terms" in caplog.text
    assert evaluate_functional(compute_behavior(NoiseModel()), f) == 0.0


@pytest.mark.parametrize(
    "term",
    [
        {"event": "b == 0", "given": {"a1": 0}},
        {"event": "b == ", "given": {}},
        {"event": "__import__('os')"},
        {"event": "b == 0", "average": ["w"]},
    ],
)
def test_bad_functional_rejected(term):
    with pytest.raises(ConfigError):
        functional_from_dict({"terms": [term]})


def test_functional_parse_error_reports_position(tmp_path):
    p = tmp_path / "f.json"
    p.write_text('{"terms": [\n\n  {"event": "b == 0",}\n]}')
    with pytest.raises(ConfigError, match="line 3, column"):
        load_functional(p)


def test_docs_schemas_match_package():
    for name in ("config", "report", "functional"):
        shipped = json.loads((ROOT / "docs" / "schemas" / f"{name}.schema.json").read_text())
        assert shipped == load_schema(name)
