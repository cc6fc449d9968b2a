"""Experiment runner: config handling, reproducible outputs, exit codes."""

import json

import pytest

from lakes.cli import config_hash, load_config, main, run, validate_config
from lakes.errors import ConfigInvalid


QUTRIT_CFG = {
    "experiment": "qutrit-sweep",
    "T_values": [1.0, 5.0],
    "drives": ["none", "cd1"],
    "h_z": 1.0 / 15.0,
}


def write_cfg(tmp_path, cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_config_hash_is_order_independent():
    a = {"experiment": "qutrit-sweep", "T_values": [1.0], "seed": 0}
    b = {"seed": 0, "T_values": [1.0], "experiment": "qutrit-sweep"}
    assert config_hash(a) == config_hash(b)
    assert len(config_hash(a)) == 12
    assert config_hash(a) != config_hash({**a, "seed": 1})


def test_validate_rejects_unknown_experiment_and_keys():
    with pytest.raises(ConfigInvalid):
        validate_config({"experiment": "unknown"})
    with pytest.raises(ConfigInvalid):
        validate_config({"experiment": "qutrit-sweep", "bogus": 1})
    with pytest.raises(ConfigInvalid):
        validate_config({"experiment": "qutrit-sweep", "h_x": "one"})
    with pytest.raises(ConfigInvalid):
        validate_config({"experiment": "qutrit-sweep", "T_values": []})


def test_validate_applies_defaults():
    cfg = validate_config({"experiment": "qutrit-sweep"})
    assert cfg["seed"] == 0 and cfg["outdir"] == "results"


def test_load_config_with_overrides(tmp_path):
    path = write_cfg(tmp_path, QUTRIT_CFG)
    cfg = load_config(path, ["h_x=2.0", 'drives=["none"]'])
    assert cfg["h_x"] == 2.0 and cfg["drives"] == ["none"]
    with pytest.raises(ConfigInvalid):
        load_config(path, ["no-equals-sign"])
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigInvalid):
        load_config(str(bad))


def test_run_writes_manifest_and_byte_stable_results(tmp_path):
    cfg = validate_config({**QUTRIT_CFG, "outdir": str(tmp_path / "out")})
    outdir = run(dict(cfg))
    manifest = json.loads((outdir / "manifest.json").read_text())
    assert manifest["status"] == "done"
    assert manifest["config_hash"] == config_hash(cfg)
    assert manifest["warnings"] == []
    first = (outdir / "results.csv").read_bytes()
    header = first.decode().splitlines()[0]
    assert header == "drive,delta,T,target_overlap,ground_overlap"
    assert len(first.decode().splitlines()) == 1 + 2 * 2   # 2 drives x 2 times
    again = run(dict(cfg))
    assert (again / "results.csv").read_bytes() == first


def test_failed_scan_points_become_warnings(tmp_path):
    cfg = validate_config({**QUTRIT_CFG, "drives": ["none", "not-a-drive"],
                           "outdir": str(tmp_path / "out")})
    outdir = run(dict(cfg))
    manifest = json.loads((outdir / "manifest.json").read_text())
    assert manifest["status"] == "done"
    assert len(manifest["warnings"]) == 2    # one per T of the bad drive
    rows = (outdir / "results.csv").read_text().splitlines()
    assert len(rows) == 1 + 2                # the good drive still ran


def test_main_exit_codes(tmp_path):
    missing = str(tmp_path / "nope.json")
    assert main(["run", "--config", missing]) == 2
    bad = write_cfg(tmp_path, {"experiment": "qutrit-sweep", "bogus": 1})
    assert main(["run", "--config", bad]) == 2
    assert main(["verify", "--tier", "nope"]) == 2


def test_main_runs_an_experiment(tmp_path):
    path = write_cfg(tmp_path, {**QUTRIT_CFG, "outdir": str(tmp_path / "out")})
    assert main(["run", "--config", path]) == 0


@pytest.mark.slow
def test_verify_ci_tier_passes(capsys):
    assert main(["verify", "--tier", "ci"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert all(line.startswith("PASS") for line in lines if " " in line)
