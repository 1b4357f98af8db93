import json

import pytest

from hybridjump.cli import main


def write_cfg(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def test_missing_required_field_exit_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"kappa": 0.1})  # nu missing
    rc = main(["boltzmann", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 2
    assert "nu" in capsys.readouterr().err


def test_unknown_key_exit_2_with_path(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"model": {"family": "discrete_toy", "params": {},
                                         "extra": 1},
                               "sim": {"horizon": 1.0}})
    rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 2
    assert "model.extra" in capsys.readouterr().err


def test_malformed_json_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    rc = main(["simulate", "--config", str(path), "--out", str(tmp_path)])
    assert rc == 2


def test_simulate_reproducible_bytes(tmp_path):
    cfg = write_cfg(tmp_path, {
        "model": {"family": "discrete_toy", "params": {}},
        "sim": {"horizon": 1.0, "flow_step": 0.05, "n_paths": 32},
        "x0": [0.2], "dump_paths": True,
    })
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", str(cfg), "--seed", "7",
                 "--out", str(out_a)]) == 0
    assert main(["simulate", "--config", str(cfg), "--seed", "7", "--workers", "4",
                 "--out", str(out_b)]) == 0
    assert (out_a / "terminal.csv").read_bytes() == (out_b / "terminal.csv").read_bytes()
    assert (out_a / "paths.jsonl").read_bytes() == (out_b / "paths.jsonl").read_bytes()


def test_simulate_header_has_hash_and_version(tmp_path):
    cfg = write_cfg(tmp_path, {
        "model": {"family": "constant_rate", "params": {}},
        "sim": {"horizon": 1.5, "flow_step": 0.5, "n_paths": 4},
    })
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    head = (tmp_path / "terminal.csv").read_text().splitlines()[0]
    assert head.startswith("# config_sha256=") and "version=" in head


def test_three_regimes_csv_columns(tmp_path):
    cfg = write_cfg(tmp_path, {"epsilon_list": [0.08, 0.04, 0.02],
                               "n_paths": 1500, "horizon": 0.4,
                               "flow_step": 0.01, "x0": 0.5, "f": "sin"})
    rc = main(["three-regimes", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "three_regimes.csv").read_text().splitlines()
    assert lines[1] == "epsilon,error,ci_low,ci_high,n_paths,fitted_rate"
    assert len(lines) == 2 + 3


def test_boltzmann_csv(tmp_path):
    cfg = write_cfg(tmp_path, {"nu": 0.3, "kappa": 0.1,
                               "delta_list": [0.4, 0.2, 0.1],
                               "n_particles": 64, "n_replicas": 4,
                               "horizon": 0.2})
    rc = main(["boltzmann", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "boltzmann.csv").read_text().splitlines()
    assert lines[1].startswith("delta,order,error")
    assert len(lines) == 2 + 3


def test_constants_json(tmp_path):
    cfg = write_cfg(tmp_path, {
        "model": {"family": "three_regime_source", "params": {"epsilon": 0.05}},
        "q": 2, "horizon": 1.0,
        "grid": {"times": [0.0], "points": [[-1.0], [0.0], [1.0]]},
        "localization": {"g1": [[0.2, 1.0]], "g2": [[0.05, 1.0]]},
    })
    rc = main(["constants", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 0
    payload = json.loads((tmp_path / "constants.json").read_text())
    assert "regularity" in payload and "localization" in payload
    assert payload["localization"]["value"] > 0


def test_weak_error_sweep(tmp_path):
    cfg = write_cfg(tmp_path, {
        "model_a": {"family": "constant_rate", "params": {"rate_bound": 3.0}},
        "model_b": {"family": "constant_rate", "params": {"rate_bound": 5.0}},
        "sweep": {"param": "gamma0", "values": [0.5, 1.0, 2.0]},
        "sim": {"horizon": 1.0, "flow_step": 0.5, "n_paths": 400},
        "f": "identity",
    })
    rc = main(["weak-error", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "weak_error.csv").read_text().splitlines()
    assert len(lines) == 2 + 3


def test_validate_quick_pass(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"quick": True})
    rc = main(["validate", "--config", str(cfg), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "PASS" in out and "FAIL" not in out
