import json

import pytest

from relucert.cli import main


def run(argv):
    return main([str(a) for a in argv])


def test_construct_mult_writes_certified_files(tmp_path, capsys):
    code = run(["construct", "mult", "--m", "8", "--out", tmp_path])
    assert code == 0
    cert = json.loads((tmp_path / "mult.cert.json").read_text())
    assert cert["sup_error_bound"] == 2.0**-8
    assert cert["depth"] == 12
    assert "measured_grid_error" in cert
    assert cert["measured_grid_error"] <= cert["sup_error_bound"]
    net_doc = json.loads((tmp_path / "mult.net.json").read_text())
    assert net_doc["depth"] == 12


def test_construct_missing_flag_exits_64(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(["construct", "mult", "--out", tmp_path])
    assert exc.value.code == 64


def test_construct_holder_precondition_exit_2(tmp_path, capsys):
    code = run(
        ["construct", "holder", "--target", "x_times_one_minus_x", "--beta", "2", "--r", "1",
         "--K", "1", "--N", "4", "--m", "10", "--out", tmp_path]
    )
    assert code == 2
    err = capsys.readouterr().err
    assert "(beta+1)^r v (K+1)e^r" in err


def test_construct_holder_and_certify_round_trip(tmp_path):
    code = run(
        ["construct", "holder", "--target", "x_times_one_minus_x", "--beta", "2", "--r", "1",
         "--K", "1", "--N", "8", "--m", "8", "--out", tmp_path]
    )
    assert code == 0
    assert run(["certify", tmp_path / "holder.net.json", tmp_path / "holder.cert.json"]) == 0


def test_certify_detects_tampering(tmp_path, capsys):
    run(["construct", "mult", "--m", "6", "--out", tmp_path])
    cert_path = tmp_path / "mult.cert.json"
    doc = json.loads(cert_path.read_text())
    doc["depth"] -= 1
    cert_path.write_text(json.dumps(doc))
    assert run(["certify", tmp_path / "mult.net.json", cert_path]) == 1
    assert "depth" in capsys.readouterr().err

    doc["depth"] += 1
    doc["sup_error_bound"] = 1e-12  # tighter than the measured error
    cert_path.write_text(json.dumps(doc))
    assert run(["certify", tmp_path / "mult.net.json", cert_path]) == 1


def test_certify_opaque_reference_is_usage_error(tmp_path, capsys):
    run(["construct", "mult", "--m", "5", "--out", tmp_path])
    cert_path = tmp_path / "mult.cert.json"
    doc = json.loads(cert_path.read_text())
    doc["target"] = {"kind": "opaque_holder"}
    cert_path.write_text(json.dumps(doc))
    assert run(["certify", tmp_path / "mult.net.json", cert_path]) == 64
    assert "reference" in capsys.readouterr().err


def test_eval_subcommand(tmp_path, capsys):
    run(["construct", "mult", "--m", "6", "--out", tmp_path])
    capsys.readouterr()
    assert run(["eval", tmp_path / "mult.net.json", "--x", "0.5,0.25"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert abs(out["values"][0] - 0.125) <= 2.0**-6
    assert out["sup_bound_exceeded"] == [False]


def simulate_config(tmp_path, fmt="json"):
    cfg = {
        "family": {"name": "linear", "d": 1},
        "n_grid": [64, 128, 256, 512],
        "replications": 1,
        "seed": 5,
        "mc_points": 512,
        "fit": {"depth": 1, "width": 6, "epochs": 40, "restarts": 1},
    }
    path = tmp_path / f"sim.{fmt}"
    if fmt == "json":
        path.write_text(json.dumps(cfg))
    else:
        lines = [
            'n_grid = [64, 128, 256, 512]', 'replications = 1', 'seed = 5', 'mc_points = 512',
            '[family]', 'name = "linear"', 'd = 1',
            '[fit]', 'depth = 1', 'width = 6', 'epochs = 40', 'restarts = 1',
        ]
        path.write_text("\n".join(lines))
    return path


def test_simulate_deterministic_csv(tmp_path):
    cfg = simulate_config(tmp_path)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run(["simulate", "--config", cfg, "--out", out_a]) == 0
    assert run(["simulate", "--config", cfg, "--out", out_b]) == 0
    assert (out_a / "results.csv").read_bytes() == (out_b / "results.csv").read_bytes()
    header = (out_a / "results.csv").read_text().splitlines()
    assert header[1] == "n,replication,empirical_risk,pred_risk,pred_risk_se,s_final,seed"
    assert "config_sha256=" in header[0]
    report = json.loads((out_a / "slope_report.json").read_text())
    assert report["provenance"]["seed"] == 5


def test_simulate_toml_config(tmp_path):
    cfg = simulate_config(tmp_path, fmt="toml")
    assert run(["simulate", "--config", cfg, "--out", tmp_path / "t"]) == 0


def test_simulate_short_grid_rejected(tmp_path, capsys):
    cfg = {"family": {"name": "linear", "d": 1}, "n_grid": [64, 128, 256]}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cfg))
    assert run(["simulate", "--config", path, "--out", tmp_path]) == 64
    assert "n_grid" in capsys.readouterr().err


def test_simulate_unknown_family_named(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"family": {"name": "nope", "d": 1}, "n_grid": [64, 128, 256, 512]}))
    assert run(["simulate", "--config", path, "--out", tmp_path]) == 64
    assert "family.name" in capsys.readouterr().err


def test_wavelet_deterministic_and_same_schema(tmp_path):
    cfg = {
        "family": {"name": "additive_bump", "d": 2},
        "n_grid": [64, 128, 256, 512],
        "replications": 1,
        "seed": 9,
        "alpha": 1.0,
        "mc_points": 512,
    }
    path = tmp_path / "wav.json"
    path.write_text(json.dumps(cfg))
    out_a, out_b = tmp_path / "wa", tmp_path / "wb"
    assert run(["wavelet", "--config", path, "--out", out_a]) == 0
    assert run(["wavelet", "--config", path, "--out", out_b]) == 0
    assert (out_a / "results.csv").read_bytes() == (out_b / "results.csv").read_bytes()
    header = (out_a / "results.csv").read_text().splitlines()[1]
    assert header == "n,replication,empirical_risk,pred_risk,pred_risk_se,s_final,seed"


def test_rates_report_contains_additive_exponent(tmp_path):
    cfg = {
        "beta": [2.0, 8.0],
        "t": [1, 4],
        "n_grid": [1024, 4096],
        "arch": {"L": 96, "widths": [4, 8, 8, 1], "s": 44, "F": 8.0},
        "K": 8.0,
    }
    path = tmp_path / "rates.json"
    path.write_text(json.dumps(cfg))
    assert run(["rates", "--config", path, "--out", tmp_path]) == 0
    report = json.loads((tmp_path / "rates_report.json").read_text())
    # additive model exponent 2 beta / (2 beta + 1) = 0.8
    assert any(abs(e - 0.8) < 1e-12 for e in report["exponents"])
    assert report["architecture_conditions"]["4096"]["passed"]


def test_out_dir_env_override(tmp_path, monkeypatch):
    target = tmp_path / "env_out"
    monkeypatch.setenv("RELUCERT_OUT", str(target))
    assert run(["construct", "mult", "--m", "4"]) == 0
    assert (target / "mult.net.json").exists()
    cert = json.loads((target / "mult.cert.json").read_text())
    for key in (
        "statement_id", "depth", "width_bound", "sparsity_bound", "sup_error_bound",
        "measured_grid_error", "grid_spec", "derivative_provenance", "provenance",
    ):
        assert key in cert
    assert cert["provenance"]["tool_version"]


def test_jobs_parallel_matches_serial(tmp_path):
    cfg = simulate_config(tmp_path)
    out_a, out_b = tmp_path / "serial", tmp_path / "par"
    assert run(["simulate", "--config", cfg, "--out", out_a, "--jobs", "1"]) == 0
    assert run(["simulate", "--config", cfg, "--out", out_b, "--jobs", "2"]) == 0
    assert (out_a / "results.csv").read_bytes() == (out_b / "results.csv").read_bytes()
