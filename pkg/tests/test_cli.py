import json

import pytest

from smilab.cli import EXIT_DOMAIN, EXIT_IO, EXIT_OK, EXIT_VERIFY, main


def _write(tmp_path, text, name="exp.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


STABILITY = """
kind: stability
ensemble: {kind: dephasing, lambda: 1.0}
grid: {tau: 1.0, slices: 20}
n_trajectories: 200
state: basis:0
"""


def test_run_prints_json(tmp_path, capsys):
    assert main(["run", "--config", _write(tmp_path, STABILITY)]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["kind"] == "stability"
    assert out["payload"]["is_stable"] is True
    assert len(out["config_digest"]) == 64


def test_run_writes_file_and_seed_override(tmp_path):
    cfg = _write(tmp_path, STABILITY.replace("basis:0", "plus"))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["run", "--config", cfg, "--out", str(a)]) == EXIT_OK
    assert main(["run", "--config", cfg, "--out", str(b), "--seed", "99"]) == EXIT_OK
    pa, pb = json.loads(a.read_text()), json.loads(b.read_text())
    assert pa["config_digest"] != pb["config_digest"]
    assert pa["payload"]["expectation_variance"] != pb["payload"]["expectation_variance"]


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["run", "--config", _write(tmp_path, "kind: stability\nensemble: {lambda: -1}")]) == EXIT_DOMAIN
    assert "lambda >= 0" in capsys.readouterr().err


def test_domain_error_exit_code(tmp_path):
    bad = "kind: decay-curve\nensemble: {lambda: 0.0}\ngrid: {slices: 4}\nn_trajectories: 10"
    assert main(["run", "--config", _write(tmp_path, bad)]) == EXIT_DOMAIN


def test_io_error_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = _write(tmp_path, STABILITY)
    assert main(["run", "--config", cfg, "--out", str(blocker / "out.json")]) == EXIT_IO
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == EXIT_IO


def test_sweep_writes_a_list(tmp_path):
    cfg = _write(tmp_path, STABILITY.replace("lambda: 1.0", "lambda: [0.5, 1.0]"))
    out = tmp_path / "s.json"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == EXIT_OK
    assert len(json.loads(out.read_text())) == 2


def test_baseline_command(capsys):
    assert main(["baseline", "--alpha-sq", "0.25,0.75"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "M = 4" in out and "1/4, 3/4" in out
    assert main(["baseline", "--alpha-sq", "0.5,0.6"]) == EXIT_DOMAIN


def test_verify_filtered_pass(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert main(["verify", "--filter", "time_ordering", "--out", str(out)]) == EXIT_OK
    assert "[PASS] time_ordering" in capsys.readouterr().out
    assert json.loads(out.read_text())["payload"]["passed"] is True


def test_verify_catches_injected_fault(capsys):
    assert main(["verify", "--filter", "time_ordering", "--inject-fault", "naive-sum"]) == EXIT_VERIFY
    assert "[FAIL] time_ordering" in capsys.readouterr().out


def test_unknown_subcommand_exits_with_usage():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
