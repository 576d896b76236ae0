import json

import numpy as np
import pytest

from smilab.config import DEFAULTS, parse_config
from smilab.errors import ConfigError
from smilab.report import curve_csv, emit_report, payload_bytes, to_json
from smilab.runner import derive_seed, run_experiment, run_sweep, sweep_points

SMALL = """
kind: ensemble-average
master_seed: 7
ensemble: {kind: dephasing, lambda: 1.0}
grid: {tau: 1.0, slices: 20}
n_trajectories: 400
"""


def test_defaults_fill_missing_keys():
    c = parse_config("kind: decay-curve")
    assert c["grid.slices"] == 200
    assert c["n_trajectories"] == 10000
    assert c["ensemble.kind"] == "dephasing"
    assert c["output.format"] == "json"
    assert DEFAULTS["grid"]["slices"] == 200  # defaults are not mutated


def test_negative_lambda_message():
    with pytest.raises(ConfigError, match=r"ensemble\.lambda = -1 violates constraint lambda >= 0"):
        parse_config("kind: stability\nensemble: {lambda: -1}")


def test_unknown_key_suggestion():
    with pytest.raises(ConfigError, match="did you mean 'lambda'"):
        parse_config("kind: stability\nensemble: {lamda: 1}")
    with pytest.raises(ConfigError, match="did you mean 'master_seed'"):
        parse_config("kind: stability\nmaster_sed: 1")


@pytest.mark.parametrize(
    "text",
    [
        "kind: nonsense",
        "kind: stability\ngrid: {tau: 0}",
        "kind: stability\ngrid: {slices: 0}",
        "kind: stability\nn_trajectories: 1",
        "kind: stability\nmaster_seed: -3",
        "kind: stability\noutput: {format: csv}",
        "kind: baseline-envariance",
        "kind: stability\nensemble: {ordering: reversed}",
        "kind: [unclosed",
        "",
    ],
)
def test_invalid_documents(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_digest_ignores_key_order_and_output():
    a = parse_config("kind: stability\nmaster_seed: 3\nensemble: {kind: dephasing, lambda: 0.5}")
    b = parse_config("ensemble: {lambda: 0.5, kind: dephasing}\nmaster_seed: 3\nkind: stability\noutput: {path: x.json}")
    assert a.digest() == b.digest()
    assert a.digest() != a.replace(master_seed=4).digest()


def test_integer_lambda_normalized():
    assert parse_config("kind: stability\nensemble: {lambda: 1}").digest() == \
        parse_config("kind: stability\nensemble: {lambda: 1.0}").digest()


def test_run_is_reproducible():
    c = parse_config(SMALL)
    assert payload_bytes(run_experiment(c)) == payload_bytes(run_experiment(c, workers=3))


def test_run_payload_contents():
    p = run_experiment(parse_config(SMALL)).payload
    assert p["metrics"]["born_deviation"] < 1e-12
    assert abs(p["metrics"]["offdiagonal_norm"] - 0.5 * np.exp(-1)) < 0.05
    assert p["born_initial"] == pytest.approx([0.5, 0.5])


def test_sweep_points_and_seeds():
    c = parse_config(SMALL.replace("lambda: 1.0", "lambda: [0.1, 0.2]").replace("tau: 1.0", "tau: [1.0, 2.0]"))
    pts = sweep_points(c)
    assert [(p["ensemble.lambda"], p["grid.tau"]) for p in pts] == [(0.1, 1.0), (0.1, 2.0), (0.2, 1.0), (0.2, 2.0)]
    assert [p.master_seed for p in pts] == [derive_seed(7, i) for i in range(4)]
    assert len(set(p.master_seed for p in pts)) == 4


def test_single_point_sweep_equals_run():
    c = parse_config(SMALL.replace("lambda: 1.0", "lambda: [0.3]"))
    swept = run_sweep(c)
    assert len(swept) == 1
    direct = run_experiment(sweep_points(c)[0])
    assert payload_bytes(swept[0]) == payload_bytes(direct)


def test_sweep_without_axis_is_rejected():
    with pytest.raises(ConfigError):
        sweep_points(parse_config(SMALL))


def test_lambda_sweep_decoheres_monotonically():
    c = parse_config(SMALL.replace("lambda: 1.0", "lambda: [0.1, 0.2, 0.4]").replace("tau: 1.0", "tau: 4.0")
                     .replace("n_trajectories: 400", "n_trajectories: 10000"))
    res = run_sweep(c)
    off = [r.payload["metrics"]["offdiagonal_norm"] for r in res]
    err = [max(map(max, r.payload["state_mc_error"])) if isinstance(r.payload["state_mc_error"], list)
           else r.payload["state_mc_error"] for r in res]
    for a, b, ea, eb in zip(off, off[1:], err, err[1:]):
        assert a - b > ea + eb


def test_json_round_trip_is_bit_exact(tmp_path):
    res = run_experiment(parse_config(SMALL))
    path = emit_report(res, tmp_path / "out.json")[0]
    back = json.loads(path.read_text())
    assert back["payload"] == json.loads(to_json(res.payload))
    assert back["payload"]["metrics"]["purity"] == res.payload["metrics"]["purity"]
    assert isinstance(back["payload"]["tau"], float)


def test_json_float_formatting():
    assert to_json(0.1) == "0.10000000000000001"
    assert to_json(1.0) == "1.0"
    assert to_json(float("nan")) == "null"
    assert json.loads(to_json({"a": [1e-300, 2.5]})) == {"a": [1e-300, 2.5]}


def test_decay_csv(tmp_path):
    c = parse_config("""
kind: decay-curve
ensemble: {lambda: 1.0}
grid: {tau: [0.5, 1.0, 2.0], slices: 20}
n_trajectories: 200
output: {format: csv}
""")
    res = run_experiment(c)
    path = emit_report(res, tmp_path / "d.csv", "csv")[0]
    lines = path.read_text().splitlines()
    assert lines[0] == "tau,measured,analytic,mc_error"
    assert len(lines) == 4
    assert curve_csv(res.payload) == path.read_text()


def test_csv_refused_for_other_kinds(tmp_path):
    with pytest.raises(ConfigError):
        emit_report(run_experiment(parse_config(SMALL)), tmp_path / "x.csv", "csv")


def test_domain_errors_carry_context():
    c = parse_config("kind: decay-curve\nensemble: {lambda: 0.0}\ngrid: {slices: 4}\nn_trajectories: 10")
    with pytest.raises(ConfigError, match=r"\[decay-curve [0-9a-f]{12}\]"):
        run_experiment(c)


def test_baseline_run():
    p = run_experiment(parse_config("kind: baseline-envariance\nbaseline: {alpha_sq: [0.25, 0.75]}")).payload
    assert p["probabilities"] == ["1/4", "3/4"]
    assert p["born_crosscheck_gap"] <= 1e-12


def test_pw_run():
    p = run_experiment(parse_config("kind: pw-consistency\ngrid: {tau: 0.8}\npw: {random_instances: 5}")).payload
    assert p["max_discrepancy"] <= 1e-10
