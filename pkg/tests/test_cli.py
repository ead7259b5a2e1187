import csv
import json

import numpy as np
import pytest

from nlfisher import cli
from nlfisher.markov import chain_to_json, sample_reversible_chain
from nlfisher.reports import CSV_COLUMNS, VerificationReport, emit_report


@pytest.fixture()
def chains_file(tmp_path):
    rng = np.random.default_rng(0)
    payload = [chain_to_json(sample_reversible_chain(rng, n)) for n in (2, 3, 4)]
    path = tmp_path / "chains.json"
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture()
def cauchy_file(tmp_path):
    path = tmp_path / "cauchy.json"
    path.write_text(json.dumps({"family": "cauchy", "d": 1, "params": {"gamma": 1.0}}))
    return str(path)


def test_constants_command(capsys):
    rc = cli.main(["constants", "--d", "1", "--s", "0.5"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "kernel_constant_vs_integral" in out
    assert "PASS" in out


def test_markov_verify_report(tmp_path, chains_file):
    out = tmp_path / "report.json"
    rc = cli.main(["markov-verify", "--chains", chains_file, "--seed", "42",
                   "--trials", "200", "--out", str(out)])
    assert rc == 0
    rows = json.loads(out.read_text())
    assert rows, "report should not be empty"
    for row in rows:
        assert {"check", "params", "value", "reference",
                "residual_or_slack", "tolerance", "pass"} <= set(row)
        assert row["pass"] is True
    checks = {row["check"] for row in rows}
    assert "hand_value_two_state" in checks
    assert "lifting_inequality_randomized" in checks
    assert "entropy_lifting_inequality" in checks
    assert "averaging_inequality_randomized" in checks


def test_reports_byte_identical(tmp_path, chains_file):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["markov-verify", "--chains", chains_file, "--seed", "7",
            "--trials", "100"]
    assert cli.main(argv + ["--out", str(a)]) == 0
    assert cli.main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_exit_code_reflects_failure(tmp_path, cauchy_file):
    # an impossible tolerance must flip the exit status
    rc = cli.main(["frac-scaling", "--density", cauchy_file, "--c-grid", "2",
                   "--s-grid", "0.6", "--tol", "0"])
    assert rc == cli.EXIT_FAIL
    rc = cli.main(["frac-scaling", "--density", cauchy_file, "--c-grid", "2",
                   "--s-grid", "0.6", "--tol", "0.02"])
    assert rc == cli.EXIT_OK


def test_config_error_exit(tmp_path):
    rc = cli.main(["frac-limit", "--density", str(tmp_path / "missing.json")])
    assert rc == cli.EXIT_CONFIG


def test_frac_limit_sweep_csv(tmp_path, cauchy_file):
    out = tmp_path / "sweep.csv"
    rc = cli.main(["frac-limit", "--density", cauchy_file,
                   "--s-grid", "0.8,0.9,0.95", "--out", str(out),
                   "--format", "csv"])
    assert rc == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["s", "i_s", "quad_err", "i_classical", "deviation",
                       "converged"]
    assert len(rows) == 4
    devs = [float(r[4]) for r in rows[1:]]
    assert devs[0] > devs[1] > devs[2]


def test_dissipation_command(chains_file):
    rc = cli.main(["dissipation", "--random-chains", "5", "--trials", "10",
                   "--seed", "3"])
    assert rc == 0


def test_gamma_verify_command(tmp_path):
    op = tmp_path / "op.json"
    op.write_text(json.dumps({"kind": "laguerre", "alpha": 1.0}))
    rc = cli.main(["gamma-verify", "--operator", str(op), "--seed", "1"])
    assert rc == 0


def test_emit_report_csv_roundtrip(tmp_path):
    value = 0.1234567890123456789
    rec = VerificationReport("demo", {"k": 1}, value, 0.0, value, 1.0, True, 0.01)
    path = tmp_path / "r.csv"
    emit_report([rec], str(path), fmt="csv")
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_COLUMNS
    parsed = float(rows[1][CSV_COLUMNS.index("value")])
    assert parsed == float(f"{value:.17g}")  # 17 significant digits round-trip


def test_emit_report_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], str(tmp_path / "x.json"))


def test_emit_report_linear_size(tmp_path):
    recs = [VerificationReport(f"c{i}", {}, float(i), 0.0, 0.0, 1.0, True)
            for i in range(2000)]
    path = tmp_path / "big.csv"
    emit_report(recs, str(path), fmt="csv")
    with open(path) as fh:
        assert sum(1 for _ in fh) == 2001


def test_timings_flag_adds_column(tmp_path):
    rec = VerificationReport("demo", {}, 1.0, 1.0, 0.0, 1.0, True, 0.25)
    path = tmp_path / "t.csv"
    emit_report([rec], str(path), fmt="csv", timings=True)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    assert header[-1] == "wall_time_s"
