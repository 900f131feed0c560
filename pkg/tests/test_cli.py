import csv
import io
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from qdiv import cli
from qdiv.opcore import matrix_to_json


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def csv_rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# qdiv ")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


@pytest.fixture
def states(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    a.write_text(json.dumps(matrix_to_json(np.diag([0.5, 0.5]))))
    b.write_text(json.dumps(matrix_to_json(np.diag([0.25, 0.75]))))
    return str(a), str(b)


def test_div_json(capsys, states):
    code, out, _ = run(capsys, "div", "--f", "xlogx", "--rho", states[0], "--gamma", states[1])
    assert code == 0
    body = json.loads(out)
    assert body["value"] == pytest.approx(0.143841036226, abs=1e-12)
    assert body["terms_skipped"] == 0
    assert body["provenance"]["command"] == "div"


def test_div_inline_bloch_and_maximal(capsys):
    code, out, _ = run(
        capsys, "div", "--f", "square", "--type", "maximal", "--rho", '{"bloch": [0, 0, 0.4]}', "--gamma", '{"bloch": [0, 0, 0]}'
    )
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(0.16)


def test_chi2(capsys):
    code, out, _ = run(capsys, "chi2", "--kappa", "max", "--rho", '{"bloch": [0, 0, 0]}', "--X", "[[0.5, 0], [0, -0.5]]")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(1.0)


def test_coeff_fixed_ref_and_schatten(capsys):
    code, out, _ = run(capsys, "coeff", "--estimator", "fixed-ref", "--N", "depolarizing:p=0.3", "--kappa", "bkm", "--mode", "sup")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(0.49)
    code, out, _ = run(capsys, "coeff", "--estimator", "schatten2", "--N", "dephasing:p=0.75", "--M", "dephasing:p=0.5")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(0.5)


def test_coeff_riem_csv(capsys):
    code, out, _ = run(
        capsys, "coeff", "--N", "dephasing:p=0.5", "--M", "dephasing:p=0.25", "--kappa", "max", "--budget", "tiny", "--format", "csv"
    )
    assert code == 0
    rows = csv_rows(out)
    assert float(rows[0]["value"]) >= 0.259259 - 1e-6


def test_certify_primitive_csv(capsys):
    code, out, _ = run(capsys, "certify", "--channel", "depolarizing:p=0.5", "--kappa", "bkm", "--m", "2", "--format", "csv")
    assert code == 0
    rows = csv_rows(out)
    assert set(rows[0]) == {"parameter", "value", "direction", "components"}
    assert float(rows[0]["value"]) == pytest.approx(0.1)


def test_certify_mtoosmall_is_validation_error(capsys):
    code, _, err = run(capsys, "certify", "--channel", "depolarizing:p=0.5", "--kappa", "bkm", "--m", "1")
    assert code == 2 and "error" in err


def test_witness_csv(capsys):
    code, out, _ = run(capsys, "witness", "--channel", "depolarizing:p=0.5", "--f", "xlogx", "--format", "csv")
    assert code == 0
    rows = csv_rows(out)
    ratio = {float(r["parameter"]): float(r["value"]) for r in rows}
    assert ratio[1e-3] < 0.15 * ratio[1e-2]


def test_recover(capsys):
    code, out, _ = run(
        capsys, "recover", "--channel", "dephasing:p=0.3", "--rho", '{"bloch": [0.2, 0.1, 0.3]}', "--gamma", '{"bloch": [0, 0.1, -0.2]}'
    )
    assert code == 0
    assert json.loads(out)["chain_ok"] is True


def test_markov_csv_and_delta(capsys):
    code, out, _ = run(capsys, "markov", "--channel", "depolarizing:p=0.5", "--rho0", '{"bloch": [0, 0, 0.8]}', "--kappa", "bkm", "--n-max", "6", "--format", "csv")
    assert code == 0
    rows = csv_rows(out)
    assert list(rows[0]) == ["n", "dist", "upper", "lower"]
    assert float(rows[3]["dist"]) == pytest.approx(0.8 / 8)
    code, out, _ = run(capsys, "markov", "--channel", "depolarizing:p=0.5", "--rho0", '{"bloch": [0, 0, 0.8]}', "--kappa", "bkm", "--n-max", "3", "--delta", "0.01")
    assert code == 0 and json.loads(out)["t_mix_bound"] == 8


def test_suite_lower_bounds(capsys):
    code, out, _ = run(capsys, "suite", "--name", "lower_bounds", "--budget", "tiny")
    assert code == 0
    rows = csv_rows(out)
    assert all(r["ok"] == "True" for r in rows)


def test_suite_equality(capsys):
    code, out, _ = run(capsys, "suite", "--name", "equality", "--budget", "small")
    assert code == 0
    rows = csv_rows(out)
    assert len(rows) == 5 and all(float(r["gap"]) <= 1e-3 for r in rows)


def test_suite_inequivalence_reports_failure(capsys):
    # the BKM column falls short of the 5x gap, so the suite exits 1
    code, out, _ = run(capsys, "suite", "--name", "inequivalence", "--budget", "tiny", "--alphas", "0.05,0.4")
    assert code == 1
    col = {(r["kappa"], float(r["alpha"])): float(r["normalized"]) for r in csv_rows(out)}
    assert col[("min", 0.05)] == pytest.approx(1, abs=1e-4) and col[("min", 0.4)] == pytest.approx(1, abs=1e-4)
    assert col[("max", 0.05)] > 5 * col[("max", 0.4)]


def test_validation_errors_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, "div", "--f", "xlogx", "--rho", "{not json", "--gamma", "[[1,0],[0,0]]")
    assert code == 2 and "rho" in err
    code, _, err = run(capsys, "coeff", "--N", '{"kind": "dephasing", "q": 0.1}', "--kappa", "max")
    assert code == 2 and "'q'" in err
    code, _, err = run(capsys, "div", "--f", "xlogx", "--rho", "[[0.5,0],[0,0.5]]")
    assert code == 2 and "--gamma" in err
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"f": "xlogx", "colour": "red"}))
    code, _, err = run(capsys, "div", "--config", str(cfg))
    assert code == 2 and "colour" in err
    code, _, err = run(capsys, "div", "--f", "xlogx", "--rho", "[[1,0],[0,0]]", "--gamma", "[[0.5,0],[0,0.5]]")
    assert code == 2 and "support" in err


def test_config_file(capsys, tmp_path, states):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "div", "f": "xlogx", "rho": states[0], "gamma": states[1]}))
    code, out, _ = run(capsys, "div", "--config", str(cfg))
    assert code == 0 and json.loads(out)["value"] == pytest.approx(0.143841, abs=1e-6)


def test_rerun_is_byte_identical(capsys, tmp_path, monkeypatch):
    argv = ["coeff", "--estimator", "div", "--N", "amplitude_damping:g=0.5", "--M", "amplitude_damping:g=0.25", "--f", "xlogx", "--budget", "tiny", "--seed", "4"]
    outs = []
    for i, threads in enumerate(("1", "4")):
        monkeypatch.setenv("QDIV_THREADS", threads)
        path = tmp_path / f"out{i}.json"
        assert cli.main(argv + ["--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_twelve_significant_digits(capsys, states):
    _, out, _ = run(capsys, "div", "--f", "xlogx", "--rho", states[0], "--gamma", states[1], "--format", "csv")
    value = csv_rows(out)[0]["value"]
    assert len(value.replace(".", "").lstrip("0")) <= 12


@pytest.mark.skipif(shutil.which("qdiv") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["qdiv", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("qdiv ")


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "qdiv.cli", "chi2", "--kappa", "min", "--rho", '{"bloch":[0,0,0]}', "--X", "[[0.5,0],[0,-0.5]]"],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0 and json.loads(res.stdout)["value"] == pytest.approx(1.0)
