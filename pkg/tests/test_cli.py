from __future__ import annotations

import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from tbeuler.cli import main

from conftest import DATA, GOLDEN, unit

GOLDEN_RUNS = {
    "analyze_continuous.txt": ["analyze", "continuous"],
    "analyze_continuous.csv": ["analyze", "continuous", "--format", "csv"],
    "analyze_discrete_m100.txt": ["analyze", "discrete", "--m", "100"],
    "nf_check.txt": ["nf", "check"],
    "simulate_m10.csv": ["simulate", "--m", "10", "--alpha", "0.005,-0.05", "--steps", "40", "--format", "csv"],
    "figure1_m100_lines.csv": ["figure1", "--m", "100", "--no-detect"],
    "detect_hopf_m100.csv": ["detect", "hopf", "--m", "100", "--alpha2", "-0.05", "--format", "csv"],
}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name", sorted(GOLDEN_RUNS))
def test_golden_outputs(capsys, name):
    code, out, _ = run(capsys, *GOLDEN_RUNS[name])
    assert code == 0
    assert out == (GOLDEN / name).read_text()
    code, again, _ = run(capsys, *GOLDEN_RUNS[name])
    assert again == out


def _kv(text):
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["key", "value"]
    return dict(rows[1:])


def _vec(text):
    return np.array([float(x) for x in text.strip("[]").split(",")])


def test_continuous_report_lines(capsys):
    _, out, _ = run(capsys, "analyze", "continuous", "--format", "csv")
    kv = _kv(out)
    assert np.allclose(_vec(kv["l_h.coeffs"]), unit([4 / 3, 2 / 3]), atol=1e-12)
    assert np.allclose(_vec(kv["l_inf.coeffs"]), unit([26 / 21, 16 / 21]), atol=1e-12)


def test_discrete_report_lines(capsys):
    _, out, _ = run(capsys, "analyze", "discrete", "--m", "100", "--format", "csv")
    kv = _kv(out)
    assert np.allclose(_vec(kv["l_h_eps.coeffs"]), unit([4 / 3 + 0.02, 2 / 3 - 0.02]), atol=1e-12)
    assert np.allclose(_vec(kv["l_inf_eps.coeffs"]), unit([26 / 21 + 1 / 70, 16 / 21 - 1 / 70]), atol=1e-12)
    assert kv["nu"] == "2" and kv["resonance.passed"] == "true"
    assert "engine.gap" in kv


def test_csv_shapes(capsys, tmp_path):
    out_file = tmp_path / "f1.csv"
    gap_file = tmp_path / "gap.csv"
    code, out, _ = run(capsys, "figure1", "--m", "25,50,100,200", "--no-detect",
                       "--out", str(out_file), "--gap-out", str(gap_file))
    assert code == 0 and out == ""
    rows = list(csv.reader(out_file.open()))
    assert rows[0] == ["series", "m", "alpha1", "alpha2"]
    assert {len(r) for r in rows} == {4}
    gaps = list(csv.reader(gap_file.open()))
    assert gaps[0] == ["m", "eps", "gap_l_h", "gap_l_inf"] and len(gaps) == 5
    g = np.array([[float(x) for x in r] for r in gaps[1:]])
    assert np.all(np.diff(g[:, 2]) < 0)


def test_figure1_six_series(capsys):
    code, out, _ = run(capsys, "figure1", "--m", "100", "--alpha2", "-0.05")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))[1:]
    series = {r[0] for r in rows}
    assert series == {"l_h", "l_inf", "l_h_eps", "l_inf_eps", "ns_detected", "homoclinic_detected"}
    det = {r[0]: float(r[2]) for r in rows if r[0].endswith("detected")}
    assert abs(det["homoclinic_detected"] - 0.0308) < 0.1 * 0.0308


def test_phase_text_and_csv(capsys):
    code, out, _ = run(capsys, "phase", "--m", "100", "--alpha", "0.005,-0.05")
    assert code == 0 and "Focus" in out
    code, out, _ = run(capsys, "phase", "--m", "100", "--alpha", "0.0308,-0.05", "--steps", "2000", "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "k,t,z_1,dz_1" and len(lines) == 2001


def test_diverged_run_is_not_fatal(capsys):
    code, out, err = run(capsys, "simulate", "--m", "10", "--alpha", "0.05,-0.05", "--steps", "50000")
    assert code == 0 and "Diverged" in out


def test_model_file_option(capsys):
    code, out, _ = run(capsys, "analyze", "continuous", "--model", str(DATA / "synthetic_b.model"))
    assert code == 0 and "synthetic_b (n=2)" in out


@pytest.mark.parametrize("argv", [
    ["simulate", "--alpha", "0.1", "--steps", "5"],
    ["phase", "--alpha", "0.1,-0.1", "--steps", "0"],
    ["figure1", "--m", ""],
    ["analyze", "discrete", "--m", "1"],
    ["analyze", "discrete", "--m", "10,20"],
    ["analyze", "continuous", "--model", "/nonexistent/model.txt"],
    ["analyze", "sideways"],
    ["detect", "hopf", "--bracket", "0.1"],
])
def test_input_errors_exit_1(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == 1


def test_malformed_model_reports_line(capsys, tmp_path):
    p = tmp_path / "bad.model"
    p.write_text("n=1\nterm 1 1 1 0 0 0\nterm 1 oops 0 1 0 0\n")
    code, _, err = run(capsys, "analyze", "continuous", "--model", str(p))
    assert code == 1 and "line 3" in err


def test_not_tb_exit_2(capsys, tmp_path):
    p = tmp_path / "hyperbolic.model"
    p.write_text("n=1\nterm 1 -2 1 0 0 0\nterm 1 1 0 1 0 0\nterm 1 1 1 1 0 0\n")
    code, _, err = run(capsys, "analyze", "continuous", "--model", str(p))
    assert code == 2 and "Takens-Bogdanov" in err


def test_no_sign_change_exit_3(capsys):
    code, _, err = run(capsys, "detect", "hopf", "--m", "100", "--alpha2", "-0.05", "--bracket", "0.1,0.2")
    assert code == 3 and "bracket" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "tbeuler", "nf", "check"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout == (GOLDEN / "nf_check.txt").read_text()
