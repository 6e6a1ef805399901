import csv
import io
import json
import math
import subprocess
import sys

import pytest

from softwall.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# -- delta ------------------------------------------------------------------------------------

def test_delta_alpha_one_table(capsys):
    code, out, _ = run(capsys, "delta", "--alpha", "1", "--p-min", "0.1", "--p-max", "6", "--p-steps", "60")
    assert code == 0
    table = rows(out)
    assert list(table[0]) == ["p", "delta_exact", "delta_small", "delta_large"]
    d = [float(r["delta_exact"]) for r in table]
    assert all(b > a for a, b in zip(d, d[1:]))
    first = table[0]
    assert float(first["p"]) == 0.1
    assert float(first["delta_exact"]) / 0.1 == pytest.approx(1.37172, rel=1e-2)


def test_delta_alpha_two_large_column(capsys):
    code, out, _ = run(capsys, "delta", "--alpha", "2", "--p-min", "1", "--p-max", "3", "--p-steps", "3")
    assert code == 0
    row = [r for r in rows(out) if float(r["p"]) == 2.0][0]
    assert float(row["delta_large"]) == pytest.approx(3.92699, abs=1e-5)


def test_delta_json(capsys):
    code, out, _ = run(capsys, "delta", "--p-steps", "3", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert isinstance(data, list) and len(data) == 3
    assert set(data[0]) == {"p", "delta_exact", "delta_small", "delta_large"}


# -- profile ----------------------------------------------------------------------------------

def test_profile_dirichlet(capsys):
    code, out, _ = run(capsys, "profile", "--dirichlet", "1", "--z-min", "-4", "--z-max", "-2", "--z-steps", "3")
    assert code == 0
    table = rows(out)
    assert list(table[0]) == ["z", "tbar_ren", "err", "hardwall_at_c"]
    row = [r for r in table if float(r["z"]) == -2.0][0]
    assert float(row["tbar_ren"]) == pytest.approx(1 / (72 * math.pi**2), rel=1e-2)


def test_profile_soft_wall_row(capsys):
    code, out, _ = run(capsys, "profile", "--alpha", "1", "--z-min", "-4", "--z-max", "-3", "--z-steps", "2")
    assert code == 0
    row = [r for r in rows(out) if float(r["z"]) == -4.0][0]
    t, h = float(row["tbar_ren"]), float(row["hardwall_at_c"])
    assert abs(t - h) / h < 0.05


def test_profile_offset_reports_failure(capsys):
    code, out, err = run(capsys, "profile", "--offset", "1", "0.5", "--z-min", "-3", "--z-max", "-2", "--z-steps", "2")
    assert code == 1
    assert [float(r["err"]) for r in rows(out)] == [-1.0, -1.0]
    assert json.loads(err.strip().splitlines()[-1])["error"]


@pytest.mark.parametrize(
    "extra",
    [("--z-min", "-2", "--z-max", "-2"), ("--z-min", "-2", "--z-max", "-4"), ("--z-steps", "1"),
     ("--z-min", "-1", "--z-max", "0.5")],
)
def test_profile_bad_range_is_usage_error(capsys, extra):
    code, _, err = run(capsys, "profile", "--dirichlet", "1", *extra)
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "UsageError"


# -- classify ---------------------------------------------------------------------------------

def test_classify_rows(capsys):
    code, out, _ = run(capsys, "classify", "--rho-min", "0.5", "--rho-max", "2", "--rho-steps", "4",
                       "--T-min", "2", "--T-max", "4", "--T-steps", "5")
    assert code == 0
    table = rows(out)
    assert list(table[0]) == ["rho", "T", "count", "t_star_or_blank"]
    look = {(float(r["rho"]), float(r["T"])): r for r in table}
    assert look[(0.5, 4.0)]["count"] == "Zero"
    assert look[(0.5, 4.0)]["t_star_or_blank"] == ""
    assert look[(2.0, 3.5)]["count"] == "Two"
    assert float(look[(2.0, 3.5)]["t_star_or_blank"]) == pytest.approx(3.8264459, abs=1e-7)


def test_classify_tangent_row(capsys, tmp_path):
    # T = pi itself cannot be spelled on the command line, so place it through the grid ends
    code, out, _ = run(capsys, "classify", "--rho-min", "1", "--rho-max", "1", "--rho-steps", "1",
                       "--T-min", repr(math.pi), "--T-max", repr(math.pi), "--T-steps", "1")
    assert code == 0
    assert rows(out)[0]["count"] == "Tangent"


# -- pathology and counterterm --------------------------------------------------------------

def test_pathology_csv_and_classification(capsys):
    code, out, err = run(capsys, "pathology", "--offset", "1", str(math.pi / 4), "--z-sum", "-2")
    assert code == 0
    assert list(rows(out)[0]) == ["s", "tbar", "s_times_tbar"]
    assert "DivergentAs1OverS" in err


def test_pathology_json(capsys):
    code, out, _ = run(capsys, "pathology", "--offset", "1", "0", "--format", "json")
    assert code == 0
    rep = json.loads(out)
    assert rep["classification"] == "Convergent"


def test_counterterm(capsys):
    code, out, _ = run(capsys, "counterterm", "--v", "1", "--lap-v", "0", "--t", "1,0.5")
    assert code == 0
    table = rows(out)
    assert float(table[0]["log_coefficient"]) == pytest.approx(1 / (32 * math.pi**2), rel=1e-8)
    assert float(table[1]["t4_term"]) == pytest.approx(16 * float(table[0]["t4_term"]), rel=1e-8)


def test_counterterm_rejects_nonpositive_t(capsys):
    assert run(capsys, "counterterm", "--t", "0")[0] == 2


# -- check ------------------------------------------------------------------------------------

def test_check_passes_and_is_seed_stable(capsys):
    verdicts = []
    for seed in range(5):
        code, out, _ = run(capsys, "check", "--suites", "specfun,semiclassical", "--seed", str(seed))
        rep = json.loads(out)
        assert code == 0 and rep["failed"] == 0
        verdicts.append([(d["name"], d["passed"]) for d in rep["details"]])
    assert all(v == verdicts[0] for v in verdicts)


def test_check_corrupted_tolerance_fails(capsys):
    code, out, _ = run(capsys, "check", "--suites", "specfun", "--tol-scale", "0")
    assert code == 1
    assert json.loads(out)["failed"] > 0


def test_check_unknown_suite(capsys):
    assert run(capsys, "check", "--suites", "nope")[0] == 2


# -- plumbing ---------------------------------------------------------------------------------

def test_usage_errors(capsys):
    assert run(capsys)[0] == 2
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "delta", "--format", "xml")[0] == 2
    assert run(capsys, "delta", "--alpha", "0.5")[0] == 2
    assert run(capsys, "profile", "--s-ladder", "0.1,0.2")[0] == 2
    assert run(capsys, "delta", "--config", "/nonexistent/file.cfg")[0] == 2


def test_help_exits_zero(capsys):
    assert run(capsys, "--help")[0] == 0


def test_csv_round_trip(capsys):
    _, out, _ = run(capsys, "delta", "--p-steps", "7")
    for r in rows(out):
        for v in r.values():
            assert format(float(v), ".9g") == v


def test_out_file_lf_and_identical(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["classify", "--rho-steps", "6", "--T-steps", "6"]
    assert run(capsys, *argv, "--out", str(a))[0] == 0
    assert run(capsys, *argv, "--out", str(b))[0] == 0
    data = a.read_bytes()
    assert data == b.read_bytes()
    assert b"\r" not in data and data.endswith(b"\n")


def test_repeated_runs_byte_identical():
    argv = [sys.executable, "-m", "softwall", "profile", "--alpha", "1", "--z-min", "-5", "--z-max", "-3",
            "--z-steps", "3"]
    first = subprocess.run(argv, capture_output=True, check=True).stdout
    second = subprocess.run(argv, capture_output=True, check=True,
                            env={**__import__("os").environ, "SOFTWALL_THREADS": "3"}).stdout
    assert first == second


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# profile settings\nalpha = 2\np-steps = 4\np-min = 1\np-max = 2\n")
    _, out, _ = run(capsys, "delta", "--config", str(cfg))
    table = rows(out)
    assert len(table) == 4
    assert float(table[-1]["delta_large"]) == pytest.approx(3.92699, abs=1e-5)
    _, out, _ = run(capsys, "delta", "--config", str(cfg), "--p-steps", "2")
    assert len(rows(out)) == 2


def test_module_entry_point_exit_code():
    r = subprocess.run([sys.executable, "-m", "softwall", "profile", "--z-steps", "1"], capture_output=True)
    assert r.returncode == 2
