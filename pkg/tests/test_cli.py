import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from sigma2lab import __version__
from sigma2lab.cli import run
from sigma2lab.io import read_json, read_table


def _json_out(capsys):
    out = capsys.readouterr().out.strip().splitlines()
    return json.loads(out[-1])


@pytest.fixture(scope="module")
def profile_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "prof.csv"
    assert run(["radial", "--rho", "0", "--epsilon", "1.35", "--out", str(path)]) == 0
    return path


def test_radial_exports_profile_and_sidecar(profile_csv):
    header, data = read_table(profile_csv)
    assert header == ["s", "u", "u_s"]
    s = data[:, 0]
    exact = -0.75 * np.log(np.exp(2 * s) + 1 / 9)
    assert np.max(np.abs(data[:, 1] - exact)) < 1e-9
    side = read_json(profile_csv.with_suffix(".json"))
    assert side["first_integral_residual"] <= 1e-10
    assert side["version"] == __version__
    assert side["config"]["rho"] == 0.0 and side["config"]["epsilon"] == 1.35


def test_radial_nonexistence_exit_1(capsys):
    assert run(["radial", "--rho", "2.5"]) == 1
    rep = _json_out(capsys)
    assert rep["status"] == "fail" and rep["reason"] == "nonexistence"


def test_radial_gauge_violation_exit_1(capsys):
    assert run(["radial", "--rho", "1", "--epsilon", "3"]) == 1
    assert _json_out(capsys)["reason"] == "GaugeError"


def test_mass_scan_profile(profile_csv, tmp_path, capsys):
    out = tmp_path / "mass.csv"
    code = run(["mass-scan", "--profile", str(profile_csv), "--t-grid=-1:-8:15", "--out", str(out)])
    assert code == 0
    assert _json_out(capsys)["result"]["checks"]["rigidity"]["pass"]
    header, data = read_table(out)
    assert header == ["t", "N", "P", "Q", "V", "M", "M_alt", "dM"]
    assert data.shape == (15, 8)
    assert np.max(np.abs(data[:, 5])) < 1e-6
    assert read_json(out.with_suffix(".json"))["config"]["t_grid"] == "-1:-8:15"


def test_mass_scan_supersolution_monotone(profile_csv, capsys):
    code = run(["mass-scan", "--profile", str(profile_csv), "--t-grid=-1,-2,-4,-6", "--f-scale", "0.5"])
    assert code == 0
    assert _json_out(capsys)["result"]["checks"]["monotone"]["pass"]


def test_mass_scan_tolerance_override_reports_failure(profile_csv, capsys):
    # no mass can meet a negative tolerance, so the run must end in an invariant failure
    code = run(["mass-scan", "--profile", str(profile_csv), "--t-grid=-1,-3", "--tol", "-1"])
    assert code == 1
    rep = _json_out(capsys)
    assert rep["status"] == "fail" and "rigidity" in rep["reason"]


def test_pohozaev_profile(profile_csv, tmp_path, capsys):
    out = tmp_path / "poh.json"
    assert run(["pohozaev", "--profile", str(profile_csv), "--R", "1", "--out", str(out)]) == 0
    doc = read_json(out)
    assert doc["rhs"] == pytest.approx(97.13171171332, rel=1e-8)
    assert doc["rel_residual"] < 1e-6
    assert doc["config"]["R"] == 1.0


def test_blowdown_profile(tmp_path, capsys):
    prof = tmp_path / "half.csv"
    assert run(["radial", "--rho", "0.5", "--out", str(prof)]) == 0
    capsys.readouterr()
    out = tmp_path / "bd.csv"
    assert run(["blowdown", "--profile", str(prof), "--t-grid=-2:-12:6", "--out", str(out)]) == 0
    header, data = read_table(out)
    assert header == ["t", "r_min", "r_max", "sup_err", "grad_err"]
    assert np.all(np.diff(data[:, 4]) < 0)
    summary = read_json(out.with_suffix(".json"))
    assert {"alpha_fit", "ratio_max"} <= set(summary)


@pytest.mark.parametrize("args, cone", [
    (["--diag", "1,2,3,4"], "plus"),
    (["--diag=-1,-2,-3,-4"], "minus"),
    (["--diag", "1,-2,0,0"], "none"),
])
def test_cone_check(args, cone, capsys):
    assert run(["cone-check", *args, "--expect", cone]) == 0
    assert _json_out(capsys)["result"]["cone"] == cone


def test_cone_check_expectation_failure(capsys):
    assert run(["cone-check", "--diag", "1,2,3,4", "--expect", "minus"]) == 1
    assert _json_out(capsys)["checks"]["expected_cone"]["value"] == "plus"


def test_field_check_analytic(capsys):
    assert run(["field-check", "--analytic", "quartic", "--points", "20"]) == 0
    res = _json_out(capsys)["result"]
    assert res["checks"]["newton"]["value"] < 1e-8


def test_field_check_profile_roundtrip(profile_csv, tmp_path, capsys):
    blob = tmp_path / "f.bin"
    assert run(["field-check", "--profile", str(profile_csv), "--n", "16", "--half-width", "1.5",
                "--save-field", str(blob)]) == 0
    capsys.readouterr()
    assert run(["field-check", "--field", str(blob), "--rho", "0"]) == 0
    assert _json_out(capsys)["result"]["checks"]["cone_fraction"]["value"] >= 0.999


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[radial]\nrho = 0\nepsilon = 1.35\n")
    out = tmp_path / "p.csv"
    assert run(["radial", "--config", str(cfg), "--out", str(out)]) == 0
    assert read_json(out.with_suffix(".json"))["epsilon"] == 1.35
    assert run(["radial", "--config", str(cfg), "--epsilon", "1", "--out", str(out)]) == 0
    assert read_json(out.with_suffix(".json"))["epsilon"] == 1.0


@pytest.mark.parametrize("argv", [
    ["radial", "--rho", "0", "--bogus", "1"],
    ["nosuch"],
    [],
    ["mass-scan", "--profile", "/nonexistent/prof.csv", "--t-grid=-1,-2"],
    ["mass-scan", "--profile", "x.csv", "--t-grid", "a:b"],
    ["cone-check", "--diag", "1,2"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert run(argv) == 2
    assert capsys.readouterr().err


def test_config_errors_exit_2(tmp_path, capsys):
    bad_key = tmp_path / "a.ini"
    bad_key.write_text("[radial]\nrho = 0\ncolour = red\n")
    garbled = tmp_path / "b.ini"
    garbled.write_text("rho = 0\n")
    assert run(["radial", "--config", str(bad_key)]) == 2
    assert run(["radial", "--config", str(garbled)]) == 2
    assert run(["radial", "--config", str(tmp_path / "missing.ini")]) == 2


def test_outputs_are_deterministic(tmp_path, capsys):
    paths = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        assert run(["radial", "--rho", "0.5", "--out", str(out)]) == 0
        mass = tmp_path / f"mass{k}.csv"
        assert run(["mass-scan", "--profile", str(out), "--t-grid=-1:-6:11", "--out", str(mass)]) == 0
        paths.append((out, mass))
    for a, b in zip(*paths):
        assert a.read_bytes().replace(b"run0", b"") == b.read_bytes().replace(b"run1", b"")
    (p0, m0), (p1, m1) = paths
    j0 = read_json(m0.with_suffix(".json"))
    j1 = read_json(m1.with_suffix(".json"))
    j0["config"].pop("profile"), j1["config"].pop("profile")
    j0["config"].pop("out"), j1["config"].pop("out")
    assert j0 == j1


@pytest.mark.skipif(shutil.which("sigma2lab") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["sigma2lab", "cone-check", "--diag", "1,1,1,1"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["result"]["cone"] == "plus"
    res = subprocess.run([sys.executable, "-m", "sigma2lab.cli", "--version"], capture_output=True, text=True)
    assert __version__ in res.stdout
