import csv
import json

import pytest
from click.testing import CliRunner

from gpvortex.cli import main, parse_omega

SMALL = ["--eps", "0.2", "--grid-n", "63", "--box-factor", "2", "--restarts", "1"]


def run(*args):
    res = CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)
    return res


def payload(res):
    return json.loads(res.output)


def test_parse_omega():
    assert parse_omega("7.5") == ("absolute", 7.5)
    assert parse_omega("1.5x") == ("multiples", 1.5)


def test_assumptions_harmonic():
    res = run("assumptions")
    assert res.exit_code == 0
    data = payload(res)
    assert isinstance(data, dict) and data


def test_profile_writes_files(tmp_path):
    res = run("profile", "--eps", "0.1", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    data = payload(res)
    assert data["profile"]["eps"] == 0.1
    assert (tmp_path / "profile.csv").exists() and (tmp_path / "profile.json").exists()


def test_aux_reports_omega0(tmp_path):
    res = run("aux", "--eps", "0.1", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert payload(res)["omega0"] == pytest.approx(2.506628, abs=1e-5)
    assert (tmp_path / "aux.csv").exists()


def test_solve2d_then_detect(tmp_path):
    res = run("solve2d", *SMALL, "--omega", "0", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    data = payload(res)
    assert data["counts"] == {"Bulk": 0, "BoundaryLayer": 0, "Exterior": 0}
    assert data["subcritical"]
    for name in ("field.npz", "energy.json", "vortices.json"):
        assert (tmp_path / name).exists(), name
    det = run("detect", tmp_path / "field.npz", "--out", tmp_path / "d")
    assert det.exit_code == 0, det.output
    assert payload(det)["total_charge"] == 0
    assert (tmp_path / "d" / "vortices.json").exists()


def test_solve2d_csv_format(tmp_path):
    res = run("solve2d", *SMALL, "--omega", "0.3x", "--format", "csv", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert payload(res)["omega_ratio"] == pytest.approx(0.3)
    assert (tmp_path / "field.csv").exists()


def test_sweep_no_bisect(tmp_path):
    out = tmp_path / "sw"
    res = run("sweep", *SMALL, "--omega", "0", "--omega", "1", "--no-bisect", "--out", out)
    assert res.exit_code == 0, res.output
    rows = list(csv.DictReader((out / "phase_diagram.csv").open()))
    assert [float(r["omega"]) for r in rows] == [0.0, 1.0]
    assert (out / "sweep_result.json").exists()


def test_check_harmonic(tmp_path):
    res = run("check", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert payload(res)["pass"] is True
    assert json.loads((tmp_path / "check.json").read_text())["pass"] is True


@pytest.mark.parametrize(
    "args",
    [
        ["profile", "--eps", "0.5"],
        ["aux", "--eps", "0.5"],
        ["solve2d", "--eps", "0.5", "--omega", "1"],
        ["sweep", "--eps", "0.5"],
        ["check", "--eps", "0.5"],
        ["profile", "--eps", "0.1", "--potential", "no-such-trap"],
        ["solve2d", *SMALL, "--omega", "5"],
        ["solve2d", "--eps", "0.2", "--grid-n", "15", "--omega", "1"],
        ["sweep", *SMALL, "--omega", "1", "--omega", "1x"],
    ],
)
def test_bad_input_exits_with_usage_error(args, tmp_path):
    res = CliRunner().invoke(main, [*args, "--out", str(tmp_path)])
    assert res.exit_code == 2, res.output
