import json
import subprocess
import sys

import numpy as np
import pytest

from robustsym import cli
from robustsym.errors import EigenSolverError
from robustsym.io import write_matrix


@pytest.fixture
def files(tmp_path):
    mats = {
        "H": np.diag([0.0, 0.0, 1.0]),
        "V": np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0.0]]),
        "Sz": np.diag([1.0, -1.0, 1.0]),
        "Sx": np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1.0]]),
        "I": np.eye(3),
        "J": np.diag([1.0, -1.0, 0.0]),
        "bad": np.array([[0, 1, 0], [0, 0, 0], [0, 0, 1.0]]),
        "perm": np.roll(np.eye(3), 1, axis=0),
    }
    out = {}
    for name, M in mats.items():
        out[name] = str(tmp_path / f"{name}.json")
        write_matrix(out[name], M)
    return out


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_fragile_exit_and_lower_bound(capsys, files):
    code, out, _ = run(capsys, "--json", "classify", files["H"], files["V"], files["Sz"])
    assert code == 3
    report = json.loads(out)
    assert report["verdict"]["status"] == "fragile"
    assert report["verdict"]["witness"]["lower_bound"] == pytest.approx(2.0)
    assert set(report["inputs"]) == {"H", "V", "S"}


def test_identity_is_robust(capsys, files):
    code, _, _ = run(capsys, "classify", files["H"], files["V"], files["I"])
    assert code == 0


def test_non_hermitian_input_reports_location(capsys, files):
    code, _, err = run(capsys, "classify", files["bad"], files["V"], files["I"])
    assert code == 1 and "row" in err and "column" in err


def test_not_a_symmetry_is_input_error(capsys, files):
    code, _, err = run(capsys, "classify", files["H"], files["V"], files["perm"])
    assert code == 1 and "S and H do not commute" in err


def test_usage_error_exit_code(capsys, files):
    with pytest.raises(SystemExit) as info:
        cli.main(["classify", files["H"]])
    assert info.value.code == 1


def test_numeric_failure_exit_code(capsys, files, monkeypatch):
    def boom(*a, **k):
        raise EigenSolverError("did not converge")
    monkeypatch.setattr(cli, "classify", boom)
    code, _, err = run(capsys, "classify", files["H"], files["V"], files["I"])
    assert code == 2 and "numeric" in err


def test_classify_sweep(capsys, files):
    code, out, _ = run(capsys, "--json", "classify", files["H"], files["V"], files["Sz"],
                       "--eps-sweep", "1e-1,1e-2,1e-3")
    rows = json.loads(out)["sweep"]["rows"]
    assert code == 3 and all(r["lower"] >= 1.9 for r in rows)


def test_flags_after_subcommand(capsys, files):
    code, out, _ = run(capsys, "classify", files["H"], files["V"], files["I"], "--json", "--seed", "7")
    assert code == 0 and json.loads(out)["seed"] == 7


def test_quiet(capsys, files):
    code, out, _ = run(capsys, "--quiet", "classify", files["H"], files["V"], files["Sz"])
    assert code == 3 and out == ""


def test_commutant_and_bicommutant(capsys, files):
    code, out, _ = run(capsys, "--json", "commutant", files["H"])
    assert code == 0 and json.loads(out)["algebra"]["dimension"] == 5
    code, out, _ = run(capsys, "--json", "bicommutant", files["H"], "--basis")
    report = json.loads(out)
    assert report["algebra"]["dimension"] == 2 and len(report["algebra"]["basis"]) == 2


def test_kato(capsys, files):
    code, out, _ = run(capsys, "--json", "kato", files["H"], files["V"], "--eps", "0.1,0.4")
    report = json.loads(out)
    assert code == 0 and report["family"]["slopes"] == [-1.0, 1.0, 0.0]
    assert report["unitary"][0]["unitarity_residual"] <= 1e-10
    assert any("eps_safe" in w for w in report["warnings"])


def test_wander(capsys, files):
    code, out, _ = run(capsys, "--json", "wander", files["H"], files["V"], files["Sx"], "--eps", "1e-2")
    row = json.loads(out)["estimates"][0]
    assert code == 0 and row["lower"] <= row["finite_dim_bound"]


def test_adiabatic(capsys, files):
    code, out, _ = run(capsys, "--json", "adiabatic", files["H"], files["V"], files["Sx"])
    report = json.loads(out)
    assert code == 0 and all(r["commutator_residual"] <= 1e-7 for r in report["invariants"])
    code, _, _ = run(capsys, "adiabatic", files["H"], files["V"], files["Sz"])
    assert code == 3


def test_restricted(capsys, files):
    code, out, _ = run(capsys, "--json", "restricted", files["H"], files["J"], "--samples", "10")
    report = json.loads(out)
    assert code == 0 and report["result"]["matches"] and report["result"]["dimension"] == 3


def test_scenario_alpha(capsys):
    code, out, _ = run(capsys, "--json", "scenario", "oscillator-alpha", "--param", "alpha=2")
    report = json.loads(out)
    assert code == 0
    assert report["integral"]["c_alpha"] == pytest.approx(1.2417834708617967, abs=1e-8)


def test_scenario_degenerate_diag(capsys):
    code, out, _ = run(capsys, "--json", "scenario", "degenerate-diag")
    report = json.loads(out)
    assert code == 0
    assert report["symmetries"]["sign0"]["status"] == "fragile"
    assert report["symmetries"]["flip0"]["status"] == "robust"
    assert report["symmetries"]["P0"]["status"] == "robust"


def test_scenario_oscillator(capsys):
    code, out, _ = run(capsys, "--json", "scenario", "oscillator")
    assert code == 0 and all(json.loads(out)["checks"].values())


def test_unknown_scenario_lists_names(capsys):
    code, _, err = run(capsys, "scenario", "nope")
    assert code == 1 and "degenerate-diag" in err and "oscillator-alpha" in err


def test_unknown_param(capsys):
    code, _, err = run(capsys, "scenario", "oscillator", "--param", "foo=1")
    assert code == 1 and "foo" in err


def test_text_output(capsys, files):
    code, out, _ = run(capsys, "classify", files["H"], files["V"], files["Sz"])
    assert "verdict.status: fragile" in out


def test_console_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "robustsym.cli", "--json", "classify",
                           files["H"], files["V"], files["I"]], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["verdict"]["status"] == "robust"
