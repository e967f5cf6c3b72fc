import json
import subprocess
import sys

import pytest

from modalreg.cli import main
from modalreg.simlab import DgpSpec, sample_dgp


@pytest.fixture(scope="module")
def csv_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "case2.csv"
    sample_dgp(DgpSpec("case2", 600, seed=8)).data.to_csv(path, "y")
    return path


def run(capsys, *args):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def test_fit_outputs_mode_estimate(capsys, csv_path):
    code, out, err = run(capsys, "fit", "--input", csv_path, "--response", "y", "--x", "1,0.5", "--seed", 0)
    assert code == 0
    res = json.loads(out)["results"][0]
    assert set(res) >= {"tau_hat", "mode", "sparsity", "bandwidth", "x"}
    assert res["x"] == [1.0, 0.5]
    assert err.startswith("fit: ") and err.count("\n") == 1


def test_identical_config_identical_bytes(capsys, csv_path, tmp_path):
    args = ["ci", "--input", csv_path, "--x", "1,0.3;1,0.6", "--method", "subsample", "--B", 20,
            "--ell-frac", 0.2]
    run(capsys, *args, "--output", tmp_path / "a.json")
    run(capsys, *args, "--output", tmp_path / "b.json", "--threads", 2)
    a, b = (tmp_path / "a.json").read_bytes(), (tmp_path / "b.json").read_bytes()
    # only the echoed thread count differs
    assert a.replace(b'"threads": 1', b'"threads": 2') == b
    run(capsys, *args, "--output", tmp_path / "c.json")
    assert (tmp_path / "c.json").read_bytes() == a


def test_ci_subsample_echoes_settings(capsys, csv_path):
    code, out, _ = run(capsys, "ci", "--input", csv_path, "--x", "1,0.5", "--method", "subsample",
                       "--ell-frac", 0.2, "--B", 25, "--alpha", 0.05)
    assert code == 0
    res = json.loads(out)["results"][0]
    assert res["method"] == "subsample" and res["metadata"]["B"] == 25
    assert res["metadata"]["ell"] == 120 and res["level"] == pytest.approx(0.95)


def test_ci_analytic_and_simultaneous(capsys, csv_path):
    code, out, _ = run(capsys, "ci", "--input", csv_path, "--x", "1,0.3")
    assert code == 0 and json.loads(out)["results"][0]["method"] == "analytic"
    code, out, _ = run(capsys, "ci", "--input", csv_path, "--x", "1,0.3;1,0.7",
                       "--method", "simultaneous", "--B", 20)
    assert code == 0 and len(json.loads(out)["results"]) == 2


def test_chernoff_quantile(capsys):
    code, out, _ = run(capsys, "chernoff", "--p", 0.975)
    assert code == 0
    assert json.loads(out)["quantiles"]["0.975"] == pytest.approx(0.998181, abs=0.01)


def test_simulate_writes_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--design", "case2", "--n", 200, 400, "--reps", 2,
                       "--eval-points", 50, "--csv", tmp_path / "t.csv")
    assert code == 0
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert len(lines) == 3 and lines[0].startswith("design,n,method")


def test_conformal_synthetic(capsys):
    code, out, _ = run(capsys, "conformal", "--design", "case2", "--n", 1000, "--reps", 3)
    assert code == 0 and json.loads(out)["summary"][0]["reps_used"] == 3


def test_computation_error_exit_1(capsys, csv_path):
    code, out, err = run(capsys, "fit", "--input", csv_path, "--x", "1,0.5", "--epsilon", 0.7)
    assert code == 1 and out == ""
    e = json.loads(err)
    assert e["parameter"] == "epsilon" and e["module"] == "mode_estimator"
    code, _, err = run(capsys, "fit", "--input", csv_path, "--x", "1,0.5", "--response", "nope")
    assert code == 1 and json.loads(err)["module"] == "dataset"
    code, _, err = run(capsys, "fit", "--input", csv_path, "--x", "1,0.5,3")
    assert code == 1 and json.loads(err)["parameter"] == "x"


def test_usage_error_exit_2(capsys, csv_path):
    with pytest.raises(SystemExit) as info:
        main(["fit", "--input", str(csv_path)])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["fit", "--input", str(csv_path), "--x", "1,a"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--experiment", "coverage", "--method", "analytic"])
    assert info.value.code == 2


def test_module_entry_point(csv_path):
    proc = subprocess.run([sys.executable, "-m", "modalreg.cli", "fit", "--input", str(csv_path),
                           "--x", "1,0.5"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["command"] == "fit"
