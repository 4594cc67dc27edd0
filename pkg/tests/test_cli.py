import json
import subprocess
import sys

import pytest

from rrdoe.cli import main
from rrdoe.poll import build_spine_poll, save_poll


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def exp2_model(tmp_path_factory):
    path = tmp_path_factory.mktemp("m") / "exp2.json"
    assert main(["fit", "--data", "fixture:exp2", "--drop-label", "0", "--out", str(path)]) == 0
    return path


def test_design(capsys):
    code, out, _ = run(capsys, "design", "--k", "2", "--scale", "0.5")
    assert code == 0
    assert out.splitlines() == ["std_order,x1,x2", "1,-0.5,-0.5", "2,0.5,-0.5", "3,-0.5,0.5",
                                "4,0.5,0.5"]


def test_design_six_factors_uses_names(capsys):
    _, out, _ = run(capsys, "design")
    assert out.splitlines()[0] == "std_order,truth,depth,alts,weight,pop,answers"
    assert len(out.splitlines()) == 65


def test_simulate(capsys):
    code, out, _ = run(capsys, "simulate", "--truth", "1.0", "--reps", "2")
    assert code == 0
    assert json.loads(out)["mape"] == 0.0


def test_simulate_with_poll_file(capsys, tmp_path):
    poll = tmp_path / "poll.json"
    poll.write_text(save_poll(build_spine_poll(2, 3, 0.4)))
    code, out, _ = run(capsys, "simulate", "--poll", str(poll), "--pop", "500", "--reps", "3")
    assert code == 0
    assert len(json.loads(out)["estimates"]) == 3


def test_run_campaign_and_fit(capsys, tmp_path):
    table = tmp_path / "t.csv"
    assert run(capsys, "run-campaign", "--reps", "1", "--scale", "0.5", "--out", str(table))[0] == 0
    assert len(table.read_text().splitlines()) == 66
    model = tmp_path / "m.json"
    code, out, _ = run(capsys, "fit", "--data", str(table), "--formula", "truth*weight",
                       "--out", str(model))
    assert code == 0 and "(Intercept)" in out
    assert json.loads(model.read_text())["n_obs"] == 65


def test_fit_merges_duplicate_center(capsys):
    code, out, _ = run(capsys, "fit", "--data", "fixture:exp2", "--data", "fixture:validation",
                       "--drop-label", "0")
    assert code == 0
    assert json.loads(out)["n_obs"] == 103


def test_predict(capsys, exp2_model):
    code, out, _ = run(capsys, "predict", "--model", str(exp2_model), "--point", "0,0,0,0,0,0")
    got = json.loads(out)
    assert code == 0
    assert got["value"] == pytest.approx(32.89371, abs=0.001)
    assert got["extrapolation"] is False
    _, out, _ = run(capsys, "predict", "--model", str(exp2_model), "--point", "1,0,0,0,0,0")
    assert json.loads(out)["extrapolation"] is True


def test_validate(capsys, exp2_model, tmp_path):
    out_csv = tmp_path / "v.csv"
    code, out, _ = run(capsys, "validate", "--model", str(exp2_model), "--count", "2",
                       "--reps", "1", "--out", str(out_csv))
    assert code == 0
    assert json.loads(out)["n"] == 4
    assert len(out_csv.read_text().splitlines()) == 5


def test_diagnose(capsys, exp2_model, tmp_path):
    out_dir = tmp_path / "diag"
    code, _, _ = run(capsys, "diagnose", "--model", str(exp2_model),
                     "--samples", "fixture:validation", "--out-dir", str(out_dir))
    assert code == 0
    names = sorted(p.name for p in out_dir.iterdir())
    assert names == sorted([f"{k}.{ext}" for k in ("histogram", "fitted_vs_residual", "qq",
                                                   "pareto") for ext in ("svg", "csv")]
                           + ["summary.json"])
    assert json.loads((out_dir / "summary.json").read_text())["n_residuals"] == 40


def test_refine_from_tables(capsys, tmp_path):
    model = tmp_path / "exp1.json"
    main(["fit", "--data", "fixture:exp1", "--drop-label", "0", "--out", str(model)])
    capsys.readouterr()
    code, out, _ = run(capsys, "refine", "--model", str(model), "--data", "fixture:exp1",
                       "--data", "fixture:exp2")
    assert code == 0
    assert json.loads(out)["action"] == "zoom"


def test_replicate(capsys, tmp_path):
    report = tmp_path / "r.json"
    code, out, _ = run(capsys, "replicate-paper", "--out", str(report))
    assert code == 0
    assert "exp2 prediction at origin" in out
    assert "checks" in json.loads(report.read_text())


def test_error_json(capsys):
    code, _, err = run(capsys, "simulate", "--truth", "0.5", "--pop", "3", "--answers", "0.1")
    assert code == 2
    payload = json.loads(err)
    assert payload["error"] == "DegeneratePopulationError"
    assert "population" in payload["message"]


def test_missing_file_error(capsys, tmp_path):
    code, _, err = run(capsys, "predict", "--model", str(tmp_path / "none.json"), "--point", "0")
    assert code == 2
    assert json.loads(err)["error"] == "FileNotFoundError"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rrdoe", "design", "--k", "1"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.splitlines() == ["std_order,x1", "1,-1", "2,1"]
