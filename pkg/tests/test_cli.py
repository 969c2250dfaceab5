import json

import pandas as pd
import pytest

from cli import EXIT_ERROR, EXIT_NEGATIVE, EXIT_OK, main
from core.benchmarks import example3_data
from core.files import load_dataset, save_dataset


def _run(tmp_path, name, *argv):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def _json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_check_example3(tmp_path):
    code, out = _run(tmp_path, "check.json", "check", "--preset", "example3")
    assert code == EXIT_OK
    report = _json(out)
    assert report["informative"] is True
    assert report["bounded"] is True
    assert report["classification"] == "Intermediate"
    assert report["seed"] == 0


def test_check_rank_deficient_dataset(tmp_path):
    data = save_dataset(tmp_path / "short.json", example3_data().truncated(2))
    noise = tmp_path / "noise.json"
    noise.write_text(json.dumps({"kind": "norm_bound", "eps": 1.0}))
    code, out = _run(tmp_path, "check.json", "check", "--dataset", str(data), "--noise", str(noise))
    assert code == EXIT_NEGATIVE
    report = _json(out)
    assert report["classification"] == "ExtremelyFragile"
    assert report["warnings"]


def test_optimal_data_gain(tmp_path):
    code, out = _run(tmp_path, "frag.json", "fragility", "--mode", "data-opt", "--preset", "example3",
                     "--samples", "200")
    assert code == EXIT_OK
    report = _json(out)
    assert report["lambda"] == pytest.approx(0.087, abs=0.003)
    assert report["classification"] == "Intermediate"


def test_report_feeds_verify(tmp_path):
    code, frag = _run(tmp_path, "frag.json", "fragility", "--mode", "model-opt", "--preset", "example2",
                      "--samples", "100")
    assert code == EXIT_OK
    code, out = _run(tmp_path, "verify.json", "verify", "--preset", "example2", "--gain", str(frag),
                     "--samples", "200")
    assert code == EXIT_OK
    report = _json(out)
    assert report["target"] == "model"
    assert report["passed"] is True


def test_data_report_is_verified_on_consistent_systems(tmp_path):
    gain = tmp_path / "k.json"
    gain.write_text(json.dumps({"K": [[-1.35, -1.7]]}))
    code, frag = _run(tmp_path, "frag.json", "fragility", "--mode", "data-k", "--preset", "example3",
                      "--gain", str(gain), "--samples", "100")
    assert code == EXIT_OK
    assert _json(frag)["kind"] == "DataGivenK"
    code, out = _run(tmp_path, "verify.json", "verify", "--preset", "example3", "--gain", str(frag),
                     "--samples", "200")
    assert code == EXIT_OK
    report = _json(out)
    assert report["target"] == "data"
    assert report["passed"] is True


def test_verify_target_selection(tmp_path):
    gain = tmp_path / "k.json"
    gain.write_text(json.dumps({"K": [[-1.0, -1.0]]}))
    common = ["verify", "--preset", "example3", "--gain", str(gain), "--samples", "50"]
    # a plain gain file with data available samples Sigma_D
    code, out = _run(tmp_path, "default.json", *common, "--lambda", "0.01")
    assert _json(out)["target"] == "data"
    code, out = _run(tmp_path, "model.json", *common, "--lambda", "0.3", "--target", "model")
    assert code == EXIT_OK
    report = _json(out)
    assert report["target"] == "model"
    assert report["lambda"] == 0.3


def test_design_then_membership(tmp_path):
    code, design = _run(tmp_path, "design.json", "design", "--preset", "example3")
    assert code == EXIT_OK
    assert _json(design)["source"] == "ReducedLMI"
    code, out = _run(tmp_path, "member.json", "design", "--preset", "example3", "--gain", str(design))
    assert code == EXIT_OK
    assert _json(out)["method"] == "membership"


def test_simulate_reproduces_recorded_data(tmp_path):
    recorded = example3_data()
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"T": 4, "x0": [0.0, 0.0],
                                "input": {"kind": "explicit", "u": recorded.u.tolist()},
                                "disturbance": {"kind": "explicit", "w": recorded.w.tolist()}}))
    noise = tmp_path / "noise.json"
    noise.write_text(json.dumps({"kind": "norm_bound", "eps": 1.0}))
    code, out = _run(tmp_path, "sim.csv", "simulate", "--preset", "example2", "--spec", str(spec),
                     "--noise", str(noise))
    assert code == EXIT_OK
    data = load_dataset(out)
    assert data.x.tolist() == recorded.x.tolist()


def test_simulate_rejects_bound_violation(tmp_path):
    system = tmp_path / "sys.json"
    system.write_text(json.dumps({"A": [[0.5]], "B": [[1.0]]}))
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"T": 4, "x0": [0.0], "input": {"kind": "gaussian"},
                                "disturbance": {"kind": "explicit", "w": [[2.0], [0.0], [0.0], [0.0]]}}))
    noise = tmp_path / "noise.json"
    noise.write_text(json.dumps({"kind": "norm_bound", "eps": 1.0}))
    code, out = _run(tmp_path, "sim.json", "simulate", "--system", str(system), "--spec", str(spec),
                     "--noise", str(noise))
    assert code == EXIT_NEGATIVE
    assert not out.exists()


def test_usage_errors_exit_with_one(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["fragility", "--preset", "example2"])      # --mode missing
    assert exc.value.code == EXIT_ERROR
    with pytest.raises(SystemExit) as exc:
        main(["fragility", "--mode", "model-k", "--preset", "example2"])      # --gain missing
    assert exc.value.code == EXIT_ERROR


def test_bad_input_file_exits_with_one(tmp_path):
    broken = tmp_path / "sys.json"
    broken.write_text("{not json")
    assert main(["fragility", "--mode", "model-opt", "--system", str(broken)]) == EXIT_ERROR


def test_contour_csv(tmp_path):
    code, out = _run(tmp_path, "grid.csv", "contour", "--mode", "model", "--preset", "example2",
                     "--grid", "-0.8:-0.6:2,-1.4:-1.2:2", "--workers", "1")
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["k1", "k2", "lambda"]
    assert len(frame) == 4
    assert (frame["lambda"] > 0).all()


def test_contour_needs_two_steps(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["contour", "--mode", "model", "--preset", "example2", "--grid", "0:1:1,0:1:2"])
    assert exc.value.code == EXIT_ERROR


def test_same_seed_gives_identical_reports(tmp_path):
    argv = ["fragility", "--mode", "model-k", "--preset", "example2", "--samples", "100", "--seed", "3"]
    gain = tmp_path / "k.json"
    gain.write_text(json.dumps({"K": [[-1.0, -1.0]]}))
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    assert main([*argv, "--gain", str(gain), "--out", str(first)]) == EXIT_OK
    assert main([*argv, "--gain", str(gain), "--out", str(second)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_workbook_and_pdf_outputs(tmp_path):
    pdf = tmp_path / "report.pdf"
    code, out = _run(tmp_path, "report.xlsx", "check", "--preset", "example3", "--pdf", str(pdf))
    assert code == EXIT_OK
    assert out.stat().st_size > 0
    assert pdf.read_bytes().startswith(b"%PDF")


def test_mu_bracket_in_report_and_pdf(tmp_path):
    gain = tmp_path / "k.json"
    gain.write_text(json.dumps({"K": [[-1.0, -1.0]]}))
    pdf = tmp_path / "mu.pdf"
    code, out = _run(tmp_path, "mu.json", "fragility", "--mode", "model-k", "--preset", "example2",
                     "--gain", str(gain), "--samples", "100", "--mu", "--pdf", str(pdf))
    assert code == EXIT_OK
    report = _json(out)
    # 64 m n random directions plus +-B^T
    assert report["mu"]["directions"] == 64 * 1 * 2 + 2
    assert report["lambda"] <= report["mu"]["rho_hi"] + 5e-3
    assert pdf.read_bytes().startswith(b"%PDF")
