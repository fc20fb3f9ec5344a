"""Command line interface: exit codes, outputs, config handling, and
byte-level determinism."""
import json
import shutil
import subprocess

import numpy as np
import pytest

from ratioloss.cli import main


def read_header(path):
    with open(path) as fh:
        return fh.readline().strip().split(",")


def test_no_command_is_a_usage_error():
    assert main([]) == 1
    assert main(["no-such-command"]) == 1


def test_help_exits_cleanly():
    assert main(["--help"]) == 0
    assert main(["fit", "--help"]) == 0


def test_loss_show_outputs(tmp_path):
    out = tmp_path / "ls"
    assert main(["loss-show", "--family", "kulsif", "--out", str(out)]) == 0
    assert read_header(out / "loss.csv") == [
        "yhat", "ell_pos", "ell_neg", "eta_hat", "beta_hat",
        "slack_lower", "slack_upper"]
    rows = np.loadtxt(out / "loss.csv", delimiter=",", skiprows=1)
    assert rows.shape == (101, 7)
    # identity map: yhat column equals beta_hat column
    assert np.array_equal(rows[:, 0], rows[:, 4])
    doc = json.loads((out / "loss.json").read_text())
    assert doc["family"] == "kulsif" and doc["n"] == 101


def test_loss_show_rejects_bad_range(tmp_path):
    assert main(["loss-show", "--family", "lr", "--beta-lo", "2",
                 "--beta-hi", "1", "--out", str(tmp_path / "x")]) == 1


def test_missing_required_option(tmp_path):
    assert main(["loss-show", "--out", str(tmp_path / "x")]) == 1


def test_fit_eval_roundtrip(tmp_path):
    fit_dir = tmp_path / "fit"
    code = main(["fit", "--family", "kulsif", "--solver", "closed-form",
                 "--alpha", "0.01", "--n", "12", "--m", "12",
                 "--out", str(fit_dir)])
    assert code == 0
    model = json.loads((fit_dir / "model.json").read_text())
    assert set(model) >= {"family", "alpha", "kernel", "centers", "coeffs"}
    assert len(model["coeffs"]) == 24
    metrics = json.loads((fit_dir / "metrics.json").read_text())
    assert metrics["status"] == "closed_form"

    ev_dir = tmp_path / "ev"
    code = main(["eval", "--model", str(fit_dir / "model.json"),
                 "--pair", "piecewise", "--out", str(ev_dir)])
    assert code == 0
    assert read_header(ev_dir / "predictions.csv") == ["x0", "beta_hat",
                                                       "beta_exact"]
    ev = json.loads((ev_dir / "eval.json").read_text())
    assert ev["n_points"] == 401
    assert ev["sup_abs_error"] >= 0.0


def test_fit_accepts_data_files(tmp_path):
    rng = np.random.default_rng(0)
    p_file, q_file = tmp_path / "p.csv", tmp_path / "q.csv"
    np.savetxt(p_file, rng.uniform(0.0, 1.0, 15), delimiter=",")
    np.savetxt(q_file, rng.uniform(-1.0, 1.0, 15), delimiter=",")
    out = tmp_path / "fit"
    assert main(["fit", "--family", "kulsif", "--solver", "closed-form",
                 "--data-p", str(p_file), "--data-q", str(q_file),
                 "--out", str(out)]) == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["n"] == 15 and metrics["m"] == 15
    # one file without the other is an error
    assert main(["fit", "--family", "kulsif", "--data-p", str(p_file),
                 "--out", str(out)]) == 1


def test_fit_with_cross_validated_alpha(tmp_path):
    out = tmp_path / "cv"
    code = main(["fit", "--family", "kulsif", "--solver", "closed-form",
                 "--alpha", "cv", "--cv-alphas", "10,0.001", "--folds", "2",
                 "--n", "10", "--m", "10", "--max-iter", "80",
                 "--out", str(out)])
    assert code == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["alpha"] in (10.0, 0.001)
    assert len(metrics["cv_table"]) == 2


def test_config_file_with_cli_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "family": "kulsif", "solver": "closed-form", "alpha": 0.1,
        "n": 5, "m": 6, "out": str(tmp_path / "from-config")}))
    assert main(["fit", "--config", str(cfg), "--n", "7"]) == 0
    metrics = json.loads(
        (tmp_path / "from-config" / "metrics.json").read_text())
    assert metrics["n"] == 7 and metrics["m"] == 6


def test_unknown_config_key_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"family": "kulsif", "bandwidth": 2.0}))
    assert main(["fit", "--config", str(cfg),
                 "--out", str(tmp_path / "x")]) == 1


def test_eval_model_file_errors(tmp_path):
    assert main(["eval", "--model", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "x")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"family": "kulsif"}))
    assert main(["eval", "--model", str(bad),
                 "--out", str(tmp_path / "y")]) == 1


def test_closed_form_requires_kulsif(tmp_path):
    assert main(["fit", "--family", "lr", "--solver", "closed-form",
                 "--out", str(tmp_path / "x")]) == 1


def test_check_command(tmp_path, capsys):
    out = tmp_path / "chk"
    assert main(["check", "--out", str(out)]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l]
    assert len(lines) == 7
    assert all(l.startswith("[PASS]") for l in lines)
    report = json.loads((out / "check_report.json").read_text())
    assert report["passed"] is True


def test_fig_commands_reduced(tmp_path):
    f1 = tmp_path / "f1"
    assert main(["fig1", "--quad-nodes", "201", "--max-iter", "150",
                 "--grid-n", "101", "--out", str(f1)]) == 0
    summary = json.loads((f1 / "fig1_summary.json").read_text())
    assert sorted(summary["ranking"]) == sorted(
        ["lr", "kulsif", "poly1", "poly6", "ew"])
    assert read_header(f1 / "fig1_curves.csv")[:2] == ["x", "beta"]

    f2 = tmp_path / "f2"
    assert main(["fig2", "--sizes", "10", "--alphas", "0.01",
                 "--n-seeds", "2", "--grid-n", "21", "--max-iter", "40",
                 "--out", str(f2)]) == 0
    header = read_header(f2 / "fig2_curves.csv")
    assert "betahat_kulsif_n10_a0.01" in header
    assert "betahat_ew_n10_a0.01" in header

    f3 = tmp_path / "f3"
    assert main(["fig3", "--n-src", "50", "--n-tgt", "50",
                 "--quad-nodes", "201", "--l2-nodes", "501",
                 "--max-iter", "150", "--grid-n", "101",
                 "--out", str(f3)]) == 0
    summary = json.loads((f3 / "fig3_summary.json").read_text())
    assert set(summary["l2p_sq"]) == {"uniform", "exact", "ew", "lr"}


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["loss-show", "--family", "ew", "--out", str(out)]) == 0
        assert main(["fit", "--family", "kulsif", "--solver", "closed-form",
                     "--n", "10", "--m", "10", "--out", str(out / "fit")]) == 0
    assert (a / "loss.csv").read_bytes() == (b / "loss.csv").read_bytes()
    assert ((a / "fit" / "model.json").read_bytes()
            == (b / "fit" / "model.json").read_bytes())


def test_console_script_installed():
    exe = shutil.which("ratioloss")
    assert exe is not None
    proc = subprocess.run([exe], capture_output=True)
    assert proc.returncode == 1
