from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from gmvshrink.cli import main, parse_c_grid
from gmvshrink.errors import ConfigurationError
from gmvshrink.io import read_csv_body, read_returns_csv


def _write_returns(path, Y, dates=True):
    p, T = Y.shape
    lines = [("date," if dates else "") + ",".join(f"A{i}" for i in range(p))]
    for t in range(T):
        row = ",".join(repr(float(x)) for x in Y[:, t])
        lines.append((f"2020-01-{t + 1:02d}," if dates else "") + row)
    path.write_text("\n".join(lines) + "\n")
    return path


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_estimate_isotropic_toy(tmp_path, capsys):
    Y = np.random.default_rng(0).normal(0, 0.01, size=(2, 10))
    f = _write_returns(tmp_path / "r.csv", Y)
    code, out, _ = _run(["estimate", f, "--output-dir", tmp_path / "o"], capsys)
    assert code == 0
    doc = json.loads((tmp_path / "o" / "estimate.json").read_text())
    assert np.allclose(doc["weights"], 0.5, atol=0.25)
    assert doc["regime"] == "sub-critical" and doc["c_ratio"] == 0.2
    assert doc["meta"]["seed"] == "none"
    assert set(json.loads(out)) == {"alpha_hat", "r_hat_b", "c_ratio", "regime"}
    meta, header, rows = read_csv_body(tmp_path / "o" / "weights.csv")
    assert header == ["asset", "weight", "traditional", "target"] and len(rows) == 2
    assert {"version", "seed", "config_hash"} <= set(meta)


def test_estimate_custom_target_is_convex_combination(tmp_path, capsys):
    Y = np.random.default_rng(1).normal(size=(3, 30))
    f = _write_returns(tmp_path / "r.csv", Y, dates=False)
    code, _, _ = _run(["estimate", f, "--target", "0.2,0.3,0.5", "--output-dir", tmp_path], capsys)
    assert code == 0
    doc = json.loads((tmp_path / "estimate.json").read_text())
    a = doc["alpha_hat"]
    expected = a * np.array(doc["traditional"]) + (1 - a) * np.array([0.2, 0.3, 0.5])
    assert np.allclose(doc["weights"], expected, atol=1e-12)
    assert abs(sum(doc["weights"]) - 1) < 1e-10


def test_estimate_bad_target(tmp_path, capsys):
    f = _write_returns(tmp_path / "r.csv", np.random.default_rng(2).normal(size=(3, 30)))
    code, _, err = _run(["estimate", f, "--target", "0.5,0.5", "--output-dir", tmp_path], capsys)
    assert code == 2 and json.loads(err)["error"] == "ConfigurationError"
    code, _, _ = _run(["estimate", f, "--target", "0.5,0.5,0.5", "--output-dir", tmp_path], capsys)
    assert code == 2


def test_missing_cell_names_row_and_column(tmp_path, capsys):
    f = tmp_path / "bad.csv"
    f.write_text("date,AAA,BBB\n2020-01-01,0.01,0.02\n2020-01-02,,0.01\n2020-01-03,0.0,0.01\n")
    code, _, err = _run(["estimate", f, "--output-dir", tmp_path], capsys)
    assert code == 3
    msg = json.loads(err)
    assert msg["exit_code"] == 3 and "row 3" in msg["message"] and "AAA" in msg["message"]


def test_read_returns_csv_variants(tmp_path):
    f = tmp_path / "r.csv"
    f.write_text("X,Y\n1,2\n3,4\n\n5,6\n")
    assets, dates, Y = read_returns_csv(f)
    assert assets == ["X", "Y"] and dates is None
    assert Y.tolist() == [[1, 3, 5], [2, 4, 6]]
    f.write_text("X,Y\n1,abc\n3,4\n")
    with pytest.raises(Exception, match="non-numeric"):
        read_returns_csv(f)


def test_degenerate_exit_code(tmp_path, capsys):
    f = _write_returns(tmp_path / "c.csv", np.full((3, 10), 0.01))
    code, _, err = _run(["estimate", f, "--output-dir", tmp_path], capsys)
    assert code == 4 and json.loads(err)["error"] == "DegenerateError"


SIM = ["simulate", "--scenario", "bounded_spectrum", "--c", "0.5", "--p-schedule", "9x18",
       "--repetitions", "7"]


def test_simulate_outputs_and_byte_identical_reruns(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(SIM + ["--seed", 11, "--output-dir", a], capsys)[0] == 0
    assert _run(SIM + ["--seed", 11, "--output-dir", b, "--threads", 3], capsys)[0] == 0
    for name in ("losses_p9_n18.csv", "ecdf_p9_n18.csv", "summary.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    meta, header, rows = read_csv_body(a / "losses_p9_n18.csv")
    assert meta["seed"] == "11" and header == ["estimator", "repetition", "relative_loss"]
    per_est = {}
    for est, _, _ in rows:
        per_est[est] = per_est.get(est, 0) + 1
    assert set(per_est.values()) == {7} and len(per_est) == 4
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["command"] == "simulate" and manifest["seed"] == 11


def test_simulate_config_file(tmp_path, capsys):
    cfg = tmp_path / "sim.yaml"
    cfg.write_text("scenario: bounded_spectrum\nc_target: 1.8\np_schedule: [[18, 10]]\n"
                   "repetitions: 3\nestimators: [traditional, bona_fide]\nseed: 5\n")
    code, out, _ = _run(["simulate", "--config", cfg, "--output-dir", tmp_path], capsys)
    assert code == 0 and "bona_fide" in out
    assert (tmp_path / "losses_p18_n10.csv").exists()


def test_simulate_requires_seed_and_valid_p(tmp_path, capsys):
    code, _, err = _run(SIM + ["--output-dir", tmp_path], capsys)
    assert code == 2 and "seed" in json.loads(err)["message"]
    bad = ["simulate", "--p-schedule", "10x20", "--c", "0.5", "--seed", 1, "--output-dir", tmp_path]
    code, _, err = _run(bad, capsys)
    assert code == 2 and "divisible" in json.loads(err)["message"]
    code, _, _ = _run(SIM[:-2] + ["--repetitions", 2, "--distribution", "cauchy", "--seed", 1], capsys)
    assert code == 2


def test_backtest_command(tmp_path, capsys):
    Y = np.random.default_rng(3).normal(0.0005, 0.01, size=(12, 40))
    f = _write_returns(tmp_path / "r.csv", Y)
    argv = ["backtest", f, "--window-n", 20, "--portfolio-p", 5, "--num-portfolios", 4,
            "--seed", 3, "--output-dir", tmp_path / "o"]
    assert _run(argv, capsys)[0] == 0
    meta, header, rows = read_csv_body(tmp_path / "o" / "oos_variance.csv")
    assert header == ["estimator", "draw_index", "value"] and len(rows) == 12
    assert meta["oos_first_date"] == "2020-01-21" and meta["oos_last_date"] == "2020-01-40"
    for name in ("oos_sharpe.csv", "ecdf_oos_variance.csv", "ecdf_oos_sharpe.csv", "draws.csv"):
        assert (tmp_path / "o" / name).exists()
    argv[argv.index("--portfolio-p") + 1] = 25
    code, _, err = _run(argv, capsys)
    assert code == 2 and "Frahm-Memmel" in json.loads(err)["message"]


def test_curves_values(tmp_path, capsys):
    code, out, _ = _run(["curves", "--c-grid", "0.1,0.5,0.9", "--r-b", 1, "--output-dir", tmp_path], capsys)
    assert code == 0
    _, header, rows = read_csv_body(tmp_path / "curves.csv")
    assert header == ["c", "alpha", "rel_loss_traditional", "rel_loss_gse", "variance_ratio"]
    assert np.allclose([float(r[2]) for r in rows], [1 / 9, 1, 9], rtol=1e-12)
    _run(["curves", "--c-grid", "2", "--output-dir", tmp_path], capsys)
    _, _, rows = read_csv_body(tmp_path / "curves.csv")
    assert float(rows[0][1]) == pytest.approx(0.25)


def test_curves_rejects_c_one(tmp_path, capsys):
    code, _, err = _run(["curves", "--c-grid", "0.5,1,2", "--output-dir", tmp_path], capsys)
    assert code == 2 and "c = 1" in json.loads(err)["message"]


def test_parse_c_grid_ranges():
    assert parse_c_grid("0.1:0.5:5") == pytest.approx([0.1, 0.2, 0.3, 0.4, 0.5])
    with pytest.raises(ConfigurationError):
        parse_c_grid("a,b")
    with pytest.raises(ConfigurationError):
        parse_c_grid("-1")


def test_console_script_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "gmvshrink.cli", "curves", "--c-grid", "1", "--output-dir", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert res.returncode == 2
    assert json.loads(res.stderr)["exit_code"] == 2
