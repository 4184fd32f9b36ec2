import csv
import json

import numpy as np
import pytest

from maxrobust import cli, synthdata
from maxrobust.errors import DatasetFormatError
from maxrobust.oracle import min_norm


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_gen_defaults_and_determinism(tmp_path):
    assert run("gen", "--out", tmp_path / "a") == 0
    files = sorted((tmp_path / "a" / "data").iterdir())
    assert len(files) == 18
    assert run("gen", "--out", tmp_path / "b") == 0
    for f in files:
        assert f.read_bytes() == (tmp_path / "b" / "data" / f.name).read_bytes()
    ds = synthdata.load(files[0])
    assert ds.d == 64


def test_gen_rejects_empty_dataset(tmp_path, capsys):
    assert run("gen", "--d", 16, "--d-over-n", 100, "--out", tmp_path) == cli.EXIT_DATA
    assert "n=0" in capsys.readouterr().err
    assert not (tmp_path / "data").exists()


def test_usage_errors_exit_one(tmp_path):
    assert run("bogus") == cli.EXIT_USAGE
    assert run("train", "--out", tmp_path) == cli.EXIT_USAGE  # missing --data
    assert run("gen", "--d", "abc") == cli.EXIT_USAGE


def test_config_file_and_validation(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"d": 8, "d_over_n": [2], "seeds": [5]}))
    assert run("gen", "--config", cfg, "--out", tmp_path) == 0
    assert (tmp_path / "data" / "d8_n4_s5.json").exists()
    cfg.write_text(json.dumps({"dd": 3}))
    assert run("gen", "--config", cfg, "--out", tmp_path) == cli.EXIT_DATA
    cfg.write_text(json.dumps({"methods": []}))
    assert run("sweep", "--config", cfg, "--out", tmp_path) == cli.EXIT_DATA


def _trained(tmp_path, method="gd", steps=2000):
    data = tmp_path / "data" / "d16_n4_s0.json"
    synthdata.save(synthdata.generate(16, 4, 0), data)
    assert run("train", "--data", data, "--method", method, "--steps", steps, "--out", tmp_path) == 0
    return data, tmp_path / "runs" / f"d16_n4_s0_{method}.model.json"


def test_train_eval_matches_certificate(tmp_path, capsys):
    data, model = _trained(tmp_path)
    cli.validate_csv(tmp_path / "runs" / "d16_n4_s0_gd.trajectory.csv", "trajectory")
    assert run("eval", "--data", data, "--model", model, "--norm", "l2", "--eps-max", 5,
               "--out", tmp_path) == 0
    summary = json.loads((tmp_path / "eval" / "d16_n4_s0_gd_l2.summary.json").read_text())
    cli.validate_csv(tmp_path / "eval" / "d16_n4_s0_gd_l2.robust.csv", "robust")
    # Attack route and closed-form margin agree to one grid step.
    assert abs(summary["max_eps"] - summary["margin"]) <= summary["grid_step"] + 1e-12
    assert run("oracle", "--data", data, "--norm", "l2", "--out", tmp_path) == 0
    cert = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary["max_eps"] <= cert["implied_max_eps"] + 1e-9
    assert summary["max_eps"] >= 0.95 * cert["implied_max_eps"]


def test_band_attack_reports(tmp_path):
    data, model = _trained(tmp_path, steps=500)
    paths = []
    for eps in (15 / 255, 45 / 255):
        for band in ("low", "high"):
            assert run("attack", "--data", data, "--model", model, "--norm", "fourier_linf",
                       "--eps", eps, "--band", band, "--out", tmp_path) == 0
            paths.append(tmp_path / "attacks" / f"d16_n4_s0_fourier_linf_{band}_eps{eps:g}.csv")
    losses = []
    for p in paths:
        cli.validate_csv(p, "attack")
        with open(p, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4
        assert all(float(r["achieved_norm"]) <= 1 + 1e-9 for r in rows)
        losses.append(np.mean([float(r["loss_after"]) for r in rows]))
    # A larger budget hurts at least as much in each band.
    assert losses[2] >= losses[0] and losses[3] >= losses[1]
    assert losses[2] != losses[0]


def test_attack_needs_budget(tmp_path):
    data, model = _trained(tmp_path, steps=200)
    assert run("attack", "--data", data, "--model", model, "--norm", "l2", "--out", tmp_path) == 2
    assert run("attack", "--data", data, "--model", model, "--norm", "l2", "--band", "low",
               "--out", tmp_path) == 2


def test_oracle_infeasible_writes_report(tmp_path):
    x = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
    data = tmp_path / "xor.json"
    synthdata.save(synthdata.Dataset(x, np.array([1.0, 1.0, -1.0, -1.0])), data)
    assert run("oracle", "--data", data, "--norm", "linf", "--out", tmp_path) == cli.EXIT_DATA
    doc = json.loads((tmp_path / "oracle" / "xor_linf.infeasible.json").read_text())
    assert doc["status"] == "infeasible"
    ray = np.array(doc["ray"])
    # The ray is a nonnegative combination of samples whose signed sum vanishes.
    assert ray.min() >= -1e-12 and ray.sum() > 0
    np.testing.assert_allclose((ray * np.array([1, 1, -1, -1])) @ x, 0.0, atol=1e-9)


def test_missing_file_is_data_error(tmp_path):
    assert run("oracle", "--data", tmp_path / "nope.json", "--norm", "l2") == cli.EXIT_DATA


SWEEP = ["sweep", "--d", 8, "--d-over-n", "1,2", "--seeds", "0,1", "--methods", "gd,cd",
         "--steps", 300, "--eps-max", 3, "--workers", 1]


def test_sweep_schema_and_determinism(tmp_path):
    assert run(*SWEEP, "--out", tmp_path / "a") == 0
    assert run(*SWEEP, "--out", tmp_path / "b", "--workers", 2) == 0
    out = tmp_path / "a" / "sweep"
    assert json.loads((out / "failures.json").read_text()) == []
    for k in ("linf", "l2", "l1"):
        n = cli.validate_csv(out / f"sweep_{k}.csv", "sweep")
        assert n == 2 * 2 * 3  # ratios x seeds x (gd, cd, oracle)
        assert cli.validate_csv(out / f"sweep_{k}_summary.csv", "summary") == 2 * 3
        assert (out / f"sweep_{k}.svg").read_text().startswith("<svg")
        assert (out / f"sweep_{k}.csv").read_bytes() == \
            (tmp_path / "b" / "sweep" / f"sweep_{k}.csv").read_bytes()
    with open(out / "sweep_l2.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        if r["method"] == "oracle":
            ds = synthdata.generate(8, int(8 / float(r["d_over_n"])), int(r["seed"]))
            assert float(r["max_eps"]) == pytest.approx(min_norm(ds, "l2").implied_max_eps)
    assert run("report", out / "sweep_l2.csv") == 0


def test_validate_csv_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("eps,robust_accuracy\n0.1,high\n")
    with pytest.raises(DatasetFormatError):
        cli.validate_csv(p, "robust")
    p.write_text("eps,acc\n0.1,1.0\n")
    with pytest.raises(DatasetFormatError):
        cli.validate_csv(p, "robust")


def test_aggregate_mean_and_stderr():
    rows = [{"d_over_n": 2.0, "method": "gd", "max_eps": v, "margin": v} for v in (1.0, 2.0, 3.0)]
    (s,) = cli.aggregate(rows)
    assert s["mean_max_eps"] == 2.0 and s["count"] == 3
    assert s["err_max_eps"] == pytest.approx(1.0 / np.sqrt(3))
