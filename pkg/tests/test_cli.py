"""End-to-end command-line workflows on a miniature problem: gen, train,
eval, ablate, plus locking and override plumbing."""

import json

import numpy as np
import pytest

from lnpde.cli import CliError, _ablate_matrix, _parse_factors, main
from lnpde.datasets import TrajectoryDataset

TINY_CONFIG = {
    "gen": {
        "kind": "advection",
        "points": [16], "bounds": [[0.0, 1.0]], "periodic": True,
        "t0": 0.0, "dt": 0.05, "steps": 5,
        "n_train": 8, "n_val": 4, "n_test": 4,
        "n_waves": 2, "max_wavenumber": 3,
        "fixed_value": 0.7, "normalize_fields": True, "seed": 11,
    },
    "model": {
        "latent": 3,
        "encoder_filters": [4, 8], "encoder_kernels": [5, 5],
        "decoder_filters": [8, 4], "decoder_kernels": [6, 5],
        "hidden": [16], "stage": 4, "seed": 0,
    },
    "plan": {
        "strategy": 1, "lr0": 0.001, "batch_size": 4,
        "max_epochs": 2, "patience": 100, "seed": 3,
    },
}


@pytest.fixture(scope="module")
def ws(tmp_path_factory):
    """Workspace with a config file and generated tiny data."""
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "config.json"
    cfg.write_text(json.dumps(TINY_CONFIG))
    data = root / "data"
    rc = main(["gen", "--config", str(cfg), "--out", str(data),
               "--workers", "1", "--quiet"])
    assert rc == 0
    return {"root": root, "cfg": str(cfg), "data": str(data)}


@pytest.fixture(scope="module")
def trained(ws, tmp_path_factory):
    run = tmp_path_factory.mktemp("run")
    rc = main(["train", "--config", ws["cfg"], "--data", ws["data"],
               "--out", str(run), "--quiet"])
    assert rc == 0
    return run


# ---------------------------------------------------------------- gen


def test_gen_outputs(ws):
    data = ws["root"] / "data"
    for name in ("train", "val", "test"):
        assert (data / f"{name}.lnpds").exists()
    assert not (data / ".lock").exists()
    ds = TrajectoryDataset.load(data / "train.lnpds")
    assert ds.fields.shape == (8, 6, 1, 16)
    cfg = json.loads((data / "gen_config.json").read_text())
    assert cfg["gen"]["seed"] == 11
    assert cfg["preset"] is None


def test_gen_deterministic_across_worker_counts(ws, tmp_path):
    outs = []
    for name, workers in (("w1", "1"), ("w2", "2")):
        out = tmp_path / name
        rc = main(["gen", "--config", ws["cfg"], "--out", str(out),
                   "--workers", workers, "--quiet"])
        assert rc == 0
        outs.append(out)
    for split in ("train", "val", "test"):
        a = (outs[0] / f"{split}.lnpds").read_bytes()
        b = (outs[1] / f"{split}.lnpds").read_bytes()
        assert a == b, split


def test_gen_refuses_overwrite_without_force(ws, capsys):
    rc = main(["gen", "--config", ws["cfg"], "--out", ws["data"],
               "--workers", "1", "--quiet"])
    assert rc == 1
    assert "refusing to overwrite" in capsys.readouterr().err

    rc = main(["gen", "--config", ws["cfg"], "--out", ws["data"],
               "--workers", "1", "--quiet", "--force"])
    assert rc == 0


def test_gen_flag_overrides(ws, tmp_path):
    out = tmp_path / "small"
    rc = main(["gen", "--config", ws["cfg"], "--out", str(out), "--workers", "1",
               "--n-train", "5", "--steps", "3", "--seed", "2", "--quiet"])
    assert rc == 0
    ds = TrajectoryDataset.load(out / "train.lnpds")
    assert ds.fields.shape == (5, 4, 1, 16)
    cfg = json.loads((out / "gen_config.json").read_text())
    assert cfg["gen"]["n_train"] == 5 and cfg["gen"]["seed"] == 2


def test_gen_needs_a_generator_section(tmp_path, capsys):
    rc = main(["gen", "--preset", "import", "--out", str(tmp_path / "x"), "--quiet"])
    assert rc == 1
    assert "nothing to generate" in capsys.readouterr().err


# ---------------------------------------------------------------- train


def test_train_run_directory(ws, trained):
    for name in ("config.json", "log.csv", "run.json",
                 "checkpoint.lnpde", "best.lnpde"):
        assert (trained / name).exists(), name
    assert not (trained / ".lock").exists()

    lines = (trained / "log.csv").read_text().splitlines()
    assert len(lines) == 3

    summary = json.loads((trained / "run.json").read_text())
    assert summary["epochs_run"] == 2
    assert summary["stopped"] == "max_epochs"

    cfg = json.loads((trained / "config.json").read_text())
    assert cfg["data"] == ws["data"]
    assert cfg["plan"]["max_epochs"] == 2


def test_train_flag_overrides_recorded(ws, tmp_path):
    run = tmp_path / "run"
    rc = main(["train", "--config", ws["cfg"], "--data", ws["data"],
               "--out", str(run), "--epochs", "1", "--seed", "9",
               "--lr", "0.01", "--rk-stage", "2", "--quiet"])
    assert rc == 0
    cfg = json.loads((run / "config.json").read_text())
    assert cfg["plan"]["max_epochs"] == 1
    assert cfg["plan"]["seed"] == 9 and cfg["model"]["seed"] == 9
    assert cfg["plan"]["lr0"] == 0.01
    assert cfg["model"]["stage"] == 2
    assert json.loads((run / "run.json").read_text())["epochs_run"] == 1


def test_train_refuses_to_clobber_run(ws, trained, capsys):
    rc = main(["train", "--config", ws["cfg"], "--data", ws["data"],
               "--out", str(trained), "--quiet"])
    assert rc == 1
    assert "already holds a run" in capsys.readouterr().err


def test_train_resume_extends_log(ws, tmp_path):
    run = tmp_path / "run"
    assert main(["train", "--config", ws["cfg"], "--data", ws["data"],
                 "--out", str(run), "--quiet"]) == 0
    assert main(["train", "--config", ws["cfg"], "--data", ws["data"],
                 "--out", str(run), "--resume", "--epochs", "4", "--quiet"]) == 0
    lines = (run / "log.csv").read_text().splitlines()
    assert len(lines) == 5
    assert json.loads((run / "run.json").read_text())["epochs_run"] == 4


def test_train_reports_progress(ws, tmp_path, capsys):
    run = tmp_path / "run"
    rc = main(["train", "--config", ws["cfg"], "--data", ws["data"],
               "--out", str(run), "--epochs", "1"])
    assert rc == 0
    outp = capsys.readouterr().out
    assert "epoch    1" in outp and "done: best lvl" in outp


def test_train_missing_data(ws, tmp_path, capsys):
    rc = main(["train", "--config", ws["cfg"], "--data", str(tmp_path / "nope"),
               "--out", str(tmp_path / "run"), "--quiet"])
    assert rc == 1
    assert "not found" in capsys.readouterr().err


def test_train_needs_model_and_plan(ws, tmp_path, capsys):
    rc = main(["train", "--data", ws["data"], "--out", str(tmp_path / "r"), "--quiet"])
    assert rc == 1
    assert "needs --preset or a config" in capsys.readouterr().err


def test_stale_lock_blocks_and_reports(ws, tmp_path, capsys):
    out = tmp_path / "locked"
    out.mkdir()
    (out / ".lock").write_text("12345")
    rc = main(["train", "--config", ws["cfg"], "--data", ws["data"],
               "--out", str(out), "--quiet"])
    assert rc == 1
    assert ".lock" in capsys.readouterr().err
    assert (out / ".lock").exists()  # a foreign lock is never removed


# ---------------------------------------------------------------- eval


def test_eval_artifacts(ws, trained, tmp_path):
    out = tmp_path / "eval"
    rc = main(["eval", "--run", str(trained), "--data", ws["data"],
               "--split", "val", "--dt-factors", "1,2", "--out", str(out),
               "--quiet"])
    assert rc == 0
    for name in ("eval.json", "eval_config.json", "eval_summary.csv",
                 "eval_cells_dt1.csv", "eval_cells_dt2.csv",
                 "eval_nrmse_vs_time.svg"):
        assert (out / name).exists(), name
    result = json.loads((out / "eval.json").read_text())
    assert set(result) == {"1", "2"}
    assert result["1"]["dt"] == pytest.approx(0.05)
    assert result["2"]["dt"] == pytest.approx(0.025)
    for block in result.values():
        assert np.isfinite(block["nrmse"])
        assert np.isfinite(block["train_time_nrmse"])


def test_eval_explicit_checkpoint_and_dataset(ws, trained, tmp_path):
    out = tmp_path / "eval"
    rc = main(["eval", "--checkpoint", str(trained / "best.lnpde"),
               "--dataset", ws["data"] + "/val.lnpds",
               "--dt-factors", "1", "--out", str(out), "--quiet"])
    assert rc == 0
    assert (out / "eval.json").exists()


def test_eval_argument_errors(ws, trained, tmp_path, capsys):
    rc = main(["eval", "--data", ws["data"], "--out", str(tmp_path / "a"), "--quiet"])
    assert rc == 1
    assert "needs --run or --checkpoint" in capsys.readouterr().err

    rc = main(["eval", "--run", str(tmp_path / "ghost"), "--data", ws["data"],
               "--out", str(tmp_path / "b"), "--quiet"])
    assert rc == 1
    assert "not found" in capsys.readouterr().err

    rc = main(["eval", "--run", str(trained), "--data", ws["data"],
               "--dt-factors", "0", "--out", str(tmp_path / "c"), "--quiet"])
    assert rc == 1
    assert "positive integers" in capsys.readouterr().err


def test_parse_factors():
    assert _parse_factors("1,5") == [1, 5]
    assert _parse_factors("5") == [5]
    with pytest.raises(CliError):
        _parse_factors("1,x")
    with pytest.raises(CliError):
        _parse_factors("")


# ---------------------------------------------------------------- ablate


def test_ablate_matrix_axes():
    assert [label for label, _ in _ablate_matrix("rk-stage")] == ["q1", "q2", "q3", "q4"]
    assert _ablate_matrix("rk-stage")[0][1] == {"model": {"stage": 1}}
    assert [label for label, _ in _ablate_matrix("l3")] == ["delta0", "delta1"]
    assert _ablate_matrix("l3")[0][1] == {"plan": {"delta": 0.0}}
    with pytest.raises(CliError):
        _ablate_matrix("dropout")


def test_ablate_l3_end_to_end(ws, tmp_path):
    out = tmp_path / "ablate"
    rc = main(["ablate", "--axis", "l3", "--config", ws["cfg"],
               "--data", ws["data"], "--out", str(out),
               "--dt-factors", "1,2", "--epochs", "1", "--quiet"])
    assert rc == 0
    summary = json.loads((out / "ablate.json").read_text())
    assert set(summary) == {"delta0", "delta1"}
    for label in ("delta0", "delta1"):
        assert (out / label / "best.lnpde").exists()
        assert set(summary[label]) >= {"1", "2", "degradation_ratio"}
    lines = (out / "ablate.csv").read_text().splitlines()
    assert lines[0] == "label,factor,t_index,t,nrmse"
    # 2 labels * (5 coarse + 10 refined) rows
    assert len(lines) == 1 + 2 * 15
    assert (out / "ablate.svg").exists()
    assert (out / "ablate_config.json").exists()


# ---------------------------------------------------------------- parser


def test_unknown_command_exits():
    with pytest.raises(SystemExit):
        main(["polish"])
    with pytest.raises(SystemExit):
        main([])
