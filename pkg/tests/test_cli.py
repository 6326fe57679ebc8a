import json
import shutil
import subprocess

import pytest

from oda.cli import main

QUICK = ["--t-min", "2.0", "--max-obs-per-level", "2000"]


@pytest.fixture()
def blobs_csv(tmp_path):
    path = tmp_path / "blobs.csv"
    assert main(["gen", "blobs", "--n", "300", "--seed", "1", "--out", str(path)]) == 0
    return path


def test_gen_writes_header_and_rows(blobs_csv):
    lines = blobs_csv.read_text().splitlines()
    assert lines[0] == "x0,x1,label" and len(lines) == 301


def test_train_predict_inspect(blobs_csv, tmp_path, capsys):
    model = tmp_path / "m.json"
    report = tmp_path / "r.jsonl"
    trace = tmp_path / "t.csv"
    code = main(["train", "--data", str(blobs_csv), "--out", str(model), "--seed", "2",
                 "--report", str(report), "--trace", str(trace), *QUICK])
    assert code == 0
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary["train_accuracy"] >= 0.9
    assert json.loads(report.read_text().splitlines()[0])["record"] == "run"
    assert trace.read_text().startswith("temperature,")

    preds = tmp_path / "p.csv"
    assert main(["predict", "--model", str(model), "--data", str(blobs_csv),
                 "--out", str(preds)]) == 0
    assert preds.read_text().splitlines()[0] == "label"
    assert len(preds.read_text().splitlines()) == 301

    assert main(["inspect", str(model), "--codebook"]) == 0
    out = capsys.readouterr().out
    assert "K trace:" in out and "kind:        oda" in out


def test_cluster_and_baselines(blobs_csv, tmp_path):
    for algo in ("oda", "kmeans", "batch-da"):
        out = tmp_path / f"{algo}.json"
        args = ["cluster", "--data", str(blobs_csv), "--label-column", "last",
                "--algo", algo, "--out", str(out), *QUICK]
        if algo == "kmeans":
            args += ["--k", "4"]
        assert main(args) == 0, algo
        assert json.loads(out.read_text())["kind"] == algo
    svq = tmp_path / "svq.json"
    assert main(["train", "--data", str(blobs_csv), "--algo", "svq", "--out", str(svq)]) == 0


def test_config_file_and_env_override(blobs_csv, tmp_path, monkeypatch):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"k_max": 7, "t_min": 2.0, "max_obs_per_level": 2000}))
    monkeypatch.setenv("ODA_CONFIG", str(conf))
    model = tmp_path / "m.json"
    assert main(["train", "--data", str(blobs_csv), "--out", str(model)]) == 0
    assert json.loads(model.read_text())["config"]["k_max"] == 7
    # explicit flags win over the file
    assert main(["train", "--data", str(blobs_csv), "--out", str(model), "--k-max", "9"]) == 0
    assert json.loads(model.read_text())["config"]["k_max"] == 9


def test_exit_codes(blobs_csv, tmp_path, monkeypatch):
    monkeypatch.delenv("ODA_CONFIG", raising=False)
    out = str(tmp_path / "m.json")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"gamma": 2.0}))
    assert main(["train", "--data", str(blobs_csv), "--out", out, "--config", str(bad)]) == 2
    assert main(["bench", "--out", str(tmp_path / "b")]) == 2
    assert main(["train", "--data", str(tmp_path / "missing.csv"), "--out", out]) == 3
    text = tmp_path / "text.csv"
    text.write_text("1,2,0\n1,x,1\n")
    assert main(["train", "--data", str(text), "--out", out]) == 3
    # negative coordinates are outside the I-divergence domain
    assert main(["train", "--data", str(blobs_csv), "--out", out,
                 "--divergence", "i-divergence"]) == 3
    assert main(["predict", "--model", str(blobs_csv), "--data", str(blobs_csv)]) == 2


def test_bench_from_env(tmp_path, monkeypatch, capsys):
    conf = tmp_path / "exp.json"
    conf.write_text(json.dumps({"dataset": {"source": "blobs", "n": 200},
                                "folds": 2, "oda": {"t_min": 2.0}}))
    monkeypatch.setenv("ODA_CONFIG", str(conf))
    assert main(["bench", "--out", str(tmp_path / "run")]) == 0
    assert "accuracy:" in capsys.readouterr().out
    assert (tmp_path / "run" / "aggregate.json").exists()


@pytest.mark.skipif(shutil.which("oda") is None, reason="console script not installed")
def test_console_script(tmp_path):
    res = subprocess.run(["oda", "gen", "moons", "--n", "10", "--out", str(tmp_path / "m.csv")],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["n"] == 10
