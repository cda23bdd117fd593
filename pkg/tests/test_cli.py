import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from dressedqnn import data
from dressedqnn.cli import main, parse_run_config
from dressedqnn.hybrid import ConfigError


def write_config(path: Path, **overrides):
    doc = {
        "data": "blobs.csv",
        "seed": 7,
        "train": {"epochs": 8, "batch_size": 16, "learning_rate": 0.05, "qubits": 2, "template": "vqc1"},
        "expressibility": {"samples": 300, "bins": 20},
    }
    doc.update(overrides)
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["gen-data", "--kind", "blobs", "--n", "200", "--seed", "7", "--out", str(d / "blobs.csv")]) == 0
    return d


@pytest.fixture(scope="module")
def trained(workdir):
    cfg = write_config(workdir / "cfg.json")
    assert main(["train", "--config", str(cfg), "--out-dir", str(workdir / "run")]) == 0
    return workdir / "run"


class TestGenData:
    def test_byte_identical(self, tmp_path):
        for name in ("a.csv", "b.csv"):
            assert main(["gen-data", "--kind", "moons", "--n", "50", "--seed", "3", "--out", str(tmp_path / name)]) == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_row_count(self, workdir):
        ds = data.read_csv(workdir / "blobs.csv")
        assert len(ds) == 200 and abs(int(ds.labels.sum()) - 100) <= 1

    def test_too_few(self, tmp_path, capsys):
        assert main(["gen-data", "--n", "5", "--out", str(tmp_path / "x.csv")]) == 2
        assert "--n" in capsys.readouterr().err

    def test_unwritable(self, tmp_path):
        assert main(["gen-data", "--n", "20", "--out", str(tmp_path / "missing" / "x.csv")]) == 3


class TestTrain:
    def test_artifacts(self, trained):
        for name in ("model.json", "history.csv", "eval.json", "roc.csv", "pr.csv", "reliability.csv",
                     "expressibility.json", "expressibility_hist.csv", "report.json"):
            assert (trained / name).exists(), name
        lines = (trained / "history.csv").read_text().splitlines()
        assert lines[0] == "epoch,loss,train_acc,val_acc" and len(lines) == 9
        report = json.loads((trained / "report.json").read_text())
        assert set(report) >= {"acc", "auc", "exp_kl", "qubits"}

    def test_summary_line(self, workdir, capsys):
        cfg = write_config(workdir / "cfg_small.json", train={"epochs": 1, "qubits": 2})
        assert main(["train", "--config", str(cfg), "--out-dir", str(workdir / "small")]) == 0
        out = capsys.readouterr().out
        assert "test accuracy" in out and "test AUC" in out

    def test_config_errors_listed(self, workdir, capsys):
        cfg = write_config(workdir / "bad.json", extra=1, train={"epochs": 1, "lr": 0.1, "qubits": 0})
        assert main(["train", "--config", str(cfg), "--out-dir", str(workdir / "bad")]) == 2
        err = capsys.readouterr().err
        assert "'extra'" in err and "'lr'" in err and "qubits" in err

    def test_batch_size_too_large(self, workdir, capsys):
        cfg = write_config(workdir / "big.json", train={"epochs": 1, "batch_size": 500})
        assert main(["train", "--config", str(cfg), "--out-dir", str(workdir / "big")]) == 2
        assert "batch_size" in capsys.readouterr().err

    def test_missing_data_file(self, workdir):
        cfg = write_config(workdir / "nodata.json", data="absent.csv")
        assert main(["train", "--config", str(cfg), "--out-dir", str(workdir / "nd")]) == 3

    def test_config_snapshot_reproduces_run(self, trained, workdir):
        snap = json.loads((trained / "model.json").read_text())["metadata"]["run_config"]
        snap["data"] = str(Path(snap["data"]).resolve())
        cfg = workdir / "replay.json"
        cfg.write_text(json.dumps(snap))
        assert main(["train", "--config", str(cfg), "--out-dir", str(workdir / "replay")]) == 0
        assert (workdir / "replay" / "history.csv").read_bytes() == (trained / "history.csv").read_bytes()

    def test_seed_override(self, workdir):
        cfg = write_config(workdir / "cfg_seed.json", train={"epochs": 1})
        doc = json.loads(cfg.read_text())
        rc = parse_run_config(doc, workdir, seed_override=99)
        assert rc.seed == 99 and rc.train.seed == 99

    def test_train_seed_key_rejected(self, workdir):
        with pytest.raises(ConfigError, match="top-level"):
            parse_run_config({"data": "x.csv", "train": {"seed": 3}}, workdir)


class TestEval:
    def test_writes_all_files_and_reruns_identically(self, trained, workdir):
        args = ["eval", "--model", str(trained / "model.json"), "--data", str(workdir / "blobs.csv")]
        assert main(args + ["--out-dir", str(workdir / "ev1")]) == 0
        first = {p.name: p.read_bytes() for p in (workdir / "ev1").iterdir()}
        assert set(first) == {"eval.json", "roc.csv", "pr.csv", "reliability.csv"}
        assert main(args + ["--out-dir", str(workdir / "ev1")]) == 0
        assert first == {p.name: p.read_bytes() for p in (workdir / "ev1").iterdir()}
        header = (workdir / "ev1" / "reliability.csv").read_text().splitlines()[0]
        assert header == "mean_pred,frac_pos,count"

    def test_perfect_separation_auc_one(self, trained, workdir):
        ds = data.read_csv(workdir / "blobs.csv")
        far = data.Dataset(np.r_[ds.features[ds.labels == 0][:10] - 3, ds.features[ds.labels == 1][:10] + 3],
                           np.r_[np.zeros(10, int), np.ones(10, int)])
        data.write_csv(far, workdir / "far.csv")
        assert main(["eval", "--model", str(trained / "model.json"), "--data", str(workdir / "far.csv"),
                     "--out-dir", str(workdir / "ev_far")]) == 0
        assert json.loads((workdir / "ev_far" / "eval.json").read_text())["auc"] == 1.0

    def test_dimension_mismatch_names_dims(self, trained, tmp_path, capsys):
        data.write_csv(data.generate("bernoulli_scores", 20, 0), tmp_path / "one.csv")
        assert main(["eval", "--model", str(trained / "model.json"), "--data", str(tmp_path / "one.csv"),
                     "--out-dir", str(tmp_path / "o")]) == 3
        err = capsys.readouterr().err
        assert "1 features" in err and "expects 2" in err

    def test_single_class(self, trained, tmp_path, capsys):
        ds = data.generate("blobs", 40, 0)
        mask = ds.labels == 1
        data.write_csv(data.Dataset(ds.features[mask], ds.labels[mask]), tmp_path / "pos.csv")
        assert main(["eval", "--model", str(trained / "model.json"), "--data", str(tmp_path / "pos.csv"),
                     "--out-dir", str(tmp_path / "o")]) == 3
        assert "negative class" in capsys.readouterr().err


class TestExpressibilityCommand:
    def test_summary_and_repeat(self, tmp_path, capsys):
        args = ["expressibility", "--template", "vqc2", "--qubits", "3", "--layers", "2", "--samples", "300",
                "--bins", "20", "--seed", "4"]
        assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
        line = capsys.readouterr().out.strip().split()
        assert line[:3] == ["vqc2", "3", "2"] and float(line[3]) >= 0
        assert main(args + ["--out-dir", str(tmp_path / "b"), "--threads", "3"]) == 0
        for name in ("expressibility.json", "expressibility_hist.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_too_few_samples(self, tmp_path):
        assert main(["expressibility", "--template", "vqc1", "--samples", "50", "--out-dir", str(tmp_path)]) == 2

    def test_invalid_template(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["expressibility", "--template", "vqc7", "--out-dir", str(tmp_path)])
        assert exc.value.code == 2


class TestDescribe:
    def test_vqc1_slots(self, capsys):
        assert main(["describe-circuit", "--template", "vqc1", "--qubits", "4", "--layers", "1", "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["num_params"] == 8
        assert len({g["angle_slot"] for g in doc["gates"] if g["slot_kind"] == "param"}) == 8

    def test_vqc6_no_entanglers(self, capsys):
        assert main(["describe-circuit", "--template", "vqc6", "--qubits", "3", "--layers", "2", "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert all(g["control"] is None for g in doc["gates"])

    def test_invalid_name(self, capsys):
        assert main(["describe-circuit", "--template", "nope"]) == 2
        assert "vqc1, vqc2, vqc3, vqc4, vqc5, vqc6" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "dressedqnn", "describe-circuit", "--template", "vqc2",
                           "--qubits", "2"], capture_output=True, text=True)
    assert proc.returncode == 0 and "CNOT" in proc.stdout
