"""Exit criteria for the package, one test per criterion.

Each test times itself against its runtime budget and records a PASS/FAIL
line that pytest prints in an "acceptance criteria" summary section.
"""
import contextlib
import json
import math
import time

import numpy as np
import pytest

from dressedqnn import _pykernels, circuits, data, hybrid, metrics, qstate
from dressedqnn.circuits import BoundCircuit, builtin_template, custom_template
from dressedqnn.cli import main
from dressedqnn.expressibility import REFERENCE_FLOOR, expressibility_score, haar_fidelity_pdf_bin, sample_fidelities
from dressedqnn.gradients import finite_difference_jacobian, parameter_shift_jacobian
from dressedqnn.qstate import GateKind, GateOp, apply_gate, init_zero

from oracles import central_difference, full_matrix
from oracles import pairwise_auc as brute_auc

# Locked after the oracle run on blobs(n=200, seed=7), 80/10/10 split, 2-qubit
# vqc1, Adam lr=0.01, batch 16, 100 epochs: final train_acc 1.0, best-checkpoint
# test accuracy 1.0 (seeds 0-5 gave train 1.0 and test 0.90-1.0).
E2E_SEED = 7
E2E_MIN_TRAIN_ACC = 0.95
E2E_MIN_TEST_ACC = 0.90


@contextlib.contextmanager
def criterion(log, number, title, budget_s):
    start = time.perf_counter()
    status = "FAIL"
    try:
        yield
        elapsed = time.perf_counter() - start
        assert elapsed < budget_s, f"runtime {elapsed:.1f}s exceeds {budget_s}s"
        status = "PASS"
    finally:
        elapsed = time.perf_counter() - start
        line = f"[{status}] criterion {number}: {title} ({elapsed:.1f}s / {budget_s}s, backend={qstate.BACKEND})"
        log.append(line)
        print(line)


def _random_sequence(rng, n, length):
    kinds = [k for k in GateKind if n > 1 or not k.is_two_qubit]
    seq = []
    for _ in range(length):
        kind = kinds[rng.integers(len(kinds))]
        target = int(rng.integers(n))
        control = int(rng.choice([q for q in range(n) if q != target])) if kind.is_two_qubit else None
        angle = float(rng.uniform(-2 * np.pi, 2 * np.pi)) if kind.is_rotation else None
        seq.append((GateOp(kind, target, control=control, angle_slot=0 if angle is not None else None), angle))
    return seq


def test_criterion_1_simulator(acceptance_log):
    rng = np.random.default_rng(1)
    with criterion(acceptance_log, 1, "simulator agrees with Kronecker oracle, norm drift <= 1e-12", 10):
        for kern in (qstate.kernels, _pykernels):
            saved = (qstate.kernels, circuits.kernels)
            qstate.kernels = circuits.kernels = kern
            try:
                for trial in range(100):
                    n = 1 + trial % 4
                    state = init_zero(n)
                    ref = state.amplitudes.copy()
                    for gate, angle in _random_sequence(rng, n, 30):
                        state = apply_gate(state, gate, angle)
                        ref = full_matrix(gate.kind.value, n, gate.target, gate.control, angle) @ ref
                        assert np.max(np.abs(state.amplitudes - ref)) <= 1e-12
                for n in (1, 2, 3, 4):
                    state = init_zero(n)
                    for gate, angle in _random_sequence(rng, n, 200):
                        state = apply_gate(state, gate, angle)
                    assert abs(state.norm_squared() - 1) <= 1e-12
            finally:
                qstate.kernels, circuits.kernels = saved


def test_criterion_2_gradients(acceptance_log):
    rng = np.random.default_rng(2)
    with criterion(acceptance_log, 2, "parameter-shift vs finite differences (1e-6 circuit, 1e-5 hybrid)", 60):
        worst = 0.0
        for trial in range(20):
            name = circuits.FAMILIES[trial % len(circuits.FAMILIES)]
            n = 2 + trial % 3
            layers = 1 + (trial // 3) % 3
            tpl = builtin_template(name, n, layers)
            b = BoundCircuit(tpl, rng.uniform(0, 2 * np.pi, tpl.num_params), rng.uniform(-1.5, 1.5, n))
            ps, fd = parameter_shift_jacobian(b), finite_difference_jacobian(b, h=1e-5)
            worst = max(worst, np.max(np.abs(ps.by_param - fd.by_param)), np.max(np.abs(ps.by_input - fd.by_input)))
        assert worst <= 1e-6, worst

        worst = 0.0
        for trial in range(10):
            cfg = hybrid.TrainConfig(qubits=2, template=("vqc1", "vqc3", "vqc4")[trial % 3], layers=1 + trial % 2)
            model = hybrid.HybridModel.create(3, cfg)
            model.set_flat(rng.normal(0, 0.8, model.get_flat().size))
            x = rng.normal(size=3)
            y = int(rng.integers(2))

            def loss(vec):
                m = model.copy()
                m.set_flat(vec)
                return hybrid.cross_entropy_loss(hybrid.forward(m, x), y)

            analytic = hybrid.backward(model, x, y).flat()
            numeric = central_difference(loss, model.get_flat(), h=1e-5)
            worst = max(worst, np.max(np.abs(analytic - numeric)))
        assert worst <= 1e-5, worst


def test_criterion_3_expressibility(acceptance_log):
    with criterion(acceptance_log, 3, "expressibility: degenerate KL, Haar mean fidelity, vqc1 < vqc6 on 5/5 seeds", 300):
        fixed = custom_template("fixed", 4, [GateOp("H", 0), GateOp("CNOT", 1, control=0)])
        rep = expressibility_score(fixed, 1000, 75, seed=0)
        q_last = haar_fidelity_pdf_bin(74, 75, 16)
        assert rep.histogram[-1] == 1.0
        # q_last = 75**-15 for 16 amplitudes, below the 1e-12 reference floor
        assert abs(rep.kl_score - math.log(1.0 / max(q_last, REFERENCE_FLOOR))) <= 1e-12
        two = expressibility_score(custom_template("fixed2", 2, [GateOp("H", 0)]), 1000, 75, seed=0)
        assert abs(two.kl_score - math.log(1.0 / haar_fidelity_pdf_bin(74, 75, 4))) <= 1e-12

        fid = sample_fidelities(builtin_template("vqc1", 4, 3), 5000, seed=2024)
        se = fid.std(ddof=1) / math.sqrt(fid.size)
        assert abs(fid.mean() - 1 / 16) <= 3 * se, (fid.mean(), se)

        wins = 0
        for seed in range(5):
            kl1 = expressibility_score(builtin_template("vqc1", 4, 3), 5000, 75, seed=seed).kl_score
            kl6 = expressibility_score(builtin_template("vqc6", 4, 3), 5000, 75, seed=seed).kl_score
            wins += kl1 < kl6
        assert wins == 5


def test_criterion_4_metrics(acceptance_log):
    rng = np.random.default_rng(4)
    with criterion(acceptance_log, 4, "metrics: trapezoid AUC == pairwise, PR hand example, calibrated bins", 30):
        for trial in range(50):
            n = int(rng.integers(2, 501))
            s = rng.uniform(size=n)
            if trial % 2:
                s = s.round(2)
            y = rng.integers(0, 2, n)
            y[0], y[1] = 0, 1
            _, auc = metrics.roc_curve(s, y)
            assert abs(auc - brute_auc(s, y)) <= 1e-12

        pts = metrics.pr_curve([0.9, 0.8, 0.7], [1, 0, 1])
        for (r, p), (er, ep) in zip(pts, [(0.5, 1.0), (0.5, 0.5), (1.0, 2 / 3)]):
            assert abs(r - er) <= 1e-15 and abs(p - ep) <= 1e-15

        s = rng.uniform(size=10_000)
        y = (rng.uniform(size=10_000) < s).astype(int)
        for mean, frac, _ in metrics.reliability_curve(s, y, 10):
            assert abs(frac - mean) <= 0.05


def test_criterion_5_end_to_end_learning(acceptance_log):
    with criterion(acceptance_log, 5, f"blobs: train acc >= {E2E_MIN_TRAIN_ACC}, test acc >= {E2E_MIN_TEST_ACC}", 300):
        ds = data.split_dataset(data.generate("blobs", 200, E2E_SEED), (0.8, 0.1, 0.1), seed=E2E_SEED)
        cfg = hybrid.TrainConfig(epochs=100, batch_size=16, learning_rate=0.01, optimizer="adam",
                                 qubits=2, template="vqc1", layers=1, seed=E2E_SEED)
        result = hybrid.train(hybrid.HybridModel.create(2, cfg), ds, cfg)
        test = ds.subset("test")
        test_acc = metrics.accuracy(hybrid.predict_scores(result.model, test.features), test.labels)
        print(f"final train_acc={result.history[-1]['train_acc']:.4f} test_acc={test_acc:.4f}")
        assert result.history[-1]["train_acc"] >= E2E_MIN_TRAIN_ACC
        assert test_acc >= E2E_MIN_TEST_ACC


def _tree(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


def test_criterion_6_determinism(acceptance_log, tmp_path):
    with criterion(acceptance_log, 6, "train/expressibility byte-identical across reruns and --threads 1 vs 4", 300):
        assert main(["gen-data", "--kind", "moons", "--n", "120", "--seed", "3", "--out", str(tmp_path / "d.csv")]) == 0
        (tmp_path / "cfg.json").write_text(json.dumps({
            "data": "d.csv", "seed": 3,
            "train": {"epochs": 15, "batch_size": 12, "learning_rate": 0.02, "qubits": 3,
                      "template": "vqc3", "layers": 2},
            "expressibility": {"samples": 1000, "bins": 40},
        }))
        runs = []
        for tag, threads in (("a", 1), ("b", 1), ("c", 4)):
            out = tmp_path / f"train_{tag}"
            assert main(["train", "--config", str(tmp_path / "cfg.json"), "--out-dir", str(out),
                         "--threads", str(threads)]) == 0
            runs.append(_tree(out))
        assert runs[0] == runs[1] == runs[2]

        runs = []
        for tag, threads in (("a", 1), ("b", 1), ("c", 4)):
            out = tmp_path / f"exp_{tag}"
            assert main(["expressibility", "--template", "vqc1", "--qubits", "4", "--layers", "2",
                         "--seed", "11", "--out-dir", str(out), "--threads", str(threads)]) == 0
            runs.append(_tree(out))
        assert runs[0] == runs[1] == runs[2]


def test_criterion_7_full_pipeline(acceptance_log, tmp_path, capsys):
    with criterion(acceptance_log, 7, "CLI pipeline: split -> pre-net -> VQC -> softmax -> table row + 3 curve CSVs", 300):
        assert main(["gen-data", "--kind", "blobs", "--n", "200", "--seed", str(E2E_SEED),
                     "--out", str(tmp_path / "blobs.csv")]) == 0
        (tmp_path / "cfg.json").write_text(json.dumps({
            "data": "blobs.csv", "seed": E2E_SEED, "split": [0.8, 0.1, 0.1],
            "train": {"epochs": 100, "batch_size": 16, "learning_rate": 0.01, "optimizer": "adam",
                      "qubits": 2, "template": "vqc1", "layers": 1},
        }))
        assert main(["train", "--config", str(tmp_path / "cfg.json"), "--out-dir", str(tmp_path / "run")]) == 0
        out = capsys.readouterr().out
        assert "test accuracy" in out
        row = json.loads((tmp_path / "run" / "report.json").read_text())
        assert {"acc", "auc", "exp_kl", "qubits"} <= set(row)
        assert row["qubits"] == 2 and row["acc"] >= E2E_MIN_TEST_ACC and math.isfinite(row["exp_kl"])
        for name, header in (("roc.csv", "fpr,tpr"), ("pr.csv", "recall,precision"),
                             ("reliability.csv", "mean_pred,frac_pos,count")):
            lines = (tmp_path / "run" / name).read_text().splitlines()
            assert lines[0] == header and len(lines) > 1
        assert main(["eval", "--model", str(tmp_path / "run" / "model.json"), "--data", str(tmp_path / "blobs.csv"),
                     "--out-dir", str(tmp_path / "eval")]) == 0
        assert {"eval.json", "roc.csv", "pr.csv", "reliability.csv"} <= set(_tree(tmp_path / "eval"))
