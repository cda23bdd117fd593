"""Command-line entry point: ``dressedqnn <command> [options]``.

Commands
--------
gen-data            write a synthetic dataset CSV
train               train a hybrid model from a JSON run config
eval                evaluate a saved model on a dataset CSV
expressibility      score a built-in circuit family against Haar
describe-circuit    list the gates of a built-in circuit family

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.

Train config (JSON, unknown keys rejected)::

    {
      "data": "blobs.csv",              # relative to the config file
      "seed": 7,
      "split": [0.8, 0.1, 0.1],
      "train": {"epochs": 100, "batch_size": 16, "learning_rate": 0.01,
                "optimizer": "adam", "momentum": 0.0, "step_size": 1,
                "gamma": 1.0, "qubits": 2, "template": "vqc1", "layers": 1,
                "freeze_pre_net": false},
      "expressibility": {"samples": 5000, "bins": 75},
      "metrics": {"threshold": 0.5, "reliability_bins": 10}
    }

Files written by ``train`` into ``--out-dir``: model.json, history.csv,
eval.json, roc.csv, pr.csv, reliability.csv, expressibility.json,
expressibility_hist.csv and report.json (one results-table row).
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import data as data_mod
from .circuits import FAMILIES, TemplateError, builtin_template, describe
from .data import DataError
from .expressibility import DEFAULT_BINS, DEFAULT_SAMPLES, MIN_BINS, MIN_SAMPLES, expressibility_score
from .hybrid import ConfigError, HybridModel, TrainConfig, load_model, predict_scores, save_model, train, write_history_csv
from .metrics import evaluate
from .nn import NonFiniteError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

_TOP_KEYS = {"data", "seed", "split", "train", "expressibility", "metrics"}
_EXP_KEYS = {"samples", "bins"}
_METRIC_KEYS = {"threshold", "reliability_bins"}


@dataclass
class RunConfig:
    data_path: Path
    seed: int = 0
    split: tuple = (0.8, 0.1, 0.1)
    train: TrainConfig = field(default_factory=TrainConfig)
    exp_samples: int = DEFAULT_SAMPLES
    exp_bins: int = DEFAULT_BINS
    threshold: float = 0.5
    reliability_bins: int = 10

    def snapshot(self) -> dict:
        return {
            "data": str(self.data_path),
            "seed": self.seed,
            "split": list(self.split),
            "train": {k: v for k, v in self.train.to_dict().items() if k != "seed"},
            "expressibility": {"samples": self.exp_samples, "bins": self.exp_bins},
            "metrics": {"threshold": self.threshold, "reliability_bins": self.reliability_bins},
        }


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def parse_run_config(doc, base_dir=Path("."), seed_override=None) -> RunConfig:
    """Validate a train config document, reporting every problem at once."""
    if not isinstance(doc, dict):
        raise ConfigError(["config must be a JSON object"])
    problems = [f"unknown key {k!r}" for k in doc if k not in _TOP_KEYS]
    if "data" not in doc or not isinstance(doc.get("data"), str):
        problems.append("'data' (dataset CSV path) is required")
    seed = doc.get("seed", 0) if seed_override is None else seed_override
    if not _is_int(seed) or seed < 0:
        problems.append(f"'seed' must be a non-negative integer, got {seed!r}")
    split = doc.get("split", [0.8, 0.1, 0.1])
    if not (isinstance(split, list) and len(split) == 3 and all(_is_num(f) and f > 0 for f in split)
            and abs(sum(split) - 1.0) < 1e-9):
        problems.append(f"'split' must be three positive fractions summing to 1, got {split!r}")

    train_doc = doc.get("train", {})
    train_cfg = None
    if not isinstance(train_doc, dict):
        problems.append("'train' must be an object")
    elif "seed" in train_doc:
        problems.append("'train.seed' is not allowed; use the top-level 'seed'")
    else:
        try:
            train_cfg = TrainConfig.from_dict({**train_doc, "seed": seed if _is_int(seed) else 0})
        except ConfigError as exc:
            problems.extend(f"train: {p}" for p in exc.problems)

    exp = doc.get("expressibility", {})
    metrics = doc.get("metrics", {})
    for section, allowed, obj in (("expressibility", _EXP_KEYS, exp), ("metrics", _METRIC_KEYS, metrics)):
        if not isinstance(obj, dict):
            problems.append(f"{section!r} must be an object")
        else:
            problems.extend(f"unknown key {section}.{k}" for k in obj if k not in allowed)
    exp = exp if isinstance(exp, dict) else {}
    metrics = metrics if isinstance(metrics, dict) else {}
    samples = exp.get("samples", DEFAULT_SAMPLES)
    bins = exp.get("bins", DEFAULT_BINS)
    if not _is_int(samples) or samples < MIN_SAMPLES:
        problems.append(f"'expressibility.samples' must be an integer >= {MIN_SAMPLES}")
    if not _is_int(bins) or bins < MIN_BINS:
        problems.append(f"'expressibility.bins' must be an integer >= {MIN_BINS}")
    threshold = metrics.get("threshold", 0.5)
    rbins = metrics.get("reliability_bins", 10)
    if not _is_num(threshold) or not 0 <= threshold <= 1:
        problems.append("'metrics.threshold' must be in [0, 1]")
    if not _is_int(rbins) or rbins < 2:
        problems.append("'metrics.reliability_bins' must be an integer >= 2")
    if problems:
        raise ConfigError(problems)
    return RunConfig(
        data_path=Path(base_dir) / doc["data"],
        seed=seed,
        split=tuple(float(f) for f in split),
        train=train_cfg,
        exp_samples=samples,
        exp_bins=bins,
        threshold=float(threshold),
        reliability_bins=rbins,
    )


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def cmd_gen_data(args) -> int:
    if args.n < data_mod.MIN_GENERATED:
        raise ConfigError([f"--n must be >= {data_mod.MIN_GENERATED}, got {args.n}"])
    ds = data_mod.generate(args.kind, args.n, args.seed)
    try:
        data_mod.write_csv(ds, args.out)
    except OSError as exc:
        raise DataError(f"cannot write {args.out}: {exc}") from exc
    print(f"wrote {len(ds)} rows ({args.kind}) to {args.out}")
    return EXIT_OK


def run_training(cfg: RunConfig, out_dir: Path, threads: int = 1) -> dict:
    """Full pipeline: split, train, evaluate on test, score the circuit, write artifacts."""
    ds = data_mod.read_csv(cfg.data_path)
    ds = data_mod.split_dataset(ds, cfg.split, seed=cfg.seed)
    model = HybridModel.create(ds.feature_dim, cfg.train)
    model.metadata["run_config"] = cfg.snapshot()
    result = train(model, ds, cfg.train, threads=threads)
    best = result.model
    best.metadata["best_epoch"] = result.best_epoch

    test = ds.subset("test")
    report = evaluate(predict_scores(best, test.features), test.labels,
                      cfg.threshold, cfg.reliability_bins)
    exp = expressibility_score(best.template, cfg.exp_samples, cfg.exp_bins,
                               seed=int(data_mod.stream(cfg.seed, "expressibility").integers(2**31)),
                               threads=threads)

    out_dir.mkdir(parents=True, exist_ok=True)
    save_model(best, out_dir / "model.json")
    write_history_csv(result.history, out_dir / "history.csv")
    report.write(out_dir)
    exp.write_json(out_dir / "expressibility.json")
    exp.write_histogram_csv(out_dir / "expressibility_hist.csv")
    row = {
        "model": f"Hybrid dense-{ds.feature_dim}",
        "samples": len(ds),
        "acc": report.accuracy,
        "auc": report.auc,
        "vqc": cfg.train.template,
        "layers": cfg.train.layers,
        "exp_kl": exp.kl_score,
        "qubits": cfg.train.qubits,
        "best_epoch": result.best_epoch,
    }
    _write_json(out_dir / "report.json", row)
    return row


def cmd_train(args) -> int:
    if args.config is None:
        raise ConfigError(["--config is required"])
    path = Path(args.config)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config {path} is not valid JSON: {exc}"]) from exc
    cfg = parse_run_config(doc, path.parent, seed_override=args.seed)
    row = run_training(cfg, Path(args.out_dir), threads=args.threads)
    print(f"{'model':<18s} {'n':>5s} {'acc':>6s} {'auc':>6s} {'vqc':>5s} {'exp_kl':>8s} {'qubits':>6s}")
    print(f"{row['model']:<18s} {row['samples']:5d} {row['acc']:6.3f} {row['auc']:6.3f} "
          f"{row['vqc']:>5s} {row['exp_kl']:8.4f} {row['qubits']:6d}")
    print(f"test accuracy {row['acc']:.4f}  test AUC {row['auc']:.4f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    ds = data_mod.read_csv(args.data)
    if ds.feature_dim != model.feature_dim:
        raise DataError(f"dataset has {ds.feature_dim} features but the model expects {model.feature_dim}")
    try:
        report = evaluate(predict_scores(model, ds.features), ds.labels, args.threshold, args.bins)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    report.write(Path(args.out_dir))
    print(f"accuracy {report.accuracy:.4f}  AUC {report.auc:.4f}  n={report.num_samples}")
    return EXIT_OK


def cmd_expressibility(args) -> int:
    problems = []
    if args.samples < MIN_SAMPLES:
        problems.append(f"--samples must be >= {MIN_SAMPLES}, got {args.samples}")
    if args.bins < MIN_BINS:
        problems.append(f"--bins must be >= {MIN_BINS}, got {args.bins}")
    if problems:
        raise ConfigError(problems)
    tpl = builtin_template(args.template, args.qubits, args.layers)
    rep = expressibility_score(tpl, args.samples, args.bins, seed=args.seed, threads=args.threads)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rep.write_json(out / "expressibility.json")
    rep.write_histogram_csv(out / "expressibility_hist.csv")
    print(f"{args.template} {args.qubits} {args.layers} {rep.kl_score:.6f}")
    return EXIT_OK


def cmd_describe_circuit(args) -> int:
    tpl = builtin_template(args.template, args.qubits, args.layers)
    if args.json:
        print(tpl.to_json(indent=2))
    else:
        print(describe(tpl))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dressedqnn", description="Dressed variational quantum classifiers.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="write a synthetic dataset CSV")
    g.add_argument("--kind", choices=data_mod.KINDS, default="blobs")
    g.add_argument("--n", type=int, default=200)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train a hybrid model")
    t.add_argument("--config")
    t.add_argument("--seed", type=int, default=None, help="override the config seed")
    t.add_argument("--out-dir", default="run")
    t.add_argument("--threads", type=int, default=1)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a saved model")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out-dir", default="eval")
    e.add_argument("--threshold", type=float, default=0.5)
    e.add_argument("--bins", type=int, default=10)
    e.set_defaults(func=cmd_eval)

    x = sub.add_parser("expressibility", help="KL expressibility of a circuit family")
    x.add_argument("--template", choices=FAMILIES, required=True)
    x.add_argument("--qubits", type=int, default=4)
    x.add_argument("--layers", type=int, default=1)
    x.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    x.add_argument("--bins", type=int, default=DEFAULT_BINS)
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--out-dir", default="expressibility")
    x.add_argument("--threads", type=int, default=1)
    x.set_defaults(func=cmd_expressibility)

    d = sub.add_parser("describe-circuit", help="list the gates of a circuit family")
    d.add_argument("--template", required=True)
    d.add_argument("--qubits", type=int, default=4)
    d.add_argument("--layers", type=int, default=1)
    d.add_argument("--json", action="store_true")
    d.set_defaults(func=cmd_describe_circuit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except TemplateError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NonFiniteError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
