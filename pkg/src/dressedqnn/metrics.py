"""Binary-classifier evaluation: accuracy, ROC/AUC, precision-recall, reliability."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np


def _as_binary(scores, labels):
    s = np.asarray(scores, dtype=float).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if s.size == 0:
        raise ValueError("empty input")
    if s.size != y.size:
        raise ValueError(f"{s.size} scores but {y.size} labels")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    return s, y.astype(np.int64)


def accuracy(scores, labels, threshold: float = 0.5) -> float:
    """Fraction of samples where (score >= threshold) equals the label."""
    s, y = _as_binary(scores, labels)
    return float(np.mean((s >= threshold).astype(np.int64) == y))


def _sweep(s, y):
    """Cumulative (tp, fp) after admitting each distinct score, highest first."""
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    y_sorted = y[order]
    tp = np.cumsum(y_sorted)
    fp = np.cumsum(1 - y_sorted)
    # last index of each run of equal scores
    ends = np.flatnonzero(np.r_[s_sorted[1:] != s_sorted[:-1], True])
    return s_sorted[ends], tp[ends], fp[ends]


def roc_curve(scores, labels):
    """ROC points (fpr, tpr) from the +inf sentinel down to the lowest score, and the AUC."""
    s, y = _as_binary(scores, labels)
    pos = int(y.sum())
    neg = y.size - pos
    if pos == 0:
        raise ValueError("roc_curve needs both classes; positive class (label 1) is missing")
    if neg == 0:
        raise ValueError("roc_curve needs both classes; negative class (label 0) is missing")
    _, tp, fp = _sweep(s, y)
    tpr = np.r_[0, tp] / pos
    fpr = np.r_[0, fp] / neg
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1])) / 2.0)
    return list(zip(fpr.tolist(), tpr.tolist())), auc


def pairwise_auc(scores, labels) -> float:
    """Mann-Whitney AUC by O(n^2) pair counting, ties worth one half."""
    s, y = _as_binary(scores, labels)
    p = s[y == 1]
    n = s[y == 0]
    wins = (p[:, None] > n[None, :]).sum() + 0.5 * (p[:, None] == n[None, :]).sum()
    return float(wins / (p.size * n.size))


def pr_curve(scores, labels):
    """(recall, precision) at each distinct score used as threshold, highest first.

    Precision with no predicted positives counts as 1.0.
    """
    s, y = _as_binary(scores, labels)
    pos = int(y.sum())
    if pos == 0:
        raise ValueError("pr_curve needs at least one positive label")
    _, tp, fp = _sweep(s, y)
    predicted = tp + fp
    precision = np.where(predicted > 0, tp / np.maximum(predicted, 1), 1.0)
    recall = tp / pos
    return list(zip(recall.tolist(), precision.tolist()))


def reliability_curve(scores, labels, num_bins: int = 10):
    """(mean score, positive fraction, count) for each non-empty uniform bin."""
    if num_bins < 2:
        raise ValueError(f"num_bins must be >= 2, got {num_bins}")
    s, y = _as_binary(scores, labels)
    idx = np.clip((s * num_bins).astype(np.int64), 0, num_bins - 1)
    points = []
    for b in range(num_bins):
        mask = idx == b
        n = int(mask.sum())
        if n:
            points.append((float(s[mask].mean()), float(y[mask].mean()), n))
    return points


@dataclass
class EvalReport:
    accuracy: float
    auc: float
    roc_points: list = field(default_factory=list)
    pr_points: list = field(default_factory=list)
    reliability_points: list = field(default_factory=list)
    threshold: float = 0.5
    num_samples: int = 0

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "auc": self.auc,
            "threshold": self.threshold,
            "num_samples": self.num_samples,
            "roc_points": [list(p) for p in self.roc_points],
            "pr_points": [list(p) for p in self.pr_points],
            "reliability_points": [list(p) for p in self.reliability_points],
        }

    def write(self, out_dir, prefix: str = ""):
        """Write ``eval.json`` plus roc/pr/reliability CSVs into ``out_dir``."""
        from pathlib import Path

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"{prefix}eval.json", "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")
        write_curve_csv(out / f"{prefix}roc.csv", ("fpr", "tpr"), self.roc_points)
        write_curve_csv(out / f"{prefix}pr.csv", ("recall", "precision"), self.pr_points)
        write_curve_csv(out / f"{prefix}reliability.csv", ("mean_pred", "frac_pos", "count"),
                        self.reliability_points)


def write_curve_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (int, np.integer)) else repr(float(v)) for v in row])


def read_curve_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [tuple(int(v) if h == "count" else float(v) for h, v in zip(header, row)) for row in r]
    return header, rows


def evaluate(scores, labels, threshold: float = 0.5, num_bins: int = 10) -> EvalReport:
    s, y = _as_binary(scores, labels)
    roc, auc = roc_curve(s, y)
    return EvalReport(
        accuracy=accuracy(s, y, threshold),
        auc=auc,
        roc_points=roc,
        pr_points=pr_curve(s, y),
        reliability_points=reliability_curve(s, y, num_bins),
        threshold=threshold,
        num_samples=int(s.size),
    )
