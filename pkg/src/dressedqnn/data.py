"""Feature datasets: CSV I/O, synthetic generators and seeded splits.

Every random draw in the package comes from ``stream(seed, name)``, which
derives an independent generator per named purpose from one user seed.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

STREAMS = {"data": 0, "init": 1, "training": 2, "expressibility": 3, "split": 4}
KINDS = ("blobs", "moons", "bernoulli_scores")
MIN_GENERATED = 10


class DataError(ValueError):
    pass


def stream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), STREAMS[name]])


@dataclass
class Dataset:
    features: np.ndarray  # (n_samples, feature_dim)
    labels: np.ndarray
    split: Optional[np.ndarray] = None  # per-sample "train" / "val" / "test"

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.features.shape[0] != self.labels.size:
            raise DataError(f"{self.features.shape[0]} feature rows but {self.labels.size} labels")
        bad = np.flatnonzero((self.labels != 0) & (self.labels != 1))
        if bad.size:
            raise DataError(f"labels must be 0/1; first offending row {int(bad[0])}")

    def __len__(self):
        return self.labels.size

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def subset(self, name: str) -> "Dataset":
        if self.split is None:
            raise DataError("dataset has no split assignment")
        mask = self.split == name
        if not mask.any():
            raise DataError(f"split {name!r} is empty")
        return Dataset(self.features[mask], self.labels[mask])


def split_dataset(ds: Dataset, fractions=(0.8, 0.1, 0.1), seed: int = 0) -> Dataset:
    """Seeded shuffle, then consecutive train/val/test blocks of the given fractions."""
    if len(fractions) != 3 or any(f <= 0 for f in fractions) or not math.isclose(sum(fractions), 1.0):
        raise DataError(f"split fractions must be three positive numbers summing to 1, got {fractions}")
    n = len(ds)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    if n_train < 1 or n_val < 1 or n - n_train - n_val < 1:
        raise DataError(f"{n} samples cannot fill a {fractions} split")
    order = stream(seed, "split").permutation(n)
    split = np.empty(n, dtype=object)
    split[order[:n_train]] = "train"
    split[order[n_train:n_train + n_val]] = "val"
    split[order[n_train + n_val:]] = "test"
    return Dataset(ds.features, ds.labels, split)


def _balanced_labels(n, rng):
    y = np.zeros(n, dtype=np.int64)
    y[n // 2:] = 1
    return rng.permutation(y)


def generate(kind: str, n: int, seed: int = 0) -> Dataset:
    """Synthetic binary data.

    ``blobs``: two isotropic Gaussian clusters (std 0.6) centred at
    (-1.5, -1.5) and (+1.5, +1.5). ``moons``: two interleaved half circles
    with Gaussian noise 0.1. ``bernoulli_scores``: one feature uniform on
    [0, 1] and a label drawn Bernoulli(feature), i.e. a calibrated score.
    The two class sizes of blobs and moons differ by at most one.
    """
    if kind not in KINDS:
        raise DataError(f"unknown dataset kind {kind!r}; valid kinds: {', '.join(KINDS)}")
    if n < MIN_GENERATED:
        raise DataError(f"n must be >= {MIN_GENERATED}, got {n}")
    rng = stream(seed, "data")
    if kind == "blobs":
        y = _balanced_labels(n, rng)
        centers = np.where(y[:, None] == 1, 1.5, -1.5)
        x = centers + 0.6 * rng.standard_normal((n, 2))
    elif kind == "moons":
        y = _balanced_labels(n, rng)
        t = rng.uniform(0.0, math.pi, n)
        x = np.where(
            y[:, None] == 0,
            np.c_[np.cos(t), np.sin(t)],
            np.c_[1.0 - np.cos(t), 0.5 - np.sin(t)],
        )
        x = x + 0.1 * rng.standard_normal((n, 2))
    else:
        s = rng.uniform(0.0, 1.0, n)
        y = (rng.uniform(0.0, 1.0, n) < s).astype(np.int64)
        x = s[:, None]
    return Dataset(x, y)


def write_csv(ds: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"f{j}" for j in range(ds.feature_dim)] + ["label"])
        for row, label in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in row] + [int(label)])


def read_csv(path) -> Dataset:
    """Read a ``f0,...,f{d-1},label`` file; errors name the data row (1-based)."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise DataError(f"{path}: empty file")
        d = len(header) - 1
        expected = [f"f{j}" for j in range(d)] + ["label"]
        if d < 1 or header != expected:
            raise DataError(f"{path}: header must be f0,...,f{{d-1}},label; got {','.join(header)}")
        feats, labels = [], []
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != d + 1:
                raise DataError(f"{path}: row {row_no} has {len(row)} columns, expected {d + 1}")
            try:
                values = [float(v) for v in row[:-1]]
                label = float(row[-1])
            except ValueError as exc:
                raise DataError(f"{path}: row {row_no}: {exc}") from exc
            if label not in (0.0, 1.0):
                raise DataError(f"{path}: row {row_no}: label must be 0 or 1, got {row[-1]}")
            if not all(math.isfinite(v) for v in values):
                raise DataError(f"{path}: row {row_no}: non-finite feature")
            feats.append(values)
            labels.append(int(label))
    if not labels:
        raise DataError(f"{path}: no data rows")
    return Dataset(np.array(feats), np.array(labels))
