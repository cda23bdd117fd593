"""Expressibility of a circuit template.

Random parameter pairs are drawn uniformly from [0, 2pi)^P with inputs held
at zero, the pairwise state fidelities are histogrammed, and the histogram
is compared to the Haar-random fidelity law

    P(F) = (N - 1) (1 - F)^(N - 2),   N = 2^n

by the KL divergence KL(sampled || Haar) in nats. Lower is closer to Haar,
i.e. more expressible.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .circuits import CircuitTemplate, run_angles

DEFAULT_SAMPLES = 5000
DEFAULT_BINS = 75
REFERENCE_FLOOR = 1e-12
MIN_SAMPLES = 100
MIN_BINS = 10


@dataclass
class ExpressibilityReport:
    template_id: str
    num_qubits: int
    num_samples: int
    num_bins: int
    histogram: list
    haar_reference: list
    kl_score: float
    seed: int = 0

    @property
    def exp_kl(self) -> float:
        return self.kl_score

    def bin_centers(self) -> np.ndarray:
        return (np.arange(self.num_bins) + 0.5) / self.num_bins

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["exp_kl"] = self.kl_score
        return doc

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def write_histogram_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_center", "probability"])
            for c, p in zip(self.bin_centers(), self.histogram):
                w.writerow([repr(float(c)), repr(float(p))])


def haar_fidelity_pdf_bin(bin_index: int, num_bins: int, dim: int) -> float:
    """Haar probability mass of the fidelity bin [k/B, (k+1)/B].

    Integrates the density exactly through its CDF 1 - (1 - F)^(N-1).
    """
    if dim < 2:
        raise ValueError(f"Hilbert-space dimension must be >= 2, got {dim}")
    if not 0 <= bin_index < num_bins:
        raise ValueError(f"bin {bin_index} outside [0, {num_bins})")
    lo = bin_index / num_bins
    hi = (bin_index + 1) / num_bins
    return (1.0 - lo) ** (dim - 1) - (1.0 - hi) ** (dim - 1)


def haar_reference(num_bins: int, dim: int) -> np.ndarray:
    return np.array([haar_fidelity_pdf_bin(k, num_bins, dim) for k in range(num_bins)])


def _draw_angles(template, num_samples, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 2.0 * math.pi, size=(num_samples, 2, template.num_params))


def _fidelity_chunk(template, thetas, zero_inputs):
    out = np.empty(len(thetas))
    for k, (ta, tb) in enumerate(thetas):
        a = run_angles(template, template.gate_angles(ta, zero_inputs))
        b = run_angles(template, template.gate_angles(tb, zero_inputs))
        ov = np.vdot(a, b)
        out[k] = ov.real * ov.real + ov.imag * ov.imag
    return out


def sample_fidelities(template: CircuitTemplate, num_samples: int = DEFAULT_SAMPLES,
                      seed: int = 0, threads: int = 1) -> np.ndarray:
    """|<psi(a)|psi(b)>|^2 for ``num_samples`` random parameter pairs.

    All angles are drawn up front from one seeded stream, so the result does
    not depend on ``threads``.
    """
    if num_samples < MIN_SAMPLES:
        raise ValueError(f"num_samples must be >= {MIN_SAMPLES}, got {num_samples}")
    thetas = _draw_angles(template, num_samples, seed)
    zero_inputs = np.zeros(template.num_inputs)
    if threads <= 1:
        fid = _fidelity_chunk(template, thetas, zero_inputs)
    else:
        chunks = np.array_split(thetas, threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: _fidelity_chunk(template, c, zero_inputs), chunks))
        fid = np.concatenate(parts)
    return np.clip(fid, 0.0, 1.0)


def fidelity_histogram(fidelities, num_bins: int) -> np.ndarray:
    """Empirical probability per uniform bin on [0, 1]; F = 1 lands in the last bin."""
    idx = np.minimum((np.asarray(fidelities) * num_bins).astype(np.int64), num_bins - 1)
    counts = np.bincount(idx, minlength=num_bins)
    return counts / counts.sum()


def kl_divergence(p, q, floor: float = REFERENCE_FLOOR) -> float:
    """sum_b p_b ln(p_b / max(q_b, floor)) over bins with p_b > 0."""
    p = np.asarray(p, dtype=float)
    q = np.maximum(np.asarray(q, dtype=float), floor)
    mask = p > 0
    return float(max(0.0, np.sum(p[mask] * np.log(p[mask] / q[mask]))))


def expressibility_score(template: CircuitTemplate, num_samples: int = DEFAULT_SAMPLES,
                         num_bins: int = DEFAULT_BINS, seed: int = 0,
                         threads: int = 1) -> ExpressibilityReport:
    if num_bins < MIN_BINS:
        raise ValueError(f"num_bins must be >= {MIN_BINS}, got {num_bins}")
    fid = sample_fidelities(template, num_samples, seed, threads=threads)
    hist = fidelity_histogram(fid, num_bins)
    ref = haar_reference(num_bins, 2 ** template.num_qubits)
    return ExpressibilityReport(
        template_id=template.id,
        num_qubits=template.num_qubits,
        num_samples=num_samples,
        num_bins=num_bins,
        histogram=hist.tolist(),
        haar_reference=ref.tolist(),
        kl_score=kl_divergence(hist, ref),
        seed=seed,
    )
