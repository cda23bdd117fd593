"""Time the compiled and pure-Python statevector kernels on vqc1 programs.

Usage: python benchmarks/bench_kernels.py [--repeats N] [--layers L]
"""
import argparse
import time

import numpy as np

from dressedqnn import _pykernels
from dressedqnn.circuits import builtin_template
from dressedqnn.qstate import zero_amplitudes

try:
    from dressedqnn import _kernels
except ImportError:
    _kernels = None


def time_backend(kern, template, angles, repeats):
    ops, targets, controls, _ = template.program
    best = float("inf")
    for _ in range(3):
        start = time.perf_counter()
        for _ in range(repeats):
            state = zero_amplitudes(template.num_qubits)
            kern.run_program(state, template.num_qubits, ops, targets, controls, angles)
            kern.expectation_z_all(state, template.num_qubits)
        best = min(best, time.perf_counter() - start)
    return best / repeats, state


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=2000)
    parser.add_argument("--layers", type=int, default=3)
    args = parser.parse_args()
    if _kernels is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'qubits':>6} {'gates':>6} {'cython (us)':>12} {'python (us)':>12} {'speedup':>8}")
    for n in (2, 4, 6, 8, 10, 12):
        tpl = builtin_template("vqc1", n, args.layers)
        angles = tpl.gate_angles(rng.uniform(0, 2 * np.pi, tpl.num_params), rng.uniform(-1.5, 1.5, n))
        repeats = max(20, args.repeats >> max(0, n - 6))
        t_c, s_c = time_backend(_kernels, tpl, angles, repeats)
        t_p, s_p = time_backend(_pykernels, tpl, angles, repeats)
        assert np.max(np.abs(s_c - s_p)) <= 1e-12, "backends disagree"
        print(f"{n:>6} {len(tpl.gates):>6} {t_c * 1e6:>12.2f} {t_p * 1e6:>12.2f} {t_p / t_c:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
