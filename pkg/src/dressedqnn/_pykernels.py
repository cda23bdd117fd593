"""Pure numpy implementation of the statevector kernels.

Same calling convention as the compiled ``_kernels`` module; used when the
extension is not built or when ``DRESSEDQNN_BACKEND=python`` is set.
"""
import math

import numpy as np

OP_RX, OP_RY, OP_RZ, OP_H, OP_X, OP_Z, OP_CNOT, OP_CZ, OP_CRY, OP_CRZ = range(10)

_H = 1.0 / math.sqrt(2.0)


def _view(state, num_qubits, target, control):
    """Return the (a0, a1) sub-views where the target bit is 0 / 1."""
    t = state.reshape([2] * num_qubits)
    idx0 = [slice(None)] * num_qubits
    idx1 = [slice(None)] * num_qubits
    # length-1 slices keep views (integer indices collapse 1-qubit states to scalars)
    idx0[target] = slice(0, 1)
    idx1[target] = slice(1, 2)
    if control >= 0:
        idx0[control] = slice(1, 2)
        idx1[control] = slice(1, 2)
    return t[tuple(idx0)], t[tuple(idx1)]


def _apply_1q(state, num_qubits, target, control, m00, m01, m10, m11):
    v0, v1 = _view(state, num_qubits, target, control)
    a0 = v0.copy()
    a1 = v1.copy()
    v0[...] = m00 * a0 + m01 * a1
    v1[...] = m10 * a0 + m11 * a1


def run_program(state, num_qubits, ops, targets, controls, angles):
    """Apply a gate program to ``state`` in place."""
    for op, tgt, ctl, theta in zip(ops, targets, controls, angles):
        op = int(op)
        tgt = int(tgt)
        ctl = int(ctl)
        if op == OP_RX:
            c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
            _apply_1q(state, num_qubits, tgt, -1, c, -1j * s, -1j * s, c)
        elif op in (OP_RY, OP_CRY):
            c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
            _apply_1q(state, num_qubits, tgt, ctl, c, -s, s, c)
        elif op in (OP_RZ, OP_CRZ):
            c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
            v0, v1 = _view(state, num_qubits, tgt, ctl)
            v0 *= complex(c, -s)
            v1 *= complex(c, s)
        elif op == OP_H:
            _apply_1q(state, num_qubits, tgt, -1, _H, _H, _H, -_H)
        elif op in (OP_X, OP_CNOT):
            v0, v1 = _view(state, num_qubits, tgt, ctl)
            tmp = v0.copy()
            v0[...] = v1
            v1[...] = tmp
        elif op in (OP_Z, OP_CZ):
            _, v1 = _view(state, num_qubits, tgt, ctl)
            v1 *= -1.0
        else:
            raise ValueError(f"unknown opcode {op}")


def expectation_z_all(state, num_qubits):
    """Return <Z_q> for every qubit q."""
    probs = (state.real**2 + state.imag**2).reshape([2] * num_qubits)
    out = np.empty(num_qubits)
    for q in range(num_qubits):
        axes = tuple(a for a in range(num_qubits) if a != q)
        marg = probs.sum(axis=axes) if axes else probs
        out[q] = marg[0] - marg[1]
    return out
