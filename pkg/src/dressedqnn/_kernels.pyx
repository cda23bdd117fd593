# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled statevector kernels.

Programs are flat arrays: one opcode, target, control (-1 if none) and angle
per gate. Qubit 0 is the most significant bit of the amplitude index.
"""
from libc.math cimport cos, sin, sqrt

import numpy as np
cimport numpy as cnp

cnp.import_array()

DEF OP_RX = 0
DEF OP_RY = 1
DEF OP_RZ = 2
DEF OP_H = 3
DEF OP_X = 4
DEF OP_Z = 5
DEF OP_CNOT = 6
DEF OP_CZ = 7
DEF OP_CRY = 8
DEF OP_CRZ = 9


cdef inline void _apply_1q(double complex[::1] s, Py_ssize_t dim, Py_ssize_t stride,
                           Py_ssize_t cstride,
                           double complex m00, double complex m01,
                           double complex m10, double complex m11) noexcept nogil:
    # cstride == 0 means uncontrolled
    cdef Py_ssize_t blk, i, j
    cdef double complex a0, a1
    blk = 0
    while blk < dim:
        for i in range(blk, blk + stride):
            if cstride != 0 and (i & cstride) == 0:
                continue
            j = i + stride
            a0 = s[i]
            a1 = s[j]
            s[i] = m00 * a0 + m01 * a1
            s[j] = m10 * a0 + m11 * a1
        blk += 2 * stride


cdef inline void _swap(double complex[::1] s, Py_ssize_t dim, Py_ssize_t stride,
                       Py_ssize_t cstride) noexcept nogil:
    cdef Py_ssize_t blk, i, j
    cdef double complex tmp
    blk = 0
    while blk < dim:
        for i in range(blk, blk + stride):
            if cstride != 0 and (i & cstride) == 0:
                continue
            j = i + stride
            tmp = s[i]
            s[i] = s[j]
            s[j] = tmp
        blk += 2 * stride


cdef inline void _phase_flip(double complex[::1] s, Py_ssize_t dim, Py_ssize_t stride,
                             Py_ssize_t cstride) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(dim):
        if (i & stride) != 0 and (cstride == 0 or (i & cstride) != 0):
            s[i] = -s[i]


cdef void _run(double complex[::1] s, int n, const int[::1] ops, const int[::1] targets,
               const int[::1] controls, const double[::1] angles) noexcept nogil:
    cdef Py_ssize_t dim = (<Py_ssize_t>1) << n
    cdef Py_ssize_t g, stride, cstride
    cdef int op
    cdef double c, sn, h = 1.0 / sqrt(2.0)
    cdef double complex ph0, ph1
    for g in range(ops.shape[0]):
        op = ops[g]
        stride = (<Py_ssize_t>1) << (n - 1 - targets[g])
        cstride = 0
        if controls[g] >= 0:
            cstride = (<Py_ssize_t>1) << (n - 1 - controls[g])
        if op == OP_RX:
            c = cos(0.5 * angles[g])
            sn = sin(0.5 * angles[g])
            _apply_1q(s, dim, stride, 0, c, -1j * sn, -1j * sn, c)
        elif op == OP_RY or op == OP_CRY:
            c = cos(0.5 * angles[g])
            sn = sin(0.5 * angles[g])
            _apply_1q(s, dim, stride, cstride, c, -sn, sn, c)
        elif op == OP_RZ or op == OP_CRZ:
            c = cos(0.5 * angles[g])
            sn = sin(0.5 * angles[g])
            ph0 = c - 1j * sn
            ph1 = c + 1j * sn
            _apply_1q(s, dim, stride, cstride, ph0, 0, 0, ph1)
        elif op == OP_H:
            _apply_1q(s, dim, stride, 0, h, h, h, -h)
        elif op == OP_X or op == OP_CNOT:
            _swap(s, dim, stride, cstride)
        elif op == OP_Z or op == OP_CZ:
            _phase_flip(s, dim, stride, cstride)


def run_program(double complex[::1] state, int num_qubits, const int[::1] ops,
                const int[::1] targets, const int[::1] controls, const double[::1] angles):
    """Apply a gate program to ``state`` in place."""
    with nogil:
        _run(state, num_qubits, ops, targets, controls, angles)


def expectation_z_all(const double complex[::1] state, int num_qubits):
    """Return <Z_q> for every qubit q."""
    cdef Py_ssize_t dim = state.shape[0]
    cdef Py_ssize_t i
    cdef int q
    cdef double p
    out = np.zeros(num_qubits, dtype=np.float64)
    cdef double[::1] z = out
    with nogil:
        for i in range(dim):
            p = state[i].real * state[i].real + state[i].imag * state[i].imag
            for q in range(num_qubits):
                if (i >> (num_qubits - 1 - q)) & 1:
                    z[q] -= p
                else:
                    z[q] += p
    return out
