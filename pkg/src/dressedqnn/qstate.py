"""Dense statevectors and gate application.

Qubit 0 is the most significant bit of the amplitude index, so for two
qubits the amplitude order is |00>, |01>, |10>, |11> with the left bit
belonging to qubit 0.

The hot loop lives in the compiled ``_kernels`` extension. When it is not
available (or ``DRESSEDQNN_BACKEND=python``) the numpy implementation in
``_pykernels`` is used instead; both expose the same two functions.
"""
from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _pykernels

MAX_QUBITS = 20


def _select_backend():
    if os.environ.get("DRESSEDQNN_BACKEND", "").lower() == "python":
        return _pykernels, "python"
    try:
        from . import _kernels
    except ImportError:
        return _pykernels, "python"
    return _kernels, "cython"


kernels, BACKEND = _select_backend()


class GateKind(str, enum.Enum):
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    H = "H"
    X = "X"
    Z = "Z"
    CNOT = "CNOT"
    CZ = "CZ"
    CRY = "CRY"
    CRZ = "CRZ"

    @property
    def opcode(self) -> int:
        return _OPCODES[self]

    @property
    def is_rotation(self) -> bool:
        return self in ROTATIONS

    @property
    def is_two_qubit(self) -> bool:
        return self in TWO_QUBIT


_OPCODES = {kind: i for i, kind in enumerate(GateKind)}
ROTATIONS = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.CRY, GateKind.CRZ})
TWO_QUBIT = frozenset({GateKind.CNOT, GateKind.CZ, GateKind.CRY, GateKind.CRZ})


@dataclass(frozen=True)
class GateOp:
    """One gate of a circuit.

    ``angle_slot`` names the parameter that supplies the rotation angle and
    ``slot_kind`` says which index space it lives in: ``"param"`` for
    trainable angles, ``"input"`` for embedded features.
    """

    kind: GateKind
    target: int
    control: Optional[int] = None
    angle_slot: Optional[int] = None
    slot_kind: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        if self.kind.is_two_qubit:
            if self.control is None:
                raise ValueError(f"{self.kind.value} needs a control qubit")
            if self.control == self.target:
                raise ValueError("control and target must differ")
        elif self.control is not None:
            raise ValueError(f"{self.kind.value} takes no control qubit")
        if self.kind.is_rotation:
            if self.angle_slot is None:
                raise ValueError(f"{self.kind.value} needs an angle slot")
            if self.slot_kind is None:
                object.__setattr__(self, "slot_kind", "param")
            if self.slot_kind not in ("param", "input"):
                raise ValueError(f"slot_kind must be 'param' or 'input', got {self.slot_kind!r}")
        elif self.angle_slot is not None or self.slot_kind is not None:
            raise ValueError(f"{self.kind.value} takes no angle")

    def qubits(self) -> tuple[int, ...]:
        if self.control is None:
            return (self.target,)
        return (self.control, self.target)


class Statevector:
    """Immutable n-qubit pure state."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, num_qubits: int, amplitudes: np.ndarray):
        amps = np.ascontiguousarray(amplitudes, dtype=np.complex128)
        if amps.shape != (1 << num_qubits,):
            raise ValueError(f"expected {1 << num_qubits} amplitudes, got shape {amps.shape}")
        amps.flags.writeable = False
        self.num_qubits = num_qubits
        self.amplitudes = amps

    def __repr__(self):
        return f"Statevector(num_qubits={self.num_qubits})"

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


def _check_qubits(num_qubits):
    if not isinstance(num_qubits, (int, np.integer)) or not 1 <= num_qubits <= MAX_QUBITS:
        raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}")


def zero_amplitudes(num_qubits: int) -> np.ndarray:
    """Writable |0...0> amplitude buffer."""
    _check_qubits(num_qubits)
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return amps


def init_zero(num_qubits: int) -> Statevector:
    return Statevector(num_qubits, zero_amplitudes(num_qubits))


def _check_index(q, num_qubits, what):
    if not 0 <= q < num_qubits:
        raise IndexError(f"{what} qubit {q} out of range for {num_qubits} qubits")


def apply_gate(state: Statevector, gate: GateOp, angle: Optional[float] = None) -> Statevector:
    """Return ``gate`` applied to ``state``; the input is left untouched."""
    n = state.num_qubits
    _check_index(gate.target, n, "target")
    if gate.control is not None:
        _check_index(gate.control, n, "control")
    if gate.kind.is_rotation and angle is None:
        raise ValueError(f"{gate.kind.value} requires an angle")
    if not gate.kind.is_rotation and angle is not None:
        raise ValueError(f"{gate.kind.value} does not take an angle")
    amps = state.amplitudes.copy()
    kernels.run_program(
        amps,
        n,
        np.array([gate.kind.opcode], dtype=np.int32),
        np.array([gate.target], dtype=np.int32),
        np.array([-1 if gate.control is None else gate.control], dtype=np.int32),
        np.array([0.0 if angle is None else angle], dtype=np.float64),
    )
    return Statevector(n, amps)


def expectation_z(state: Statevector, qubit: int) -> float:
    _check_index(qubit, state.num_qubits, "measured")
    return float(expectation_z_all(state)[qubit])


def expectation_z_all(state: Statevector) -> np.ndarray:
    """<Z> of every qubit, exact (no sampling)."""
    return np.clip(kernels.expectation_z_all(state.amplitudes, state.num_qubits), -1.0, 1.0)


def inner_product(a: Statevector, b: Statevector) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"dimension mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def gate_matrix(kind: GateKind, angle: Optional[float] = None) -> np.ndarray:
    """2x2 (single-qubit) or 4x4 (control, target) unitary of a gate kind.

    Dense matrices are only used by tests and the Kronecker-product oracle.
    """
    kind = GateKind(kind)
    if kind.is_rotation:
        c, s = np.cos(angle / 2), np.sin(angle / 2)
    if kind is GateKind.RX:
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind in (GateKind.RY, GateKind.CRY):
        u = np.array([[c, -s], [s, c]], dtype=complex)
    elif kind in (GateKind.RZ, GateKind.CRZ):
        u = np.array([[c - 1j * s, 0], [0, c + 1j * s]], dtype=complex)
    elif kind is GateKind.H:
        return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    elif kind in (GateKind.X, GateKind.CNOT):
        u = np.array([[0, 1], [1, 0]], dtype=complex)
    else:
        u = np.array([[1, 0], [0, -1]], dtype=complex)
    if not kind.is_two_qubit:
        return u
    out = np.eye(4, dtype=complex)
    out[2:, 2:] = u
    return out
