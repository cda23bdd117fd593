"""Parameter-shift Jacobians of the Z expectations.

A slot used by several gates is differentiated occurrence by occurrence:
each gate is shifted on its own and the contributions are summed. Plain
rotations (generator eigenvalues +-1/2) use the two-term rule

    d<Z>/dtheta = [f(theta + pi/2) - f(theta - pi/2)] / 2

and controlled rotations, whose generator has eigenvalues {0, +-1/2} and
therefore frequencies 1/2 and 1, use the four-term rule

    d<Z>/dtheta = c1 [f(theta + pi/2) - f(theta - pi/2)]
                - c2 [f(theta + 3pi/2) - f(theta - 3pi/2)]

with c1 = (sqrt2 + 1) / (4 sqrt2), c2 = (sqrt2 - 1) / (4 sqrt2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import BoundCircuit, CircuitTemplate, measure_angles
from .qstate import GateKind

_SQ2 = math.sqrt(2.0)
TWO_TERM = ((math.pi / 2, 0.5),)
FOUR_TERM = (
    (math.pi / 2, (_SQ2 + 1) / (4 * _SQ2)),
    (3 * math.pi / 2, -(_SQ2 - 1) / (4 * _SQ2)),
)

SHIFT_RULES = {
    GateKind.RX: TWO_TERM,
    GateKind.RY: TWO_TERM,
    GateKind.RZ: TWO_TERM,
    GateKind.CRY: FOUR_TERM,
    GateKind.CRZ: FOUR_TERM,
}


class ShiftRuleError(ValueError):
    pass


@dataclass
class QuantumJacobian:
    by_param: np.ndarray  # (num_qubits, num_params)
    by_input: np.ndarray  # (num_qubits, num_inputs)


def shift_rule(kind: GateKind):
    try:
        return SHIFT_RULES[kind]
    except KeyError:
        raise ShiftRuleError(f"no parameter-shift rule for {kind.value}") from None


def gate_derivative(template: CircuitTemplate, angles: np.ndarray, gate_index: int) -> np.ndarray:
    """d<Z_i>/d(angle of one gate occurrence), for all qubits i."""
    rule = shift_rule(template.gates[gate_index].kind)
    out = np.zeros(template.num_qubits)
    shifted = angles.copy()
    base = angles[gate_index]
    for shift, coeff in rule:
        shifted[gate_index] = base + shift
        plus = measure_angles(template, shifted)
        shifted[gate_index] = base - shift
        minus = measure_angles(template, shifted)
        out += coeff * (plus - minus)
    return out


def _slot_columns(template, angles, slot_kind, count):
    cols = np.zeros((template.num_qubits, count))
    for slot in range(count):
        for gi in template.occurrences(slot_kind, slot):
            cols[:, slot] += gate_derivative(template, angles, gi)
    return cols


def parameter_shift_jacobian(bound: BoundCircuit, wrt_inputs: bool = True) -> QuantumJacobian:
    """Exact Jacobian of ``measure_outputs`` by the parameter-shift rule."""
    tpl = bound.template
    for g in tpl.gates:
        if g.angle_slot is not None:
            shift_rule(g.kind)
    angles = tpl.gate_angles(bound.params, bound.inputs)
    by_param = _slot_columns(tpl, angles, "param", tpl.num_params)
    if wrt_inputs:
        by_input = _slot_columns(tpl, angles, "input", tpl.num_inputs)
    else:
        by_input = np.zeros((tpl.num_qubits, tpl.num_inputs))
    return QuantumJacobian(by_param, by_input)


def finite_difference_jacobian(bound: BoundCircuit, h: float = 1e-5) -> QuantumJacobian:
    """Central finite differences of ``measure_outputs``; a test oracle."""
    tpl = bound.template

    def column(params, inputs):
        return measure_angles(tpl, tpl.gate_angles(params, inputs))

    by_param = np.zeros((tpl.num_qubits, tpl.num_params))
    for j in range(tpl.num_params):
        p_hi, p_lo = bound.params.copy(), bound.params.copy()
        p_hi[j] += h
        p_lo[j] -= h
        by_param[:, j] = (column(p_hi, bound.inputs) - column(p_lo, bound.inputs)) / (2 * h)
    by_input = np.zeros((tpl.num_qubits, tpl.num_inputs))
    for j in range(tpl.num_inputs):
        x_hi, x_lo = bound.inputs.copy(), bound.inputs.copy()
        x_hi[j] += h
        x_lo[j] -= h
        by_input[:, j] = (column(bound.params, x_hi) - column(bound.params, x_lo)) / (2 * h)
    return QuantumJacobian(by_param, by_input)
