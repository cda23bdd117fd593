"""Parameterized circuit templates, feature embedding and execution.

A template is an ordered gate list whose rotation angles come from two
disjoint slot spaces: trainable parameters and embedded inputs. The
built-in families all start with one input RY per qubit followed by
``layers`` repetitions of a family-specific block:

======  ==========================================================
vqc1    RY on each qubit, RZ on each qubit, ring of CNOTs
vqc2    RY on each qubit, linear chain of CNOTs
vqc3    RY on each qubit, ring of CRZ
vqc4    RX on each qubit, RZ on each qubit, ring of CZ
vqc5    RY on each qubit, CNOT i -> j for every i < j
vqc6    RY on each qubit, no entanglers
======  ==========================================================

A "ring" on n > 2 qubits is the pairs (i, i+1 mod n); on two qubits it is
the single pair (0, 1), since (1, 0) would repeat the same CZ edge.

The family ids only name configurations. Published VQC figures number
their circuits differently (21-26 in one appendix, 1-6 in the results
table), and the exact layouts are not recoverable from them.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .qstate import GateKind, GateOp, Statevector, kernels, zero_amplitudes

EMBED_SCALE = math.pi / 2

FAMILIES = ("vqc1", "vqc2", "vqc3", "vqc4", "vqc5", "vqc6")
_ENTANGLING = frozenset(FAMILIES) - {"vqc6"}


class TemplateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CircuitTemplate:
    id: str
    num_qubits: int
    gates: tuple[GateOp, ...]
    num_params: int = field(init=False)
    num_inputs: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.num_qubits < 1:
            raise TemplateError("num_qubits must be >= 1")
        used = {"param": set(), "input": set()}
        for g in self.gates:
            for q in g.qubits():
                if not 0 <= q < self.num_qubits:
                    raise TemplateError(f"gate {g} acts on qubit {q} outside [0, {self.num_qubits})")
            if g.angle_slot is not None:
                if g.angle_slot < 0:
                    raise TemplateError(f"negative slot index in {g}")
                used[g.slot_kind].add(g.angle_slot)
        counts = {}
        for kind, slots in used.items():
            n = max(slots) + 1 if slots else 0
            missing = sorted(set(range(n)) - slots)
            if missing:
                raise TemplateError(f"{kind} slots {missing} are not used by any gate")
            counts[kind] = n
        object.__setattr__(self, "num_params", counts["param"])
        object.__setattr__(self, "num_inputs", counts["input"])

    @cached_property
    def program(self):
        """Opcode/target/control arrays plus per-gate slot lookup."""
        ops = np.array([g.kind.opcode for g in self.gates], dtype=np.int32)
        targets = np.array([g.target for g in self.gates], dtype=np.int32)
        controls = np.array([-1 if g.control is None else g.control for g in self.gates], dtype=np.int32)
        # index into concat(params, inputs); -1 for fixed gates
        lookup = np.full(len(self.gates), -1, dtype=np.int64)
        for i, g in enumerate(self.gates):
            if g.slot_kind == "param":
                lookup[i] = g.angle_slot
            elif g.slot_kind == "input":
                lookup[i] = self.num_params + g.angle_slot
        return ops, targets, controls, lookup

    def gate_angles(self, params, inputs) -> np.ndarray:
        """Per-gate angle array for the kernel (0 for fixed gates)."""
        lookup = self.program[3]
        values = np.concatenate([np.asarray(params, dtype=float), np.asarray(inputs, dtype=float)])
        angles = np.zeros(len(self.gates))
        mask = lookup >= 0
        angles[mask] = values[lookup[mask]]
        return angles

    def occurrences(self, slot_kind: str, slot: int) -> list[int]:
        return [i for i, g in enumerate(self.gates) if g.slot_kind == slot_kind and g.angle_slot == slot]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "num_qubits": self.num_qubits,
            "num_params": self.num_params,
            "num_inputs": self.num_inputs,
            "gates": [
                {
                    "kind": g.kind.value,
                    "target": g.target,
                    "control": g.control,
                    "angle_slot": g.angle_slot,
                    "slot_kind": g.slot_kind,
                }
                for g in self.gates
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, doc: dict) -> "CircuitTemplate":
        try:
            gates = [GateOp(**g) for g in doc["gates"]]
            tpl = cls(doc["id"], int(doc["num_qubits"]), gates)
        except (KeyError, TypeError, ValueError) as exc:
            raise TemplateError(f"invalid template document: {exc}") from exc
        for key in ("num_params", "num_inputs"):
            if key in doc and doc[key] != getattr(tpl, key):
                raise TemplateError(f"{key} is {doc[key]} but the gate list implies {getattr(tpl, key)}")
        return tpl


def _ring(n):
    if n == 2:
        return [(0, 1)]
    return [(i, (i + 1) % n) for i in range(n)]


def embedding_gates(num_qubits: int) -> list[GateOp]:
    return [GateOp(GateKind.RY, q, angle_slot=q, slot_kind="input") for q in range(num_qubits)]


def builtin_template(name: str, num_qubits: int, layers: int = 1) -> CircuitTemplate:
    """Instantiate one of the six built-in families."""
    if name not in FAMILIES:
        raise TemplateError(f"unknown template {name!r}; valid names: {', '.join(FAMILIES)}")
    if layers < 1:
        raise TemplateError(f"layers must be >= 1, got {layers}")
    min_qubits = 2 if name in _ENTANGLING else 1
    if num_qubits < min_qubits:
        raise TemplateError(f"{name} needs at least {min_qubits} qubits, got {num_qubits}")

    n = num_qubits
    gates = embedding_gates(n)
    slot = 0

    def rot(kind, q, control=None):
        nonlocal slot
        gates.append(GateOp(kind, q, control=control, angle_slot=slot, slot_kind="param"))
        slot += 1

    for _ in range(layers):
        first = GateKind.RX if name == "vqc4" else GateKind.RY
        for q in range(n):
            rot(first, q)
        if name in ("vqc1", "vqc4"):
            for q in range(n):
                rot(GateKind.RZ, q)
        if name == "vqc1":
            gates.extend(GateOp(GateKind.CNOT, t, control=c) for c, t in _ring(n))
        elif name == "vqc2":
            gates.extend(GateOp(GateKind.CNOT, q + 1, control=q) for q in range(n - 1))
        elif name == "vqc3":
            for c, t in _ring(n):
                rot(GateKind.CRZ, t, control=c)
        elif name == "vqc4":
            gates.extend(GateOp(GateKind.CZ, t, control=c) for c, t in _ring(n))
        elif name == "vqc5":
            gates.extend(GateOp(GateKind.CNOT, j, control=i) for i in range(n) for j in range(i + 1, n))
    return CircuitTemplate(f"{name}-q{n}-l{layers}", n, gates)


def expected_param_count(name: str, num_qubits: int, layers: int) -> int:
    """Closed-form trainable-slot count of a built-in family."""
    n = num_qubits
    per_layer = {
        "vqc1": 2 * n,
        "vqc2": n,
        "vqc3": n + len(_ring(n)),
        "vqc4": 2 * n,
        "vqc5": n,
        "vqc6": n,
    }[name]
    return per_layer * layers


def embed_inputs(features, scale: float = EMBED_SCALE) -> np.ndarray:
    """Map tanh-bounded features in (-1, 1) to rotation angles."""
    x = np.asarray(features, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(np.abs(x) >= 1.0):
        raise ValueError("embedded features must lie strictly inside (-1, 1); apply tanh first")
    return scale * x


@dataclass(frozen=True, eq=False)
class BoundCircuit:
    template: CircuitTemplate
    params: np.ndarray
    inputs: np.ndarray

    def __post_init__(self):
        params = np.asarray(self.params, dtype=float).reshape(-1)
        inputs = np.asarray(self.inputs, dtype=float).reshape(-1)
        if params.size != self.template.num_params:
            raise ValueError(f"expected {self.template.num_params} params, got {params.size}")
        if inputs.size != self.template.num_inputs:
            raise ValueError(f"expected {self.template.num_inputs} inputs, got {inputs.size}")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "inputs", inputs)


def run_angles(template: CircuitTemplate, angles: np.ndarray) -> np.ndarray:
    """Execute the template with explicit per-gate angles; returns raw amplitudes."""
    ops, targets, controls, _ = template.program
    amps = zero_amplitudes(template.num_qubits)
    kernels.run_program(amps, template.num_qubits, ops, targets, controls,
                        np.ascontiguousarray(angles, dtype=np.float64))
    return amps


def measure_angles(template: CircuitTemplate, angles: np.ndarray) -> np.ndarray:
    amps = run_angles(template, angles)
    return np.clip(kernels.expectation_z_all(amps, template.num_qubits), -1.0, 1.0)


def run(bound: BoundCircuit) -> Statevector:
    tpl = bound.template
    return Statevector(tpl.num_qubits, run_angles(tpl, tpl.gate_angles(bound.params, bound.inputs)))


def measure_outputs(bound: BoundCircuit) -> np.ndarray:
    """<Z_i> for every qubit of the executed circuit."""
    tpl = bound.template
    return measure_angles(tpl, tpl.gate_angles(bound.params, bound.inputs))


def describe(template: CircuitTemplate) -> str:
    """Human-readable gate listing."""
    lines = [
        f"template {template.id}: {template.num_qubits} qubits, "
        f"{template.num_params} trainable slots, {template.num_inputs} input slots",
    ]
    for i, g in enumerate(template.gates):
        where = f"q{g.target}" if g.control is None else f"q{g.control}->q{g.target}"
        slot = "" if g.angle_slot is None else f"  {g.slot_kind}[{g.angle_slot}]"
        lines.append(f"{i:4d}  {g.kind.value:<5s} {where}{slot}")
    return "\n".join(lines)


def custom_template(id: str, num_qubits: int, gates: Sequence[GateOp], embed: bool = True) -> CircuitTemplate:
    """Template from an explicit gate list, optionally prefixed by the RY embedding."""
    prefix = embedding_gates(num_qubits) if embed else []
    return CircuitTemplate(id, num_qubits, [*prefix, *gates])
