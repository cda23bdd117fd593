"""Dense layers, cross-entropy and SGD/Adam for the classical parts of the model."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

ACTIVATIONS = ("tanh", "softmax", "identity")
LOSS_EPS = 1e-12


class NonFiniteError(FloatingPointError):
    pass


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray
    activation: str = "identity"

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        self.bias = np.asarray(self.bias, dtype=float).reshape(-1)
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.bias.shape != (self.out_dim,):
            raise ValueError(f"bias has length {self.bias.size}, expected {self.out_dim}")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise NonFiniteError("layer weights must be finite")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def init(cls, in_dim: int, out_dim: int, activation: str, rng: np.random.Generator) -> "DenseLayer":
        """Uniform(-1/sqrt(in_dim), 1/sqrt(in_dim)) initialization."""
        bound = 1.0 / np.sqrt(in_dim)
        w = rng.uniform(-bound, bound, size=(out_dim, in_dim))
        b = rng.uniform(-bound, bound, size=out_dim)
        return cls(w, b, activation)

    @classmethod
    def zeros(cls, in_dim: int, out_dim: int, activation: str) -> "DenseLayer":
        return cls(np.zeros((out_dim, in_dim)), np.zeros(out_dim), activation)

    def copy(self) -> "DenseLayer":
        return DenseLayer(self.weights.copy(), self.bias.copy(), self.activation)


def softmax(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    e = np.exp(z - np.max(z))
    return e / e.sum()


def activate(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(z)
    if kind == "softmax":
        return softmax(z)
    return z


def dense_forward(layer: DenseLayer, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (layer.in_dim,):
        raise ValueError(f"input has shape {x.shape}, layer expects ({layer.in_dim},)")
    return activate(layer.activation, layer.weights @ x + layer.bias)


def dense_backward(layer: DenseLayer, x, upstream):
    """Return ((dW, db), dx) for a scalar loss with gradient ``upstream`` at the output.

    A softmax layer passes ``upstream`` straight through: the caller supplies
    the fused softmax/cross-entropy gradient with respect to the logits.
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(upstream, dtype=float)
    if x.shape != (layer.in_dim,) or g.shape != (layer.out_dim,):
        raise ValueError(
            f"shape mismatch: input {x.shape}, upstream {g.shape} for a "
            f"{layer.in_dim}->{layer.out_dim} layer"
        )
    if layer.activation == "tanh":
        y = np.tanh(layer.weights @ x + layer.bias)
        g = g * (1.0 - y * y)
    return (np.outer(g, x), g.copy()), layer.weights.T @ g


def cross_entropy_loss(probabilities, label: int) -> float:
    p = np.asarray(probabilities, dtype=float)
    if not 0 <= label < p.size:
        raise ValueError(f"label {label} out of range for {p.size} classes")
    # floored rather than shifted: exact for p >= eps and never negative
    return float(-np.log(max(p[label], LOSS_EPS)))


def cross_entropy_logit_grad(probabilities, label: int) -> np.ndarray:
    """Gradient of cross-entropy w.r.t. the logits of a softmax output."""
    g = np.array(probabilities, dtype=float)
    if not 0 <= label < g.size:
        raise ValueError(f"label {label} out of range for {g.size} classes")
    g[label] -= 1.0
    return g


@dataclass
class OptimizerState:
    kind: str = "adam"
    learning_rate: float = 0.01
    momentum: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Optional[np.ndarray] = field(default=None, repr=False)
    v: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.kind = self.kind.lower()
        if self.kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.kind!r}")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")


def optimizer_step(state: OptimizerState, params, grads):
    """One update; mutates and returns ``state`` alongside the new parameters."""
    p = np.asarray(params, dtype=float)
    g = np.asarray(grads, dtype=float)
    if p.shape != g.shape:
        raise ValueError(f"params {p.shape} and grads {g.shape} differ in shape")
    if not np.all(np.isfinite(g)):
        bad = np.flatnonzero(~np.isfinite(g))
        raise NonFiniteError(f"non-finite gradient at indices {bad[:10].tolist()}")
    lr = state.learning_rate
    state.step += 1
    if state.kind == "sgd":
        if state.momentum:
            if state.m is None:
                state.m = np.zeros_like(p)
            state.m = state.momentum * state.m + g
            return p - lr * state.m, state
        return p - lr * g, state
    if state.m is None:
        state.m = np.zeros_like(p)
        state.v = np.zeros_like(p)
    state.m = state.beta1 * state.m + (1 - state.beta1) * g
    state.v = state.beta2 * state.v + (1 - state.beta2) * g * g
    m_hat = state.m / (1 - state.beta1 ** state.step)
    v_hat = state.v / (1 - state.beta2 ** state.step)
    return p - lr * m_hat / (np.sqrt(v_hat) + state.eps), state
