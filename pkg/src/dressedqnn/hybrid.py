"""The dressed quantum classifier.

    features -> dense (tanh) -> angle embedding -> VQC -> <Z_i> -> dense (softmax)

Gradients flow through the circuit by the parameter-shift rule: the
post-net input gradient is contracted with the circuit Jacobian for the
trainable angles, and through the input columns (times the embedding scale
and the tanh derivative) into the pre-net.
"""
from __future__ import annotations

import copy
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .circuits import EMBED_SCALE, BoundCircuit, CircuitTemplate, TemplateError, builtin_template, measure_outputs
from .data import DataError, Dataset, stream
from .gradients import parameter_shift_jacobian
from .nn import (
    DenseLayer,
    NonFiniteError,
    OptimizerState,
    cross_entropy_logit_grad,
    cross_entropy_loss,
    dense_backward,
    dense_forward,
    optimizer_step,
    softmax,
)

FORMAT_VERSION = 1
NUM_CLASSES = 2
# tanh saturates to exactly +-1.0 in float64 for |z| > ~19; keep angles in the open interval
_TANH_LIMIT = float(np.nextafter(1.0, 0.0))


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every offending key."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ModelFileError(DataError):
    pass


class ModelVersionError(ModelFileError):
    pass


class MalformedModelError(ModelFileError):
    pass


class ModelShapeError(ModelFileError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 16
    learning_rate: float = 0.01
    optimizer: str = "adam"
    momentum: float = 0.0
    step_size: int = 1
    gamma: float = 1.0
    qubits: int = 2
    template: str = "vqc1"
    layers: int = 1
    seed: int = 0
    freeze_pre_net: bool = False

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        known = {f.name: f for f in fields(cls)}
        problems = [f"unknown key {k!r}" for k in doc if k not in known]
        values = {}
        for key, value in doc.items():
            if key not in known:
                continue
            want = known[key].type
            if want == "bool":
                ok = isinstance(value, bool)
            elif want == "int":
                ok = isinstance(value, int) and not isinstance(value, bool)
            elif want == "float":
                ok = isinstance(value, (int, float)) and not isinstance(value, bool)
            else:
                ok = isinstance(value, str)
            if not ok:
                problems.append(f"{key!r} must be {want}, got {value!r}")
            else:
                values[key] = float(value) if want == "float" else value
        cfg = cls(**values)
        try:
            cfg.validate()
        except ConfigError as exc:
            problems.extend(exc.problems)
        if problems:
            raise ConfigError(problems)
        return cfg

    def validate(self, train_size: Optional[int] = None):
        problems = []
        for key in ("batch_size", "qubits", "layers", "step_size"):
            if getattr(self, key) < 1:
                problems.append(f"{key!r} must be >= 1")
        if self.epochs < 0:
            problems.append("'epochs' must be >= 0")
        if self.learning_rate < 0:
            problems.append("'learning_rate' must be >= 0")
        if self.gamma <= 0:
            problems.append("'gamma' must be > 0")
        if self.momentum < 0:
            problems.append("'momentum' must be >= 0")
        if self.optimizer.lower() not in ("adam", "sgd"):
            problems.append(f"'optimizer' must be 'adam' or 'sgd', got {self.optimizer!r}")
        try:
            builtin_template(self.template, self.qubits, max(self.layers, 1))
        except TemplateError as exc:
            problems.append(f"'template': {exc}")
        if train_size is not None and self.batch_size > train_size:
            problems.append(f"'batch_size' {self.batch_size} exceeds the {train_size} training samples")
        if problems:
            raise ConfigError(problems)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class HybridModel:
    pre_net: DenseLayer
    template: CircuitTemplate
    params: np.ndarray
    post_net: DenseLayer
    metadata: dict = field(default_factory=dict)
    freeze_pre_net: bool = False

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float).reshape(-1)
        n = self.template.num_qubits
        if self.pre_net.out_dim != n or self.post_net.in_dim != n:
            raise ModelShapeError(
                f"pre_net out_dim {self.pre_net.out_dim}, circuit width {n} and "
                f"post_net in_dim {self.post_net.in_dim} must agree"
            )
        if self.template.num_inputs != n:
            raise ModelShapeError(f"circuit has {self.template.num_inputs} input slots for {n} qubits")
        if self.params.size != self.template.num_params:
            raise ModelShapeError(f"{self.params.size} circuit params for a template with {self.template.num_params}")
        if self.post_net.out_dim != NUM_CLASSES:
            raise ModelShapeError(f"post_net must have {NUM_CLASSES} outputs")

    @classmethod
    def create(cls, feature_dim: int, config: TrainConfig) -> "HybridModel":
        rng = stream(config.seed, "init")
        tpl = builtin_template(config.template, config.qubits, config.layers)
        pre = DenseLayer.init(feature_dim, config.qubits, "tanh", rng)
        params = rng.uniform(0.0, 2.0 * math.pi, tpl.num_params)
        post = DenseLayer.init(config.qubits, NUM_CLASSES, "softmax", rng)
        meta = {"seed": config.seed, "config": config.to_dict(), "feature_dim": feature_dim}
        return cls(pre, tpl, params, post, meta, config.freeze_pre_net)

    @property
    def feature_dim(self) -> int:
        return self.pre_net.in_dim

    def copy(self) -> "HybridModel":
        return HybridModel(self.pre_net.copy(), self.template, self.params.copy(), self.post_net.copy(),
                           copy.deepcopy(self.metadata), self.freeze_pre_net)

    def get_flat(self) -> np.ndarray:
        return np.concatenate([
            self.pre_net.weights.ravel(), self.pre_net.bias,
            self.params,
            self.post_net.weights.ravel(), self.post_net.bias,
        ])

    def set_flat(self, vec: np.ndarray) -> None:
        parts = np.split(np.asarray(vec, dtype=float), np.cumsum(self._sizes())[:-1])
        self.pre_net.weights = parts[0].reshape(self.pre_net.weights.shape).copy()
        self.pre_net.bias = parts[1].copy()
        self.params = parts[2].copy()
        self.post_net.weights = parts[3].reshape(self.post_net.weights.shape).copy()
        self.post_net.bias = parts[4].copy()

    def _sizes(self):
        return [self.pre_net.weights.size, self.pre_net.bias.size, self.params.size,
                self.post_net.weights.size, self.post_net.bias.size]


@dataclass
class Gradients:
    pre_weights: np.ndarray
    pre_bias: np.ndarray
    params: np.ndarray
    post_weights: np.ndarray
    post_bias: np.ndarray
    loss: float = 0.0

    def flat(self) -> np.ndarray:
        return np.concatenate([self.pre_weights.ravel(), self.pre_bias, self.params,
                               self.post_weights.ravel(), self.post_bias])


def _check_features(model, x):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != model.feature_dim:
        raise ValueError(f"feature length {x.size} does not match model feature_dim {model.feature_dim}")
    return x


def _forward_parts(model: HybridModel, x):
    h = np.clip(dense_forward(model.pre_net, x), -_TANH_LIMIT, _TANH_LIMIT)
    bound = BoundCircuit(model.template, model.params, EMBED_SCALE * h)
    z = measure_outputs(bound)
    probs = dense_forward(model.post_net, z)
    return h, bound, z, probs


def forward(model: HybridModel, features) -> np.ndarray:
    """Class probabilities [p(label 0), p(label 1)]."""
    return _forward_parts(model, _check_features(model, features))[3]


def backward(model: HybridModel, features, label: int) -> Gradients:
    """Cross-entropy gradient of every model parameter for one sample."""
    x = _check_features(model, features)
    h, bound, z, probs = _forward_parts(model, x)
    g_logits = cross_entropy_logit_grad(probs, label)
    (d_post_w, d_post_b), g_z = dense_backward(model.post_net, z, g_logits)
    jac = parameter_shift_jacobian(bound, wrt_inputs=not model.freeze_pre_net)
    d_params = g_z @ jac.by_param
    if model.freeze_pre_net:
        d_pre_w = np.zeros_like(model.pre_net.weights)
        d_pre_b = np.zeros_like(model.pre_net.bias)
    else:
        g_h = (g_z @ jac.by_input) * EMBED_SCALE
        g_pre = g_h * (1.0 - h * h)
        d_pre_w = np.outer(g_pre, x)
        d_pre_b = g_pre
    return Gradients(d_pre_w, d_pre_b, d_params, d_post_w, d_post_b, cross_entropy_loss(probs, label))


def predict_scores(model: HybridModel, features) -> np.ndarray:
    """Positive-class probability per row."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if x.shape[1] != model.feature_dim:
        raise ValueError(f"data has {x.shape[1]} features, model expects {model.feature_dim}")
    return np.array([forward(model, row)[1] for row in x])


def mean_loss(model: HybridModel, ds: Dataset) -> float:
    return float(np.mean([cross_entropy_loss(forward(model, x), int(y)) for x, y in zip(ds.features, ds.labels)]))


def _accuracy(scores, labels):
    return float(np.mean((scores >= 0.5).astype(np.int64) == labels))


@dataclass
class TrainResult:
    model: HybridModel  # best validation checkpoint
    final_model: HybridModel
    history: list
    best_epoch: int


def train(model: HybridModel, data: Dataset, config: TrainConfig, threads: int = 1) -> TrainResult:
    """Minibatch training on the ``train`` split, checkpointing on ``val`` accuracy.

    ``model`` is not modified. Per-sample gradients within a batch may be
    computed on ``threads`` workers; they are always summed in sample order.
    """
    train_ds = data.subset("train")
    val_ds = data.subset("val")
    config.validate(train_size=len(train_ds))
    work = model.copy()
    work.freeze_pre_net = config.freeze_pre_net
    work.metadata.update(seed=config.seed, config=config.to_dict())
    rng = stream(config.seed, "training")
    opt = OptimizerState(config.optimizer, config.learning_rate, momentum=config.momentum)
    history = []
    best, best_epoch, best_acc = work.copy(), 0, -1.0
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for epoch in range(1, config.epochs + 1):
            opt.learning_rate = config.learning_rate * config.gamma ** ((epoch - 1) // config.step_size)
            order = rng.permutation(len(train_ds))
            for b_idx, start in enumerate(range(0, len(order), config.batch_size)):
                batch = order[start:start + config.batch_size]

                def grad_of(i):
                    return backward(work, train_ds.features[i], int(train_ds.labels[i]))

                grads = list(pool.map(grad_of, batch)) if pool else [grad_of(i) for i in batch]
                total = np.zeros_like(work.get_flat())
                loss = 0.0
                for g in grads:
                    total += g.flat()
                    loss += g.loss
                if not math.isfinite(loss):
                    raise NonFiniteError(f"non-finite loss at epoch {epoch}, batch {b_idx}")
                try:
                    new, opt = optimizer_step(opt, work.get_flat(), total / len(batch))
                except NonFiniteError as exc:
                    raise NonFiniteError(f"epoch {epoch}, batch {b_idx}: {exc}") from exc
                work.set_flat(new)
            train_scores = predict_scores(work, train_ds.features)
            val_acc = _accuracy(predict_scores(work, val_ds.features), val_ds.labels)
            entry = {
                "epoch": epoch,
                "loss": mean_loss(work, train_ds),
                "train_acc": _accuracy(train_scores, train_ds.labels),
                "val_acc": val_acc,
            }
            if not math.isfinite(entry["loss"]):
                raise NonFiniteError(f"non-finite training loss after epoch {epoch}")
            history.append(entry)
            if val_acc > best_acc:
                best, best_epoch, best_acc = work.copy(), epoch, val_acc
    finally:
        if pool:
            pool.shutdown()
    return TrainResult(best, work, history, best_epoch)


def write_history_csv(history, path):
    with open(path, "w") as fh:
        fh.write("epoch,loss,train_acc,val_acc\n")
        for h in history:
            fh.write(f"{h['epoch']},{h['loss']!r},{h['train_acc']!r},{h['val_acc']!r}\n")


def _layer_doc(layer: DenseLayer):
    return {"weights": layer.weights.tolist(), "bias": layer.bias.tolist(), "activation": layer.activation}


def model_to_dict(model: HybridModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "template": model.template.to_dict(),
        "pre_net": _layer_doc(model.pre_net),
        "params": model.params.tolist(),
        "post_net": _layer_doc(model.post_net),
        "freeze_pre_net": model.freeze_pre_net,
        "metadata": model.metadata,
    }


def save_model(model: HybridModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")


def model_from_dict(doc) -> HybridModel:
    if not isinstance(doc, dict):
        raise MalformedModelError("model document must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"unsupported model format_version {version!r}; expected {FORMAT_VERSION}")
    try:
        tpl = CircuitTemplate.from_dict(doc["template"])
        pre = DenseLayer(np.array(doc["pre_net"]["weights"], dtype=float), doc["pre_net"]["bias"],
                         doc["pre_net"]["activation"])
        post = DenseLayer(np.array(doc["post_net"]["weights"], dtype=float), doc["post_net"]["bias"],
                          doc["post_net"]["activation"])
        params = np.array(doc["params"], dtype=float)
        freeze = bool(doc.get("freeze_pre_net", False))
        meta = doc.get("metadata", {})
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedModelError(f"malformed model file: {exc}") from exc
    if pre.activation != "tanh" or post.activation != "softmax":
        raise MalformedModelError("pre_net must use tanh and post_net softmax")
    return HybridModel(pre, tpl, params, post, meta, freeze)


def load_model(path) -> HybridModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedModelError(f"{path}: not valid JSON ({exc})") from exc
    except OSError as exc:
        raise ModelFileError(f"cannot read model {path}: {exc}") from exc
    return model_from_dict(doc)
