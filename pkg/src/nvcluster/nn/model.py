"""Histogram-to-spin-state regression network.

Normalized histogram -> 1-D convolution -> ReLU -> max-pool -> dense stack
(ReLU) -> linear output with one unit per joint spin basis state. Training
minimizes mean squared error plus an L2 penalty on weight tensors (biases
are not penalized) with Adam. Raw outputs are clipped to [0, 1] and
renormalized to give a probability vector.
"""
from __future__ import annotations

import copy
import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from nvcluster.errors import ModelFormatError, ParameterError, TrainingError
from nvcluster.nn import layers
from nvcluster.rng import SeedLike, make_rng

log = logging.getLogger(__name__)

FORMAT = "nvcluster-readout-model"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Architecture:
    input_length: int
    output_width: int
    kernel_size: int = 5
    channels: int = 8
    pool: int = 2
    dense: tuple[int, ...] = (64, 32)

    def __post_init__(self):
        object.__setattr__(self, "dense", tuple(int(d) for d in self.dense))
        if self.input_length < self.kernel_size:
            raise ParameterError("input shorter than the convolution kernel")
        if (self.input_length - self.kernel_size + 1) // self.pool < 1:
            raise ParameterError("pooling window larger than the conv output")
        if self.output_width < 2 or self.output_width & (self.output_width - 1):
            raise ParameterError("output width must be 2**N with N >= 1")

    @property
    def conv_length(self) -> int:
        return self.input_length - self.kernel_size + 1

    @property
    def flat_features(self) -> int:
        return self.channels * (self.conv_length // self.pool)

    def shapes(self) -> dict[str, tuple[int, ...]]:
        shapes = {"conv_W": (self.channels, 1, self.kernel_size), "conv_b": (self.channels,)}
        prev = self.flat_features
        for i, width in enumerate(self.dense):
            shapes[f"dense{i}_W"] = (prev, width)
            shapes[f"dense{i}_b"] = (width,)
            prev = width
        shapes["out_W"] = (prev, self.output_width)
        shapes["out_b"] = (self.output_width,)
        return shapes


@dataclass
class ReadoutModel:
    """Architecture, weights and input normalization of a trained readout."""

    arch: Architecture
    params: dict[str, np.ndarray]
    n_max: int
    input_scale: float

    def __post_init__(self):
        expected = self.arch.shapes()
        if set(expected) != set(self.params):
            raise ParameterError(f"parameter names {sorted(self.params)} do not match architecture")
        for name, shape in expected.items():
            if tuple(self.params[name].shape) != shape:
                raise ParameterError(
                    f"{name} has shape {self.params[name].shape}, expected {shape}")
        if self.n_max + 1 != self.arch.input_length:
            raise ParameterError("n_max inconsistent with the input length")

    @property
    def n_emitters(self) -> int:
        return int(round(math.log2(self.arch.output_width)))

    def weight_names(self) -> list[str]:
        return [k for k in self.params if k.endswith("_W")]

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Calibrated labels for a batch of unit-mass histograms (K, n_max + 1)."""
        return calibrate(forward_raw(self, np.asarray(X, dtype=float)))

    def copy(self) -> "ReadoutModel":
        return ReadoutModel(self.arch, {k: v.copy() for k, v in self.params.items()},
                            self.n_max, self.input_scale)


def init_model(arch: Architecture, seed: SeedLike = 0, input_scale: float | None = None) -> ReadoutModel:
    """He-normal weights, zero biases."""
    rng = make_rng(seed)
    params = {}
    for name, shape in arch.shapes().items():
        if name.endswith("_b"):
            params[name] = np.zeros(shape)
        else:
            fan_in = int(np.prod(shape[1:])) if name == "conv_W" else shape[0]
            params[name] = rng.normal(0.0, math.sqrt(2.0 / fan_in), shape)
    scale = float(arch.input_length) if input_scale is None else float(input_scale)
    return ReadoutModel(arch, params, arch.input_length - 1, scale)


def _forward(model: ReadoutModel, X: np.ndarray):
    p = model.params
    caches = {}
    h = (X * model.input_scale)[:, None, :]
    h, caches["conv"] = layers.conv1d_forward(h, p["conv_W"], p["conv_b"])
    h, caches["conv_relu"] = layers.relu_forward(h)
    h, caches["pool"] = layers.maxpool1d_forward(h, model.arch.pool)
    caches["flat_shape"] = h.shape
    h = h.reshape(h.shape[0], -1)
    for i in range(len(model.arch.dense)):
        h, caches[f"dense{i}"] = layers.dense_forward(h, p[f"dense{i}_W"], p[f"dense{i}_b"])
        h, caches[f"dense{i}_relu"] = layers.relu_forward(h)
    out, caches["out"] = layers.dense_forward(h, p["out_W"], p["out_b"])
    return out, caches


def _backward(model: ReadoutModel, dout: np.ndarray, caches) -> dict[str, np.ndarray]:
    grads = {}
    d, grads["out_W"], grads["out_b"] = layers.dense_backward(dout, caches["out"])
    for i in reversed(range(len(model.arch.dense))):
        d = layers.relu_backward(d, caches[f"dense{i}_relu"])
        d, grads[f"dense{i}_W"], grads[f"dense{i}_b"] = layers.dense_backward(d, caches[f"dense{i}"])
    d = d.reshape(caches["flat_shape"])
    d = layers.maxpool1d_backward(d, caches["pool"])
    d = layers.relu_backward(d, caches["conv_relu"])
    _, grads["conv_W"], grads["conv_b"] = layers.conv1d_backward(d, caches["conv"])
    return grads


def forward_raw(model: ReadoutModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(X)
    if X.shape[1] != model.arch.input_length:
        raise ParameterError(
            f"input length {X.shape[1]} does not match model input {model.arch.input_length}")
    return _forward(model, X)[0]


def calibrate(raw: np.ndarray) -> np.ndarray:
    """Clip raw outputs to [0, 1] and renormalize each row to unit sum."""
    p = np.clip(np.atleast_2d(raw), 0.0, 1.0)
    s = p.sum(axis=1, keepdims=True)
    uniform = np.full_like(p, 1.0 / p.shape[1])
    return np.where(s > 0, p / np.where(s > 0, s, 1.0), uniform)


def forward(model: ReadoutModel, histogram):
    """Raw output vector and calibrated SpinStateLabel for one unit-mass histogram."""
    from nvcluster.scc import SpinStateLabel

    x = np.asarray(histogram, dtype=float)
    if x.ndim != 1 or x.size != model.arch.input_length:
        raise ParameterError(
            f"histogram length {x.size} does not match model input {model.arch.input_length}")
    if abs(x.sum() - 1.0) > 1e-6:
        raise ParameterError("histogram must be normalized to unit mass")
    raw = forward_raw(model, x[None, :])[0]
    return raw, SpinStateLabel(calibrate(raw)[0])


def l2_penalty(params: dict[str, np.ndarray]) -> float:
    return float(sum(np.sum(w * w) for k, w in params.items() if k.endswith("_W")))


def loss(predictions, labels, weights: dict[str, np.ndarray] | Sequence[np.ndarray] | None,
         lam: float) -> float:
    """Mean squared error over batch and components plus lam * sum of squared weights.

    ``weights`` is a parameter dict (only ``*_W`` entries are penalized) or a
    sequence of weight tensors.
    """
    predictions = np.asarray(predictions, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if predictions.shape != labels.shape:
        raise ParameterError("predictions and labels must have the same shape")
    mse = float(np.mean((predictions - labels) ** 2))
    if not lam or weights is None:
        return mse
    if isinstance(weights, dict):
        return mse + lam * l2_penalty(weights)
    return mse + lam * float(sum(np.sum(np.asarray(w) ** 2) for w in weights))


def loss_and_grads(model: ReadoutModel, X: np.ndarray, Y: np.ndarray, lam: float):
    out, caches = _forward(model, X)
    value = loss(out, Y, model.params, lam)
    dout = 2.0 * (out - Y) / out.size
    grads = _backward(model, dout, caches)
    if lam:
        for k in model.weight_names():
            grads[k] = grads[k] + 2.0 * lam * model.params[k]
    return value, grads


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 2000
    batch_size: int = 32
    l2: float = 1e-4
    seed: int = 0
    patience: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs <= 0 or self.batch_size <= 0 or self.patience <= 0:
            raise ParameterError("learning rate, epochs, batch size and patience must be positive")
        if self.l2 < 0:
            raise ParameterError("L2 coefficient must be >= 0")


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False
    test_pearson: float | None = None
    test_pearson_degenerate: bool = False
    component_pearson: list[float] = field(default_factory=list)

    @property
    def epochs_completed(self) -> int:
        return len(self.train_loss)

    def loss_curve_text(self, header: dict | None = None) -> str:
        lines = [f"# {k}: {v}" for k, v in (header or {}).items()]
        lines.append("epoch\ttrain_loss\tval_loss")
        for i, (a, b) in enumerate(zip(self.train_loss, self.val_loss), start=1):
            lines.append(f"{i}\t{a!r}\t{b!r}")
        return "\n".join(lines) + "\n"


class PearsonResult(NamedTuple):
    r: float
    degenerate: bool


def pearson(predictions, labels) -> PearsonResult:
    """Sample Pearson correlation over all samples and components, flattened.

    Returns r = 0 with ``degenerate=True`` when either side has zero variance.
    """
    x = np.asarray(predictions, dtype=float).ravel()
    y = np.asarray(labels, dtype=float).ravel()
    if x.size != y.size or x.size < 2:
        raise ParameterError("pearson needs two equally sized inputs with >= 2 values")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.sqrt(xc @ xc))
    sy = float(np.sqrt(yc @ yc))
    if sx == 0.0 or sy == 0.0:
        return PearsonResult(0.0, True)
    r = float(xc @ yc) / (sx * sy)
    return PearsonResult(max(-1.0, min(1.0, r)), False)


def split_by_id(ids: Sequence[str], validation_fraction: float, seed: SeedLike = 0):
    """Disjoint train/validation index arrays keyed by unique record ids."""
    ids = np.asarray(ids)
    if len(set(ids.tolist())) != ids.size:
        raise ParameterError("record ids must be unique")
    rng = make_rng(seed)
    order = rng.permutation(ids.size)
    n_val = int(round(validation_fraction * ids.size))
    val, train = np.sort(order[:n_val]), np.sort(order[n_val:])
    if set(ids[val].tolist()) & set(ids[train].tolist()):
        raise ParameterError("train and validation ids overlap")
    return train, val


def train(model: ReadoutModel, train_set, validation_set, config: TrainConfig = TrainConfig(),
          test_set=None, train_ids=None, validation_ids=None):
    """Adam on MSE + L2 with early stopping on validation loss.

    ``train_set`` and ``validation_set`` are ``(X, Y)`` pairs of unit-mass
    histograms and labels. The returned model holds the weights from the
    epoch with the lowest validation loss. Training is deterministic for a
    fixed ``config.seed``.
    """
    if train_ids is not None and validation_ids is not None:
        if set(map(str, train_ids)) & set(map(str, validation_ids)):
            raise ParameterError("training and validation records must be disjoint")
    X, Y = (np.asarray(a, dtype=float) for a in train_set)
    Xv, Yv = (np.asarray(a, dtype=float) for a in validation_set)
    for data, target in ((X, Y), (Xv, Yv)):
        if data.shape[1] != model.arch.input_length or target.shape[1] != model.arch.output_width:
            raise ParameterError("dataset shape does not match the model architecture")
    with np.errstate(over="ignore", invalid="ignore"):
        return _train(model.copy(), X, Y, Xv, Yv, config, test_set)


def _train(model, X, Y, Xv, Yv, config, test_set):
    rng = make_rng(config.seed)
    m = {k: np.zeros_like(v) for k, v in model.params.items()}
    v = {k: np.zeros_like(v) for k, v in model.params.items()}
    report = TrainReport()
    best_val = math.inf
    best_params = copy.deepcopy(model.params)
    wait = 0
    step = 0
    n = X.shape[0]
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            value, grads = loss_and_grads(model, X[idx], Y[idx], config.l2)
            if not math.isfinite(value):
                raise TrainingError(
                    f"loss became {value} at epoch {epoch + 1}; lower the learning rate "
                    f"(currently {config.learning_rate:g})")
            step += 1
            b1t = 1.0 - config.beta1 ** step
            b2t = 1.0 - config.beta2 ** step
            for k, g in grads.items():
                m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g
                v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g * g
                model.params[k] -= config.learning_rate * (m[k] / b1t) / (np.sqrt(v[k] / b2t) + config.eps)
            batch_losses.append(value * len(idx))
        report.train_loss.append(float(sum(batch_losses) / n))
        val = loss(forward_raw(model, Xv), Yv, model.params, config.l2)
        if not math.isfinite(val):
            raise TrainingError(f"validation loss became {val} at epoch {epoch + 1}; "
                                "lower the learning rate")
        report.val_loss.append(float(val))
        if val < best_val:
            best_val = val
            best_params = copy.deepcopy(model.params)
            report.best_epoch = epoch + 1
            wait = 0
        else:
            wait += 1
            if wait >= config.patience:
                report.stopped_early = True
                break
    model.params = best_params
    if test_set is not None:
        evaluate(model, test_set, report)
    return model, report


def evaluate(model: ReadoutModel, test_set, report: TrainReport | None = None) -> TrainReport:
    Xt, Yt = (np.asarray(a, dtype=float) for a in test_set)
    pred = model.predict(Xt)
    report = report or TrainReport()
    res = pearson(pred, Yt)
    report.test_pearson = res.r
    report.test_pearson_degenerate = res.degenerate
    report.component_pearson = [pearson(pred[:, j], Yt[:, j]).r for j in range(Yt.shape[1])]
    return report


def _checksum(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def model_to_document(model: ReadoutModel) -> dict:
    payload = {
        "architecture": {**asdict(model.arch), "dense": list(model.arch.dense)},
        "normalization": {"n_max": model.n_max, "input_scale": model.input_scale,
                          "unit_mass_input": True},
        "params": {k: {"shape": list(v.shape), "data": v.ravel().tolist()}
                   for k, v in sorted(model.params.items())},
    }
    return {"format": FORMAT, "version": FORMAT_VERSION, "checksum": _checksum(payload), **payload}


def model_from_document(doc: dict) -> ReadoutModel:
    try:
        if doc.get("format") != FORMAT:
            raise ModelFormatError(f"not a readout model file (format={doc.get('format')!r})")
        if doc.get("version") != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported model version {doc.get('version')!r}")
        payload = {k: doc[k] for k in ("architecture", "normalization", "params")}
        if _checksum(payload) != doc.get("checksum"):
            raise ModelFormatError("model checksum mismatch; file is corrupted")
        a = payload["architecture"]
        arch = Architecture(**{**a, "dense": tuple(a["dense"])})
        params = {}
        for k, entry in payload["params"].items():
            data = np.asarray(entry["data"], dtype=float)
            shape = tuple(entry["shape"])
            if data.size != int(np.prod(shape)):
                raise ModelFormatError(f"{k}: payload size does not match shape {shape}")
            params[k] = data.reshape(shape)
        norm = payload["normalization"]
        return ReadoutModel(arch, params, int(norm["n_max"]), float(norm["input_scale"]))
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from exc


def save_model(model: ReadoutModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_document(model)) + "\n")


def load_model(path) -> ReadoutModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    return model_from_document(doc)
