"""Small numpy MLP residual forecaster with hand-rolled backprop.

Consumes a normalized context window (flattened) and emits the horizon
residuals that denormalization recombines with the filter's forecast.
With identity activations the whole network collapses to one affine
map, which is the linear baseline used in the shift experiments.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError


class Activation(enum.Enum):
    IDENTITY = "identity"
    RELU = "relu"


@dataclass(frozen=True)
class MlpSpec:
    """Architecture and training schedule; widths are the hidden layers."""

    layer_widths: tuple[int, ...] = (64, 64)
    activation: Activation = Activation.RELU
    learning_rate: float = 0.01
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.activation, str):
            object.__setattr__(self, "activation", Activation(self.activation))
        object.__setattr__(self, "layer_widths", tuple(int(w) for w in self.layer_widths))
        if any(w < 1 for w in self.layer_widths):
            raise ValidationError("layer widths must be positive")
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ValidationError("learning_rate, epochs and batch_size must be positive")


@dataclass(frozen=True)
class TrainedModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    spec: MlpSpec
    train_loss_curve: np.ndarray
    input_shape: tuple[int, int]
    output_shape: tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "activation": self.spec.activation.value,
            "layer_widths": list(self.spec.layer_widths),
            "learning_rate": self.spec.learning_rate,
            "epochs": self.spec.epochs,
            "batch_size": self.spec.batch_size,
            "seed": self.spec.seed,
            "train_loss_curve": self.train_loss_curve.tolist(),
            "input_shape": list(self.input_shape),
            "output_shape": list(self.output_shape),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        spec = MlpSpec(
            tuple(d["layer_widths"]),
            Activation(d["activation"]),
            d["learning_rate"],
            d["epochs"],
            d["batch_size"],
            d["seed"],
        )
        return cls(
            [np.asarray(w, dtype=np.float64) for w in d["weights"]],
            [np.asarray(b, dtype=np.float64) for b in d["biases"]],
            spec,
            np.asarray(d["train_loss_curve"], dtype=np.float64),
            tuple(d["input_shape"]),
            tuple(d["output_shape"]),
        )


def init_layers(
    spec: MlpSpec, n_in: int, n_out: int, rng: np.random.Generator
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Glorot-uniform weights, zero biases."""
    widths = [n_in, *spec.layer_widths, n_out]
    weights, biases = [], []
    for a, b in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / (a + b))
        weights.append(rng.uniform(-limit, limit, size=(a, b)))
        biases.append(np.zeros(b))
    return weights, biases


def _forward(weights, biases, activation: Activation, x: np.ndarray):
    """Returns layer inputs (activations) and pre-activations for backprop."""
    acts = [x]
    pre = []
    h = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = h @ w + b
        pre.append(z)
        if i < last and activation is Activation.RELU:
            h = np.maximum(z, 0.0)
        else:
            h = z
        acts.append(h)
    return acts, pre


def _backward(weights, activation, acts, pre, targets):
    """MSE gradients for every weight and bias; loss averages all entries."""
    n = targets.size
    delta = 2.0 * (acts[-1] - targets) / n
    grads_w = [None] * len(weights)
    grads_b = [None] * len(weights)
    for i in range(len(weights) - 1, -1, -1):
        grads_w[i] = acts[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ weights[i].T
            if activation is Activation.RELU:
                delta = delta * (pre[i - 1] > 0.0)
    return grads_w, grads_b


def _stack_pairs(pairs) -> tuple[np.ndarray, np.ndarray, tuple[int, int], tuple[int, int]]:
    if not pairs:
        raise ValidationError("need at least one (context, target) pair")
    ctx0 = np.atleast_2d(np.asarray(pairs[0][0], dtype=np.float64))
    tgt0 = np.atleast_2d(np.asarray(pairs[0][1], dtype=np.float64))
    X = np.stack([np.atleast_2d(np.asarray(c, dtype=np.float64)).ravel() for c, _ in pairs])
    Y = np.stack([np.atleast_2d(np.asarray(t, dtype=np.float64)).ravel() for _, t in pairs])
    return X, Y, ctx0.shape, tgt0.shape


def train(spec: MlpSpec, pairs, val_pairs=None, patience: int = 10) -> TrainedModel:
    """Mini-batch SGD on MSE; deterministic given the seed.

    When validation pairs are supplied, training stops once validation
    MSE has not improved for ``patience`` consecutive epochs and the
    best-validation weights are returned; otherwise it runs the full
    epoch budget.
    """
    X, Y, in_shape, out_shape = _stack_pairs(pairs)
    rng = np.random.default_rng(spec.seed)
    weights, biases = init_layers(spec, X.shape[1], Y.shape[1], rng)

    Xv = Yv = None
    if val_pairs:
        Xv, Yv, _, _ = _stack_pairs(val_pairs)
    best_val = np.inf
    best_snapshot = None
    stall = 0

    losses = []
    n = X.shape[0]
    for epoch in range(spec.epochs):
        order = rng.permutation(n)
        for start in range(0, n, spec.batch_size):
            idx = order[start : start + spec.batch_size]
            acts, pre = _forward(weights, biases, spec.activation, X[idx])
            grads_w, grads_b = _backward(weights, spec.activation, acts, pre, Y[idx])
            for i in range(len(weights)):
                weights[i] -= spec.learning_rate * grads_w[i]
                biases[i] -= spec.learning_rate * grads_b[i]
        acts, _ = _forward(weights, biases, spec.activation, X)
        loss = float(np.mean((acts[-1] - Y) ** 2))
        if not np.isfinite(loss):
            raise NumericalError(f"training loss became non-finite at epoch {epoch}")
        losses.append(loss)
        if Xv is not None:
            acts_v, _ = _forward(weights, biases, spec.activation, Xv)
            val_loss = float(np.mean((acts_v[-1] - Yv) ** 2))
            if val_loss < best_val:
                best_val = val_loss
                best_snapshot = ([w.copy() for w in weights], [b.copy() for b in biases])
                stall = 0
            else:
                stall += 1
                if stall >= patience:
                    break
    if best_snapshot is not None:
        weights, biases = best_snapshot
    return TrainedModel(
        weights, biases, spec, np.asarray(losses), in_shape, out_shape
    )


def predict(model: TrainedModel, context) -> np.ndarray:
    """Pure feedforward evaluation of one context window."""
    ctx = np.atleast_2d(np.asarray(context, dtype=np.float64))
    if ctx.shape != model.input_shape:
        raise ValidationError(
            f"context shape {ctx.shape} does not match model input {model.input_shape}"
        )
    acts, _ = _forward(
        model.weights, model.biases, model.spec.activation, ctx.ravel()[None, :]
    )
    return acts[-1].reshape(model.output_shape)


def collapse_linear(model: TrainedModel) -> tuple[np.ndarray, np.ndarray]:
    """Fold an identity-activation network into a single (W, b) affine map."""
    if model.spec.activation is not Activation.IDENTITY:
        raise ValidationError("only identity-activation networks collapse to affine maps")
    W = model.weights[0]
    b = model.biases[0].copy()
    for w_i, b_i in zip(model.weights[1:], model.biases[1:]):
        b = b @ w_i + b_i
        W = W @ w_i
    return W, b


def gradient_check(spec: MlpSpec, sample, step: float = 1e-6) -> float:
    """Max relative error of analytic vs central finite-difference gradients."""
    context, target = sample
    X = np.atleast_2d(np.asarray(context, dtype=np.float64)).ravel()[None, :]
    Y = np.atleast_2d(np.asarray(target, dtype=np.float64)).ravel()[None, :]
    rng = np.random.default_rng(spec.seed)
    weights, biases = init_layers(spec, X.shape[1], Y.shape[1], rng)

    acts, pre = _forward(weights, biases, spec.activation, X)
    grads_w, grads_b = _backward(weights, spec.activation, acts, pre, Y)

    def loss() -> float:
        a, _ = _forward(weights, biases, spec.activation, X)
        return float(np.mean((a[-1] - Y) ** 2))

    worst = 0.0
    for params, grads in ((weights, grads_w), (biases, grads_b)):
        for p, g in zip(params, grads):
            flat = p.ravel()
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + step
                up = loss()
                flat[idx] = orig - step
                down = loss()
                flat[idx] = orig
                numeric = (up - down) / (2.0 * step)
                analytic = g.ravel()[idx]
                denom = max(abs(numeric), abs(analytic), 1e-8)
                worst = max(worst, abs(numeric - analytic) / denom)
    return worst
