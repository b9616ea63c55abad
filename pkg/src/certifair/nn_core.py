"""Dense feed-forward binary classifiers: inference, loss, gradients, optimizer.

Networks are ReLU-activated hidden layers followed by a single affine output
unit read through a sigmoid.  The raw affine output ("logit") is the quantity
the verifier reasons about; class 1 means logit >= 0 (ties classify as 1 so
the counterexample predicate is total).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ._arrayops import sigmoid
from .errors import ConfigurationError, InputError, InternalError

PROB_CLIP = 1e-7  # probability clamp applied before any log
DEFAULT_LEARNING_RATE = 0.001
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class MLPNetwork:
    """Immutable network parameters.

    ``weights[i]`` has shape (fan_out, fan_in); ``biases[i]`` has shape
    (fan_out,).  The final layer always has fan_out 1 (binary head).
    Instances are never mutated after construction; training produces new
    networks, so values can be shared freely across threads and processes.
    """

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.weights) == 0 or len(self.weights) != len(self.biases):
            raise ConfigurationError("network needs matching weight/bias lists")
        prev = None
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ConfigurationError(f"layer {i}: weight/bias shapes inconsistent")
            if prev is not None and w.shape[1] != prev:
                raise ConfigurationError(
                    f"layer {i}: fan_in {w.shape[1]} does not match previous fan_out {prev}"
                )
            if w.shape[0] < 1 or w.shape[1] < 1:
                raise ConfigurationError(f"layer {i}: zero-width layer")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ConfigurationError(f"layer {i}: non-finite parameter")
            prev = w.shape[0]
        if self.weights[-1].shape[0] != 1:
            raise ConfigurationError("final layer must have exactly one output unit")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def layer_dims(self) -> list[int]:
        return [self.input_dim] + [w.shape[0] for w in self.weights]


class ForwardResult(NamedTuple):
    logit: float
    prob: float


def init_network(layer_dims: Sequence[int], seed: int) -> MLPNetwork:
    """Build a network with Xavier-uniform weights and zero biases.

    Deterministic for a fixed seed.  ``layer_dims`` lists every layer width,
    input first, and must end with 1.
    """
    dims = list(layer_dims)
    if len(dims) < 2:
        raise ConfigurationError("layer_dims needs at least an input and an output width")
    if any(d < 1 for d in dims):
        raise ConfigurationError("layer widths must be positive")
    if dims[-1] != 1:
        raise ConfigurationError("output layer width must be 1")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MLPNetwork(tuple(weights), tuple(biases))


def _check_input(net: MLPNetwork, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise InputError(f"input has shape {x.shape}, expected ({net.input_dim},)")
    if not np.isfinite(x).all():
        raise InputError("input contains non-finite components")
    return x


def forward(net: MLPNetwork, x) -> ForwardResult:
    """Evaluate the network on one input, returning (logit, prob)."""
    a = _check_input(net, x)
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        a = np.maximum(w @ a + b, 0.0)
    logit = float(net.weights[-1] @ a + net.biases[-1])
    return ForwardResult(logit, float(sigmoid(np.float64(logit))))


def forward_trace(net: MLPNetwork, x) -> list[np.ndarray]:
    """Pre-activation vectors of every layer (the last entry is the logit)."""
    a = _check_input(net, x)
    trace = []
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = w @ a + b
        trace.append(z)
        if i < net.n_layers - 1:
            a = np.maximum(z, 0.0)
    return trace


def forward_batch(net: MLPNetwork, X) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized forward over rows of ``X``; returns (logits, probs)."""
    A = np.asarray(X, dtype=np.float64)
    if A.ndim != 2 or A.shape[1] != net.input_dim:
        raise InputError(f"batch has shape {A.shape}, expected (n, {net.input_dim})")
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        A = np.maximum(A @ w.T + b, 0.0)
    logits = A @ net.weights[-1].T + net.biases[-1]
    logits = logits[:, 0]
    return logits, sigmoid(logits)


def predict(net: MLPNetwork, x) -> int:
    """Class in {0, 1}; 1 iff logit >= 0 (ties go to 1)."""
    return 1 if forward(net, x).logit >= 0.0 else 0


def predict_batch(net: MLPNetwork, X) -> np.ndarray:
    logits, _ = forward_batch(net, X)
    return (logits >= 0.0).astype(np.int64)


def bce_loss(prob: float, y: int) -> float:
    """Binary cross-entropy with the probability clamped to [1e-7, 1 - 1e-7]."""
    if y not in (0, 1):
        raise InputError(f"label must be 0 or 1, got {y!r}")
    p = min(max(float(prob), PROB_CLIP), 1.0 - PROB_CLIP)
    return -(y * math.log(p) + (1 - y) * math.log(1.0 - p))


def gradients(net: MLPNetwork, batch, cfg, prop=None, schema=None):
    """Reverse-mode gradients of the composite training loss over a batch.

    ``batch`` is a sequence of (x, y) pairs.  ``cfg`` is a TrainingConfig;
    when its regularizer is not "none" (and lambda_f > 0) the matching
    fairness surrogate term requires ``prop`` and ``schema``.  Returns a list
    of (dW, db) numpy arrays shaped like the network parameters.
    """
    from .losses import composite_loss_and_grads

    batch = list(batch)
    if not batch:
        raise InputError("gradient batch is empty")
    X = np.asarray([np.asarray(x, dtype=np.float64) for x, _ in batch])
    y = np.asarray([int(label) for _, label in batch], dtype=np.int64)
    grads, _, _ = composite_loss_and_grads(net, X, y, prop, schema, cfg)
    return grads


@dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators plus step counter and constants."""

    m_w: tuple[np.ndarray, ...]
    v_w: tuple[np.ndarray, ...]
    m_b: tuple[np.ndarray, ...]
    v_b: tuple[np.ndarray, ...]
    step: int
    learning_rate: float = DEFAULT_LEARNING_RATE
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def fresh(cls, net: MLPNetwork, learning_rate: float = DEFAULT_LEARNING_RATE) -> "AdamState":
        return cls(
            m_w=tuple(np.zeros_like(w) for w in net.weights),
            v_w=tuple(np.zeros_like(w) for w in net.weights),
            m_b=tuple(np.zeros_like(b) for b in net.biases),
            v_b=tuple(np.zeros_like(b) for b in net.biases),
            step=0,
            learning_rate=learning_rate,
        )


def adam_step(state: AdamState, net: MLPNetwork, grads) -> tuple[MLPNetwork, AdamState]:
    """One Adam update with bias correction; returns the new (net, state)."""
    grads = list(grads)
    if len(grads) != net.n_layers:
        raise InternalError("gradient list length does not match network depth")
    for (gw, gb), w, b in zip(grads, net.weights, net.biases):
        if gw.shape != w.shape or gb.shape != b.shape:
            raise InternalError("gradient shapes do not match network shapes")

    t = state.step + 1
    b1, b2, eps, lr = state.beta1, state.beta2, state.eps, state.learning_rate
    corr1 = 1.0 - b1**t
    corr2 = 1.0 - b2**t

    new_w, new_b = [], []
    m_w, v_w, m_b, v_b = [], [], [], []
    for i, (gw, gb) in enumerate(grads):
        mw = b1 * state.m_w[i] + (1.0 - b1) * gw
        vw = b2 * state.v_w[i] + (1.0 - b2) * gw * gw
        mb = b1 * state.m_b[i] + (1.0 - b1) * gb
        vb = b2 * state.v_b[i] + (1.0 - b2) * gb * gb
        new_w.append(net.weights[i] - lr * (mw / corr1) / (np.sqrt(vw / corr2) + eps))
        new_b.append(net.biases[i] - lr * (mb / corr1) / (np.sqrt(vb / corr2) + eps))
        m_w.append(mw)
        v_w.append(vw)
        m_b.append(mb)
        v_b.append(vb)

    new_net = MLPNetwork(tuple(new_w), tuple(new_b))
    new_state = AdamState(
        m_w=tuple(m_w),
        v_w=tuple(v_w),
        m_b=tuple(m_b),
        v_b=tuple(v_b),
        step=t,
        learning_rate=lr,
        beta1=b1,
        beta2=b2,
        eps=eps,
    )
    return new_net, new_state


def save_model(net: MLPNetwork, path) -> None:
    """Write the model file; float values round-trip exactly via repr."""
    layers = []
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        activation = "sigmoid" if i == net.n_layers - 1 else "relu"
        layers.append({"weights": w.tolist(), "bias": b.tolist(), "activation": activation})
    doc = {"input_dim": net.input_dim, "layers": layers}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path) -> MLPNetwork:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        layers = doc["layers"]
        input_dim = int(doc["input_dim"])
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"malformed model file {path}: {exc}") from exc
    if not layers:
        raise ConfigurationError(f"model file {path} has no layers")
    weights, biases = [], []
    for i, layer in enumerate(layers):
        expected = "sigmoid" if i == len(layers) - 1 else "relu"
        if layer.get("activation") != expected:
            raise ConfigurationError(
                f"model file {path}: layer {i} activation must be {expected!r}"
            )
        weights.append(np.asarray(layer["weights"], dtype=np.float64))
        biases.append(np.asarray(layer["bias"], dtype=np.float64))
    net = MLPNetwork(tuple(weights), tuple(biases))
    if net.input_dim != input_dim:
        raise ConfigurationError(
            f"model file {path}: input_dim {input_dim} does not match first layer"
        )
    return net
