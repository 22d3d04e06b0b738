"""Small numpy MLP: ReLU hidden layers, linear output, exact backprop and Adam.

Weights are stored row = output unit, so a layer maps ``x @ W.T + b``. Inputs
may be a single vector or a batch of row vectors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

CHECKPOINT_FORMAT = "constellation-rl/mlp"
CHECKPOINT_VERSION = 1


@dataclass
class MlpParameters:
    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("layer count does not match layer_sizes")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            want = (self.layer_sizes[k + 1], self.layer_sizes[k])
            if w.shape != want or b.shape != (want[0],):
                raise ValueError(f"layer {k}: expected weights {want}, got {w.shape} / {b.shape}")

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def arrays(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def copy(self) -> "MlpParameters":
        return MlpParameters(
            list(self.layer_sizes), [w.copy() for w in self.weights], [b.copy() for b in self.biases]
        )

    def zeros_like(self) -> "MlpParameters":
        return MlpParameters(
            list(self.layer_sizes),
            [np.zeros_like(w) for w in self.weights],
            [np.zeros_like(b) for b in self.biases],
        )

    def copy_from(self, other: "MlpParameters") -> None:
        for dst, src in zip(self.arrays(), other.arrays()):
            dst[...] = src

    def digest(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for a in self.arrays():
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()


def init_mlp(
    layer_sizes: Sequence[int], rng: np.random.Generator, zero_output: bool = True
) -> MlpParameters:
    """He-uniform hidden layers; the output layer starts at zero by default."""
    sizes = [int(s) for s in layer_sizes]
    weights, biases = [], []
    for k in range(len(sizes) - 1):
        fan_in, fan_out = sizes[k], sizes[k + 1]
        last = k == len(sizes) - 2
        if last and zero_output:
            w = np.zeros((fan_out, fan_in))
        else:
            limit = math.sqrt(6.0 / fan_in)
            w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return MlpParameters(sizes, weights, biases)


@dataclass
class ForwardTrace:
    inputs: list[np.ndarray]  # input to each layer
    preacts: list[np.ndarray]  # affine output of each layer
    params_id: int = 0


def forward(params: MlpParameters, x: np.ndarray) -> tuple[np.ndarray, ForwardTrace]:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.layer_sizes[0]:
        raise ValueError(f"input has {x.shape[-1]} features, network expects {params.layer_sizes[0]}")
    inputs, preacts = [], []
    a = x
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(a)
        z = a @ w.T + b
        preacts.append(z)
        a = z if k == params.num_layers - 1 else np.maximum(z, 0.0)
    return a, ForwardTrace(inputs, preacts, id(params))


def predict(params: MlpParameters, x: np.ndarray) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    last = params.num_layers - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        a = a @ w.T + b
        if k != last:
            a = np.maximum(a, 0.0)
    return a


def backward(
    params: MlpParameters, trace: ForwardTrace, output_gradient: np.ndarray
) -> tuple[MlpParameters, np.ndarray]:
    """Gradients of ``sum(output * output_gradient)`` w.r.t. parameters and input."""
    if len(trace.preacts) != params.num_layers or trace.params_id != id(params):
        raise ValueError("trace does not come from a forward pass of these parameters")
    g = np.asarray(output_gradient, dtype=float)
    if g.shape != trace.preacts[-1].shape:
        raise ValueError(f"output gradient shape {g.shape} != output shape {trace.preacts[-1].shape}")
    grads = params.zeros_like()
    for k in reversed(range(params.num_layers)):
        if k != params.num_layers - 1:
            g = g * (trace.preacts[k] > 0)
        a_in = trace.inputs[k]
        if g.ndim == 1:
            grads.weights[k] = np.outer(g, a_in)
            grads.biases[k] = g.copy()
        else:
            grads.weights[k] = g.T @ a_in
            grads.biases[k] = g.sum(axis=0)
        g = g @ params.weights[k]
    return grads, g


def global_norm(grads: MlpParameters) -> float:
    return math.sqrt(math.fsum(float((a * a).sum()) for a in grads.arrays()))


def clip_gradient_norm(grads: MlpParameters, max_norm: float) -> MlpParameters:
    if max_norm <= 0:
        raise ValueError("max_norm must be positive")
    norm = global_norm(grads)
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    out = grads.copy()
    for a in out.arrays():
        a *= scale
    return out


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: MlpParameters) -> "AdamState":
        return cls([np.zeros_like(a) for a in params.arrays()], [np.zeros_like(a) for a in params.arrays()])


def adam_step(
    params: MlpParameters,
    grads: MlpParameters,
    lr: float,
    state: AdamState,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """In-place Adam update with bias correction."""
    state.t += 1
    c1 = 1.0 - beta1**state.t
    c2 = 1.0 - beta2**state.t
    for p, g, m, v in zip(params.arrays(), grads.arrays(), state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


# -- checkpoints -------------------------------------------------------------


def params_to_dict(params: MlpParameters) -> dict:
    return {
        "layer_sizes": list(params.layer_sizes),
        "weights": [w.ravel(order="C").tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
    }


def params_from_dict(data: dict) -> MlpParameters:
    sizes = [int(s) for s in data["layer_sizes"]]
    weights = [
        np.array(flat, dtype=float).reshape(sizes[k + 1], sizes[k])
        for k, flat in enumerate(data["weights"])
    ]
    biases = [np.array(b, dtype=float) for b in data["biases"]]
    return MlpParameters(sizes, weights, biases)


def save_params(params: MlpParameters, path: str | Path) -> None:
    doc = {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION, **params_to_dict(params)}
    Path(path).write_text(json.dumps(doc))


def load_params(path: str | Path) -> MlpParameters:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT or doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: not a version {CHECKPOINT_VERSION} MLP checkpoint")
    return params_from_dict(doc)


# -- categorical helpers shared by the policy agents -------------------------

MASKED_LOGIT = -1e30


def masked_log_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    z = np.where(mask, logits, MASKED_LOGIT)
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def categorical_entropy(log_probs: np.ndarray) -> np.ndarray:
    p = np.exp(log_probs)
    return -(p * log_probs).sum(axis=-1)


def entropy_logit_grad(log_probs: np.ndarray) -> np.ndarray:
    """d entropy / d logits for a (masked) softmax distribution."""
    p = np.exp(log_probs)
    h = -(p * log_probs).sum(axis=-1, keepdims=True)
    return -p * (log_probs + h)
