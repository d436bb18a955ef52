"""Fully connected ReLU networks with hand-written backprop and Adam.

Everything is float64 and pure: functions return new arrays and never
mutate their inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CKPT_HEADER = "cae-ckpt v1"


@dataclass
class MlpParams:
    """Weights ``W[l]`` of shape ``(n_out, n_in)`` and biases ``b[l]`` of shape ``(n_out,)``."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias per weight matrix and at least one layer")
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise ValueError(f"layer {i}: weight {W.shape} and bias {b.shape} are inconsistent")
            if i and W.shape[1] != self.weights[i - 1].shape[0]:
                raise ValueError(f"layer {i}: fan-in {W.shape[1]} != previous fan-out "
                                 f"{self.weights[i - 1].shape[0]}")

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(W.shape[0] for W in self.weights)

    def arrays(self) -> list[np.ndarray]:
        return [a for pair in zip(self.weights, self.biases) for a in pair]

    @classmethod
    def from_arrays(cls, arrays) -> "MlpParams":
        arrays = list(arrays)
        return cls(arrays[0::2], arrays[1::2])

    def copy(self) -> "MlpParams":
        return MlpParams.from_arrays(a.copy() for a in self.arrays())


# gradients share the parameter layout
MlpGrads = MlpParams


@dataclass
class ForwardCache:
    params: MlpParams
    inputs: list[np.ndarray]  # input to each layer
    preacts: list[np.ndarray]  # affine output of each layer


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: MlpParams) -> "AdamState":
        arrs = params.arrays()
        return cls([np.zeros_like(a) for a in arrs], [np.zeros_like(a) for a in arrs], 0)


def mlp_init(widths, seed: int) -> MlpParams:
    """He-normal weights (std ``sqrt(2 / fan_in)``), zero biases."""
    widths = [int(w) for w in widths]
    if len(widths) < 2 or min(widths) < 1:
        raise ValueError(f"need at least two positive layer widths, got {widths}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(widths[:-1], widths[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return MlpParams(weights, biases)


def identity_mlp(d: int) -> MlpParams:
    """Single affine layer computing the identity on R^d."""
    return MlpParams([np.eye(d)], [np.zeros(d)])


def mlp_forward(params: MlpParams, X):
    """Hidden layers are affine + ReLU, the output layer is affine.

    Returns ``(output, cache)``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != params.widths[0]:
        raise ValueError(f"input dim {X.shape[1]} != network input width {params.widths[0]}")
    inputs, preacts = [], []
    a = X
    last = len(params.weights) - 1
    for i, (W, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(a)
        z = a @ W.T + b
        preacts.append(z)
        a = z if i == last else np.maximum(z, 0.0)
    return a, ForwardCache(params, inputs, preacts)


def mlp_apply(params: MlpParams, X) -> np.ndarray:
    return mlp_forward(params, X)[0]


def mlp_backward(params: MlpParams, cache: ForwardCache, grad_output):
    """Backpropagate ``grad_output`` (dL/d output) through the network.

    Returns ``(param_grads, input_grad)``. The ReLU subgradient at 0 is 0.
    """
    if cache.params is not params:
        raise ValueError("cache was produced by a different parameter set")
    G = np.asarray(grad_output, dtype=float)
    if G.ndim == 1:
        G = G[None, :]
    if G.shape != cache.preacts[-1].shape:
        raise ValueError(f"grad_output shape {G.shape} != output shape {cache.preacts[-1].shape}")
    n_layers = len(params.weights)
    gW, gb = [None] * n_layers, [None] * n_layers
    for i in reversed(range(n_layers)):
        if i != n_layers - 1:
            G = G * (cache.preacts[i] > 0)
        gW[i] = G.T @ cache.inputs[i]
        gb[i] = G.sum(axis=0)
        G = G @ params.weights[i]
    return MlpGrads(gW, gb), G


def adam_step(params: MlpParams, grads: MlpGrads, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, adam_eps: float = 1e-8):
    """One bias-corrected Adam update. Returns ``(new_params, new_state)``."""
    p_arrs, g_arrs = params.arrays(), grads.arrays()
    if len(p_arrs) != len(g_arrs) or len(p_arrs) != len(state.m):
        raise ValueError("params, grads and optimizer state have different layer counts")
    t = state.t + 1
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(p_arrs, g_arrs, state.m, state.v):
        if not (p.shape == g.shape == m.shape == v.shape):
            raise ValueError(f"shape mismatch in adam_step: {p.shape}, {g.shape}, {m.shape}")
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        new_p.append(p - lr * m_hat / (np.sqrt(v_hat) + adam_eps))
        new_m.append(m)
        new_v.append(v)
    return MlpParams.from_arrays(new_p), AdamState(new_m, new_v, t)


def save_checkpoint(params: MlpParams, path) -> None:
    """Text checkpoint: header, widths, then per layer one line per weight row and one bias line."""
    lines = [CKPT_HEADER, " ".join(str(w) for w in params.widths)]
    for W, b in zip(params.weights, params.biases):
        lines.extend(" ".join(format(x, ".17g") for x in row) for row in W)
        lines.append(" ".join(format(x, ".17g") for x in b))
    Path(path).write_text("\n".join(lines) + "\n")


def load_checkpoint(path) -> MlpParams:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != CKPT_HEADER:
        raise ValueError(f"{path}: not a {CKPT_HEADER!r} checkpoint")
    try:
        widths = [int(w) for w in lines[1].split()]
        pos = 2
        weights, biases = [], []
        for n_in, n_out in zip(widths[:-1], widths[1:]):
            W = np.array([[float(x) for x in lines[pos + r].split()] for r in range(n_out)])
            b = np.array([float(x) for x in lines[pos + n_out].split()])
            pos += n_out + 1
            if W.shape != (n_out, n_in) or b.shape != (n_out,):
                raise ValueError(f"layer shape {W.shape} does not match widths")
            weights.append(W)
            biases.append(b)
    except (IndexError, ValueError) as exc:
        raise ValueError(f"{path}: malformed checkpoint ({exc})") from exc
    return MlpParams(weights, biases)
