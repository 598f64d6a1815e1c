"""Minimal fully-connected stack: forward with a per-call tape, exact
reverse-mode backward, parameter flattening, He/Xavier init, and Adam with
stepwise learning-rate decay.

No autodiff graph: the model topology is fixed (one encoder, one decoder),
so each forward returns the tape its backward needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import Matrix, Rng

ACTIVATIONS = ("relu", "tanh", "identity")


@dataclass
class MlpParams:
    """Ordered (weight, bias) pairs with one activation name per layer.

    weights[i] has shape (out_i, in_i); biases[i] has shape (out_i,).
    Layer widths chain: in_{i+1} == out_i.
    """

    weights: list[Matrix]
    biases: list[np.ndarray]
    activations: list[str]

    def __post_init__(self) -> None:
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise ValueError("layer lists must have equal length")
        for act in self.activations:
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
        for i in range(len(self.weights) - 1):
            if self.weights[i + 1].shape[1] != self.weights[i].shape[0]:
                raise ValueError(
                    f"layer {i} output width {self.weights[i].shape[0]} does not "
                    f"feed layer {i + 1} input width {self.weights[i + 1].shape[1]}"
                )

    @property
    def widths(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


@dataclass
class Tape:
    """Everything backward needs from one forward call."""

    inputs: list[Matrix]  # input to each layer
    preacts: list[Matrix]  # pre-activation of each layer


@dataclass
class AdamState:
    """Adam moments plus a stepwise-decay learning-rate schedule."""

    lr: float = 0.005
    beta1: float = 0.5
    beta2: float = 0.9
    eps: float = 1e-8
    decay_every: int = 10_000
    decay_factor: float = 0.9
    t: int = 0
    m: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def effective_lr(self) -> float:
        if self.decay_every <= 0:
            return self.lr
        return self.lr * self.decay_factor ** (self.t // self.decay_every)


def _apply_act(s: Matrix, act: str) -> Matrix:
    if act == "relu":
        return np.maximum(s, 0.0)
    if act == "tanh":
        return np.tanh(s)
    return s


def _act_deriv(s: Matrix, act: str) -> Matrix:
    if act == "relu":
        return (s > 0.0).astype(np.float64)  # subgradient at 0 is 0
    if act == "tanh":
        return 1.0 - np.tanh(s) ** 2
    return np.ones_like(s)


def mlp_forward(params: MlpParams, x: Matrix) -> tuple[Matrix, Tape]:
    """Apply the network to a batch of rows; returns output and tape."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.weights[0].shape[1]:
        raise ValueError(
            f"input shape {x.shape} does not match first layer input width "
            f"{params.weights[0].shape[1]}"
        )
    inputs, preacts = [], []
    a = x
    for w, b, act in zip(params.weights, params.biases, params.activations):
        inputs.append(a)
        s = a @ w.T + b
        preacts.append(s)
        a = _apply_act(s, act)
    return a, Tape(inputs, preacts)


def mlp_backward(
    params: MlpParams, tape: Tape, grad_y: Matrix
) -> tuple[MlpParams, Matrix]:
    """Exact gradients of <grad_y, output> w.r.t. parameters and input."""
    grad_y = np.asarray(grad_y, dtype=np.float64)
    if len(tape.preacts) != len(params.weights):
        raise ValueError("tape does not match network depth")
    if grad_y.shape != tape.preacts[-1].shape:
        raise ValueError(
            f"grad shape {grad_y.shape} does not match output {tape.preacts[-1].shape}"
        )
    grad_ws: list[Matrix] = [None] * len(params.weights)  # type: ignore[list-item]
    grad_bs: list[np.ndarray] = [None] * len(params.weights)  # type: ignore[list-item]
    grad_a = grad_y
    for i in reversed(range(len(params.weights))):
        ds = grad_a * _act_deriv(tape.preacts[i], params.activations[i])
        grad_ws[i] = ds.T @ tape.inputs[i]
        grad_bs[i] = ds.sum(axis=0)
        grad_a = ds @ params.weights[i]
    grads = MlpParams(grad_ws, grad_bs, list(params.activations))
    return grads, grad_a


def init_params(rng: Rng, widths: list[int], activations: list[str]) -> MlpParams:
    """He init for relu layers, Xavier (Glorot) otherwise; zero biases."""
    if len(activations) != len(widths) - 1:
        raise ValueError("need one activation per layer")
    weights, biases = [], []
    for i, act in enumerate(activations):
        fan_in, fan_out = widths[i], widths[i + 1]
        if fan_in < 1 or fan_out < 1:
            raise ValueError(f"layer widths must be positive, got {widths}")
        if act == "relu":
            std = np.sqrt(2.0 / fan_in)
        else:
            std = np.sqrt(2.0 / (fan_in + fan_out))
        weights.append(rng.normal(fan_out, fan_in) * std)
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases, list(activations))


def flatten_params(params: MlpParams) -> np.ndarray:
    parts = []
    for w, b in zip(params.weights, params.biases):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def unflatten_params(flat: np.ndarray, like: MlpParams) -> MlpParams:
    flat = np.asarray(flat, dtype=np.float64)
    if flat.size != like.n_params():
        raise ValueError(f"expected {like.n_params()} values, got {flat.size}")
    weights, biases = [], []
    pos = 0
    for w, b in zip(like.weights, like.biases):
        weights.append(flat[pos : pos + w.size].reshape(w.shape).copy())
        pos += w.size
        biases.append(flat[pos : pos + b.size].copy())
        pos += b.size
    return MlpParams(weights, biases, list(like.activations))


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """One bias-corrected Adam update; mutates state, returns new params.

    The effective learning rate is lr * decay_factor^(t // decay_every),
    evaluated with the pre-increment step counter.
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape:
        raise ValueError(f"length mismatch: {params.shape} vs {grads.shape}")
    if state.m.size == 0:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    if state.m.shape != params.shape:
        raise ValueError("optimizer state does not match parameter count")
    lr = state.effective_lr()
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads**2
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    return params - lr * m_hat / (np.sqrt(v_hat) + state.eps)
