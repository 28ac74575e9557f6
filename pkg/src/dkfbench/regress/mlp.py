"""Feedforward tanh network trained with full-batch RMSProp.

Two hidden layers of 10 tanh units and a linear output layer. Gradients are
hand-derived so the analytic Jacobian (used by the extended Kalman filter)
and the training gradients can both be checked against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import FitDivergedError
from .common import TrainConfig, glorot_uniform

__all__ = ["MlpModel", "mlp_init", "mlp_fit", "mlp_predict", "mlp_jacobian"]

RMSPROP_DECAY = 0.9
RMSPROP_EPS = 1e-8


@dataclass
class MlpModel:
    """Layer weights (out x in) and biases; tanh hidden, linear output."""

    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_outputs(self) -> int:
        return self.weights[-1].shape[0]


def mlp_init(n_in: int, n_out: int, hidden=(10, 10), seed: int = 0) -> MlpModel:
    """Glorot-uniform weights, zero biases, seeded."""
    rng = np.random.default_rng(seed)
    sizes = [n_in, *hidden, n_out]
    weights = [glorot_uniform(rng, sizes[i + 1], sizes[i]) for i in range(len(sizes) - 1)]
    biases = [np.zeros(sizes[i + 1]) for i in range(len(sizes) - 1)]
    return MlpModel(weights, biases)


def _forward(model: MlpModel, x: np.ndarray):
    """Return the list of layer activations, input first, output last."""
    acts = [x]
    h = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w.T + b
        h = z if i == last else np.tanh(z)
        acts.append(h)
    return acts


def mlp_predict(model: MlpModel, query) -> np.ndarray:
    """Forward pass; accepts a single vector or a batch of rows."""
    q = np.asarray(query, dtype=float)
    single = q.ndim == 1
    out = _forward(model, np.atleast_2d(q))[-1]
    return out[0] if single else out


def mlp_jacobian(model: MlpModel, query) -> np.ndarray:
    """Analytic (n_out, n_in) Jacobian of the forward map at one point."""
    q = np.asarray(query, dtype=float)
    if q.ndim != 1:
        raise ValueError("jacobian is defined for a single query vector")
    acts = _forward(model, q[None, :])
    jac = model.weights[0].copy()
    for i in range(1, len(model.weights)):
        hidden = acts[i][0]
        jac = model.weights[i] @ ((1.0 - hidden**2)[:, None] * jac)
    return jac


def _loss_and_grads(model: MlpModel, x: np.ndarray, y: np.ndarray, l2: float):
    """Mean-squared-error loss (mean over all elements) plus l2 on weights."""
    acts = _forward(model, x)
    pred = acts[-1]
    diff = pred - y
    loss = float(np.mean(diff**2)) + l2 * sum(float((w**2).sum()) for w in model.weights)
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    delta = 2.0 * diff / diff.size
    for i in range(len(model.weights) - 1, -1, -1):
        grads_w[i] = delta.T @ acts[i] + 2.0 * l2 * model.weights[i]
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i]) * (1.0 - acts[i] ** 2)
    return loss, grads_w, grads_b


def mlp_fit(inputs, targets, config: TrainConfig = TrainConfig(), hidden=(10, 10)) -> MlpModel:
    """Full-batch RMSProp training, deterministic for a given seed."""
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.atleast_2d(np.asarray(targets, dtype=float))
    if x.shape[0] != y.shape[0]:
        raise ValueError("inputs and targets must have the same number of rows")
    model = mlp_init(x.shape[1], y.shape[1], hidden=hidden, seed=config.seed)
    cache_w = [np.zeros_like(w) for w in model.weights]
    cache_b = [np.zeros_like(b) for b in model.biases]
    for epoch in range(config.epochs):
        loss, gw, gb = _loss_and_grads(model, x, y, config.l2_penalty)
        if not np.isfinite(loss):
            raise FitDivergedError(epoch)
        for i in range(len(model.weights)):
            cache_w[i] = RMSPROP_DECAY * cache_w[i] + (1 - RMSPROP_DECAY) * gw[i] ** 2
            cache_b[i] = RMSPROP_DECAY * cache_b[i] + (1 - RMSPROP_DECAY) * gb[i] ** 2
            model.weights[i] -= config.learning_rate * gw[i] / (np.sqrt(cache_w[i]) + RMSPROP_EPS)
            model.biases[i] -= config.learning_rate * gb[i] / (np.sqrt(cache_b[i]) + RMSPROP_EPS)
    return model
