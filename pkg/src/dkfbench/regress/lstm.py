"""Single-layer LSTM regressor trained with minibatch Adam.

The network reads a short window of observations (three by default),
carries a 20-dimensional hidden state through it, and linearly maps the
final hidden state to the target. Backpropagation through the window is
hand-derived so gradients can be verified against finite differences.
Training uses a sequential split: the leading fraction of the sequence
trains, the trailing fraction validates, and the parameters from the best
validation epoch are returned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import FitDivergedError
from .common import TrainConfig, glorot_uniform

__all__ = ["LstmModel", "lstm_init", "build_windows", "lstm_fit", "lstm_predict"]

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

_PARAM_FIELDS = ("w_x", "w_h", "bias", "w_out", "b_out")


@dataclass
class LstmModel:
    """Gate weights stacked in i, f, g, o order plus a linear readout."""

    w_x: np.ndarray  # (4H, p)
    w_h: np.ndarray  # (4H, H)
    bias: np.ndarray  # (4H,)
    w_out: np.ndarray  # (d, H)
    b_out: np.ndarray  # (d,)
    window: int = 3

    @property
    def hidden_size(self) -> int:
        return self.w_h.shape[1]


def lstm_init(n_in: int, n_out: int, hidden: int = 20, window: int = 3, seed: int = 0) -> LstmModel:
    rng = np.random.default_rng(seed)
    w_x = glorot_uniform(rng, 4 * hidden, n_in)
    w_h = glorot_uniform(rng, 4 * hidden, hidden)
    bias = np.zeros(4 * hidden)
    bias[hidden: 2 * hidden] = 1.0  # forget gate starts open
    w_out = glorot_uniform(rng, n_out, hidden)
    b_out = np.zeros(n_out)
    return LstmModel(w_x, w_h, bias, w_out, b_out, window)


def build_windows(obs, window: int = 3) -> np.ndarray:
    """(T, window, p) sliding windows, left-padded by repeating the first row."""
    obs = np.atleast_2d(np.asarray(obs, dtype=float))
    t, p = obs.shape
    out = np.empty((t, window, p))
    for k in range(window):
        shift = window - 1 - k
        idx = np.maximum(np.arange(t) - shift, 0)
        out[:, k, :] = obs[idx]
    return out


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def _forward(model: LstmModel, xw: np.ndarray):
    """Run the window; return predictions and per-step caches for backprop."""
    n, steps, _ = xw.shape
    hsz = model.hidden_size
    h = np.zeros((n, hsz))
    c = np.zeros((n, hsz))
    caches = []
    for t in range(steps):
        z = xw[:, t] @ model.w_x.T + h @ model.w_h.T + model.bias
        i = _sigmoid(z[:, :hsz])
        f = _sigmoid(z[:, hsz: 2 * hsz])
        g = np.tanh(z[:, 2 * hsz: 3 * hsz])
        o = _sigmoid(z[:, 3 * hsz:])
        c_prev, h_prev = c, h
        c = f * c_prev + i * g
        hc = np.tanh(c)
        h = o * hc
        caches.append((xw[:, t], h_prev, c_prev, i, f, g, o, c, hc))
    pred = h @ model.w_out.T + model.b_out
    return pred, h, caches


def lstm_predict(model: LstmModel, window) -> np.ndarray:
    """Readout after recurrently processing one window (or a batch of windows)."""
    w = np.asarray(window, dtype=float)
    single = w.ndim == 2
    w3 = w[None, ...] if single else w
    if w3.shape[1] != model.window:
        raise ValueError(f"expected windows of length {model.window}, got {w3.shape[1]}")
    pred, _, _ = _forward(model, w3)
    return pred[0] if single else pred


def _loss_and_grads(model: LstmModel, xw: np.ndarray, y: np.ndarray, l2: float):
    """MSE (mean over elements) + l2 on weight matrices, with full BPTT."""
    pred, h_last, caches = _forward(model, xw)
    diff = pred - y
    loss = float(np.mean(diff**2)) + l2 * (
        float((model.w_x**2).sum()) + float((model.w_h**2).sum()) + float((model.w_out**2).sum())
    )
    hsz = model.hidden_size
    dpred = 2.0 * diff / diff.size
    grads = {
        "w_out": dpred.T @ h_last + 2.0 * l2 * model.w_out,
        "b_out": dpred.sum(axis=0),
        "w_x": 2.0 * l2 * model.w_x,
        "w_h": 2.0 * l2 * model.w_h,
        "bias": np.zeros_like(model.bias),
    }
    dh = dpred @ model.w_out
    dc = np.zeros((xw.shape[0], hsz))
    for t in range(len(caches) - 1, -1, -1):
        x_t, h_prev, c_prev, i, f, g, o, _, hc = caches[t]
        do = dh * hc
        dc = dc + dh * o * (1.0 - hc**2)
        di, df, dg = dc * g, dc * c_prev, dc * i
        dz = np.concatenate(
            [di * i * (1 - i), df * f * (1 - f), dg * (1 - g**2), do * o * (1 - o)], axis=1
        )
        grads["w_x"] += dz.T @ x_t
        grads["w_h"] += dz.T @ h_prev
        grads["bias"] += dz.sum(axis=0)
        dh = dz @ model.w_h
        dc = dc * f
    return loss, grads


def _validation_mse(model: LstmModel, xw: np.ndarray, y: np.ndarray) -> float:
    pred, _, _ = _forward(model, xw)
    return float(np.mean((pred - y) ** 2))


def lstm_fit(
    obs_sequence,
    targets,
    config: TrainConfig = TrainConfig(epochs=200),
    *,
    hidden: int = 20,
    window: int = 3,
    batch_size: int = 64,
    val_fraction: float = 0.3,
    selection: str = "best",
) -> LstmModel:
    """Minibatch Adam over sliding windows with best-validation checkpointing.

    The leading (1 - val_fraction) of the sequence trains; the trailing part
    validates. selection="best" returns the lowest-validation-MSE epoch,
    "last" the final epoch.
    """
    if selection not in ("best", "last"):
        raise ValueError(f"unknown selection policy {selection!r}")
    obs = np.atleast_2d(np.asarray(obs_sequence, dtype=float))
    y = np.atleast_2d(np.asarray(targets, dtype=float))
    t = obs.shape[0]
    if t < window:
        raise ValueError(f"sequence shorter than one window ({t} < {window})")
    if y.shape[0] != t:
        raise ValueError("observations and targets must have the same length")
    xw = build_windows(obs, window)
    n_train = int(round((1.0 - val_fraction) * t))
    n_train = min(max(n_train, 1), t)
    xw_tr, y_tr = xw[:n_train], y[:n_train]
    xw_val, y_val = xw[n_train:], y[n_train:]

    rng = np.random.default_rng(config.seed)
    model = lstm_init(obs.shape[1], y.shape[1], hidden=hidden, window=window,
                      seed=int(rng.integers(2**31)))
    m_state = {k: np.zeros_like(getattr(model, k)) for k in _PARAM_FIELDS}
    v_state = {k: np.zeros_like(getattr(model, k)) for k in _PARAM_FIELDS}
    step = 0
    best_val = np.inf
    best_params = {k: getattr(model, k).copy() for k in _PARAM_FIELDS}
    for epoch in range(config.epochs):
        order = rng.permutation(n_train)
        for start in range(0, n_train, batch_size):
            batch = order[start: start + batch_size]
            loss, grads = _loss_and_grads(model, xw_tr[batch], y_tr[batch], config.l2_penalty)
            if not np.isfinite(loss):
                raise FitDivergedError(epoch)
            step += 1
            for k in _PARAM_FIELDS:
                m_state[k] = ADAM_BETA1 * m_state[k] + (1 - ADAM_BETA1) * grads[k]
                v_state[k] = ADAM_BETA2 * v_state[k] + (1 - ADAM_BETA2) * grads[k] ** 2
                m_hat = m_state[k] / (1 - ADAM_BETA1**step)
                v_hat = v_state[k] / (1 - ADAM_BETA2**step)
                param = getattr(model, k)
                param -= config.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
        if len(xw_val):
            val = _validation_mse(model, xw_val, y_val)
            if not np.isfinite(val):
                raise FitDivergedError(epoch)
            if val < best_val:
                best_val = val
                best_params = {k: getattr(model, k).copy() for k in _PARAM_FIELDS}
    if selection == "best" and len(xw_val):
        for k in _PARAM_FIELDS:
            setattr(model, k, best_params[k])
    return model
