"""Flat text serialization for fitted regressors.

A dump starts with the line ``dkf-bench model v1 <kind>`` and then, for each
field in a fixed per-kind order, a line ``<name> <d0>[,<d1>]`` followed by
one line of comma-separated %.17g values in row-major order. Field orders:

* nw:   bandwidth, train_inputs, train_targets
* cov:  dim, bandwidth, train_inputs, train_targets
* gp:   signal_variance, lengthscale, noise_variance, train_inputs, train_targets
* mlp:  w0, b0, w1, b1, ... (layers in forward order)
* lstm: window, w_x, w_h, bias, w_out, b_out

GP models are re-conditioned on load; everything else round-trips exactly.
"""

from __future__ import annotations

import numpy as np

from ..errors import ParseError
from .gp import GpModel, gp_condition
from .lstm import LstmModel
from .mlp import MlpModel
from .nw import CovFunction, NwModel

__all__ = ["save_model", "load_model"]

FORMAT_TAG = "dkf-bench model v1"


def _fields_for(model):
    if isinstance(model, CovFunction):
        return "cov", [
            ("dim", np.array([model.dim], dtype=float)),
            ("bandwidth", np.array([model.model.bandwidth])),
            ("train_inputs", model.model.train_inputs),
            ("train_targets", model.model.train_targets),
        ]
    if isinstance(model, NwModel):
        return "nw", [
            ("bandwidth", np.array([model.bandwidth])),
            ("train_inputs", model.train_inputs),
            ("train_targets", model.train_targets),
        ]
    if isinstance(model, GpModel):
        return "gp", [
            ("signal_variance", np.array([model.signal_variance])),
            ("lengthscale", np.array([model.lengthscale])),
            ("noise_variance", np.array([model.noise_variance])),
            ("train_inputs", model.train_inputs),
            ("train_targets", model.train_targets),
        ]
    if isinstance(model, MlpModel):
        fields = []
        for i, (w, b) in enumerate(zip(model.weights, model.biases)):
            fields.append((f"w{i}", w))
            fields.append((f"b{i}", b))
        return "mlp", fields
    if isinstance(model, LstmModel):
        return "lstm", [
            ("window", np.array([model.window], dtype=float)),
            ("w_x", model.w_x),
            ("w_h", model.w_h),
            ("bias", model.bias),
            ("w_out", model.w_out),
            ("b_out", model.b_out),
        ]
    raise TypeError(f"cannot serialize {type(model).__name__}")


def save_model(model, path) -> None:
    kind, fields = _fields_for(model)
    lines = [f"{FORMAT_TAG} {kind}"]
    for name, arr in fields:
        arr = np.asarray(arr, dtype=float)
        shape = ",".join(str(s) for s in arr.shape)
        lines.append(f"{name} {shape}")
        lines.append(",".join(f"{v:.17g}" for v in arr.ravel()))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_fields(path):
    with open(path, encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].startswith(FORMAT_TAG):
        raise ParseError(f"{path}: missing '{FORMAT_TAG}' header")
    kind = lines[0][len(FORMAT_TAG):].strip()
    fields = {}
    idx = 1
    while idx < len(lines) and lines[idx]:
        try:
            name, shape_s = lines[idx].split()
            shape = tuple(int(s) for s in shape_s.split(","))
            values = np.array([float(v) for v in lines[idx + 1].split(",")])
            fields[name] = values.reshape(shape)
        except (ValueError, IndexError) as exc:
            raise ParseError(f"{path}: line {idx + 1}: {exc}") from exc
        idx += 2
    return kind, fields


def load_model(path):
    kind, f = _read_fields(path)
    if kind == "nw":
        return NwModel(f["train_inputs"], f["train_targets"], float(f["bandwidth"][0]))
    if kind == "cov":
        nw = NwModel(f["train_inputs"], f["train_targets"], float(f["bandwidth"][0]))
        return CovFunction(nw, int(f["dim"][0]))
    if kind == "gp":
        return gp_condition(
            f["train_inputs"], f["train_targets"],
            float(f["signal_variance"][0]), float(f["lengthscale"][0]),
            float(f["noise_variance"][0]),
        )
    if kind == "mlp":
        n_layers = sum(1 for k in f if k.startswith("w"))
        return MlpModel([f[f"w{i}"] for i in range(n_layers)],
                        [f[f"b{i}"] for i in range(n_layers)])
    if kind == "lstm":
        return LstmModel(f["w_x"], f["w_h"], f["bias"], f["w_out"], f["b_out"],
                         int(f["window"][0]))
    raise ParseError(f"{path}: unknown model kind {kind!r}")
