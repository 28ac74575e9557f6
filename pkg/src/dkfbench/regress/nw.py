"""Nadaraya-Watson kernel regression with leave-one-out bandwidth selection.

The kernel is the Gaussian RBF exp(-||x - x'||^2 / (2 h^2)); predictions are
kernel-weighted averages of the training targets, so they always lie in the
convex hull of the targets. The same machinery doubles as the conditional
covariance estimator: targets are the unique entries of residual outer
products, reassembled into a symmetric PSD matrix at query time.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial.distance import cdist

from ..errors import DegenerateInputError

__all__ = [
    "NwModel",
    "CovFunction",
    "nw_predict",
    "nw_loo_mse",
    "optimize_bandwidth",
    "fit_cov_function",
]


@dataclass
class NwModel:
    """Kernel-regression model: training pairs plus an RBF bandwidth."""

    train_inputs: np.ndarray  # (M, p)
    train_targets: np.ndarray  # (M, q)
    bandwidth: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.train_inputs = np.atleast_2d(np.asarray(self.train_inputs, dtype=float))
        self.train_targets = np.atleast_2d(np.asarray(self.train_targets, dtype=float))
        if self.train_targets.shape[0] != self.train_inputs.shape[0]:
            raise ValueError("inputs and targets must have the same number of rows")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return cdist(a, b, "sqeuclidean")


def nw_predict(model: NwModel, query) -> np.ndarray:
    """Kernel-weighted average of training targets at the query point(s).

    If every kernel weight underflows to zero for a query, the prediction
    falls back to the unweighted target mean; occurrences are counted in
    model.diagnostics["weight_underflow"].
    """
    q = np.asarray(query, dtype=float)
    single = q.ndim == 1
    q2 = np.atleast_2d(q)
    w = np.exp(-_sq_dists(q2, model.train_inputs) / (2.0 * model.bandwidth**2))
    sw = w.sum(axis=1)
    bad = sw == 0.0
    sw_safe = np.where(bad, 1.0, sw)
    preds = (w @ model.train_targets) / sw_safe[:, None]
    if bad.any():
        preds[bad] = model.train_targets.mean(axis=0)
        model.diagnostics["weight_underflow"] = (
            model.diagnostics.get("weight_underflow", 0) + int(bad.sum())
        )
    return preds[0] if single else preds


def _loo_mse_from_sqdists(d2: np.ndarray, targets: np.ndarray, bandwidth: float) -> float:
    """Leave-one-out MSE with a precomputed squared-distance matrix."""
    w = np.exp(-d2 / (2.0 * bandwidth**2))
    np.fill_diagonal(w, 0.0)
    sw = w.sum(axis=1)
    preds = w @ targets
    ok = sw > 0.0
    preds[ok] /= sw[ok, None]
    if (~ok).any():
        # Matches the refit-without-i fallback: mean of the other targets.
        m = len(targets)
        others = (targets.sum(axis=0) - targets[~ok]) / (m - 1)
        preds[~ok] = others
    return float(np.mean(np.sum((targets - preds) ** 2, axis=1)))


def nw_loo_mse(inputs, targets, bandwidth: float) -> float:
    """Mean squared leave-one-out error of NW regression at one bandwidth.

    Zeroing sample i's kernel weight is algebraically identical to refitting
    without that sample. Degenerate all-identical inputs return the target
    variance (mean squared deviation from the mean) with a warning.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if inputs.shape[0] < 2:
        raise ValueError("need at least two samples")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    if np.all(inputs == inputs[0]):
        warnings.warn("all inputs identical; returning target variance", stacklevel=2)
        centered = targets - targets.mean(axis=0)
        return float(np.mean(np.sum(centered**2, axis=1)))
    return _loo_mse_from_sqdists(_sq_dists(inputs, inputs), targets, bandwidth)


def optimize_bandwidth(inputs, targets, *, grid_size: int = 25, rel_tol: float = 1e-4) -> float:
    """Bandwidth minimizing the leave-one-out MSE.

    Searches log-bandwidth in [log(0.001 D), log(10 D)], D the median
    pairwise input distance: a coarse log grid brackets the minimum, then a
    bounded scalar minimization refines it to relative tolerance rel_tol.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if inputs.shape[0] < 3:
        raise ValueError("need at least three samples")
    d2 = _sq_dists(inputs, inputs)
    iu = np.triu_indices(len(inputs), k=1)
    diameter = float(np.median(np.sqrt(d2[iu])))
    if diameter == 0.0:
        raise DegenerateInputError("all inputs identical; bandwidth is undefined")

    def loss_log(log_h: float) -> float:
        return _loo_mse_from_sqdists(d2, targets, float(np.exp(log_h)))

    lo, hi = np.log(1e-3 * diameter), np.log(10.0 * diameter)
    grid = np.linspace(lo, hi, grid_size)
    losses = [loss_log(g) for g in grid]
    best = int(np.argmin(losses))
    bracket = (grid[max(best - 1, 0)], grid[min(best + 1, grid_size - 1)])
    res = minimize_scalar(loss_log, bounds=bracket, method="bounded", options={"xatol": rel_tol})
    if res.fun <= losses[best]:
        return float(np.exp(res.x))
    return float(np.exp(grid[best]))


@dataclass
class CovFunction:
    """Observation-conditioned covariance map learned over residual outer products.

    The underlying NW model regresses the d*(d+1)/2 unique outer-product
    entries; queries reassemble a symmetric matrix. Because predictions are
    convex combinations of rank-1 PSD matrices, every output is PSD.
    """

    model: NwModel
    dim: int

    def __call__(self, query) -> np.ndarray:
        q = np.asarray(query, dtype=float)
        single = q.ndim == 1
        vech = np.atleast_2d(nw_predict(self.model, np.atleast_2d(q)))
        iu = np.triu_indices(self.dim)
        out = np.zeros((len(vech), self.dim, self.dim))
        out[:, iu[0], iu[1]] = vech
        out[:, iu[1], iu[0]] = vech
        return out[0] if single else out


def fit_cov_function(val_inputs, residuals) -> CovFunction:
    """Fit the covariance map from validation residuals.

    Targets are vech(r r^T) per sample; the bandwidth is chosen by
    leave-one-out optimization over those targets.
    """
    val_inputs = np.atleast_2d(np.asarray(val_inputs, dtype=float))
    residuals = np.atleast_2d(np.asarray(residuals, dtype=float))
    if val_inputs.shape[0] != residuals.shape[0]:
        raise ValueError("inputs and residuals must have the same number of rows")
    if val_inputs.shape[0] < 2:
        raise ValueError("need at least two residual samples")
    d = residuals.shape[1]
    outer = residuals[:, :, None] * residuals[:, None, :]
    iu = np.triu_indices(d)
    vech = outer[:, iu[0], iu[1]]
    if np.allclose(vech, vech[0]):
        # Constant targets: any bandwidth gives the same (exact) prediction.
        bandwidth = 1.0
    else:
        bandwidth = optimize_bandwidth(val_inputs, vech)
    return CovFunction(NwModel(val_inputs, vech, bandwidth), d)
