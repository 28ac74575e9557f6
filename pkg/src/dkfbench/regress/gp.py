"""Gaussian-process regression with an isotropic squared-exponential kernel.

One shared kernel serves every output dimension. Hyperparameters (signal
variance, lengthscale, noise variance) maximize the log marginal likelihood
by L-BFGS on their logs, restarted from several seeded initializations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import minimize

from ..errors import NumericError

__all__ = [
    "GpModel",
    "gp_kernel",
    "gp_condition",
    "gp_fit",
    "gp_predict",
    "gp_log_marginal_likelihood",
]

_LOG2PI = float(np.log(2.0 * np.pi))


@dataclass
class GpModel:
    """Fitted GP: data, kernel hyperparameters, and the Gram factorization."""

    train_inputs: np.ndarray  # (M, p)
    train_targets: np.ndarray  # (M, d)
    signal_variance: float
    lengthscale: float
    noise_variance: float
    chol: np.ndarray  # lower Cholesky of K + noise I (+ jitter)
    alpha: np.ndarray  # (M, d), solves of the targets
    log_marginal_likelihood: float
    jitter: float = 0.0


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aa = (a**2).sum(axis=1)[:, None]
    bb = (b**2).sum(axis=1)[None, :]
    return np.maximum(aa + bb - 2.0 * (a @ b.T), 0.0)


def gp_kernel(a, b, signal_variance: float, lengthscale: float) -> np.ndarray:
    """Squared-exponential kernel matrix between two sets of rows."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    return signal_variance * np.exp(-_sq_dists(a, b) / (2.0 * lengthscale**2))


def _lml_terms(d2: np.ndarray, y: np.ndarray, sv: float, ls: float, nv: float, jitter: float):
    m, d = y.shape
    k = sv * np.exp(-d2 / (2.0 * ls**2))
    k[np.diag_indices(m)] += nv + jitter
    chol = np.linalg.cholesky(k)
    alpha = scipy.linalg.cho_solve((chol, True), y)
    logdet = 2.0 * float(np.log(np.diag(chol)).sum())
    lml = -0.5 * float((y * alpha).sum()) - 0.5 * d * logdet - 0.5 * d * m * _LOG2PI
    return lml, chol, alpha


def gp_log_marginal_likelihood(inputs, targets, signal_variance, lengthscale, noise_variance) -> float:
    """Log marginal likelihood of the data under the given hyperparameters."""
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.atleast_2d(np.asarray(targets, dtype=float))
    lml, _, _ = _lml_terms(_sq_dists(x, x), y, signal_variance, lengthscale, noise_variance, 0.0)
    return lml


def gp_condition(inputs, targets, signal_variance, lengthscale, noise_variance,
                 max_jitter: float = 1e-6) -> GpModel:
    """Condition on data with fixed hyperparameters, escalating jitter if needed."""
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.atleast_2d(np.asarray(targets, dtype=float))
    d2 = _sq_dists(x, x)
    jitter = 0.0
    while True:
        try:
            lml, chol, alpha = _lml_terms(d2, y, signal_variance, lengthscale, noise_variance, jitter)
            break
        except np.linalg.LinAlgError:
            jitter = 1e-10 if jitter == 0.0 else jitter * 10.0
            if jitter > max_jitter:
                raise NumericError(
                    f"Gram factorization failed even with jitter {max_jitter:g}"
                ) from None
    return GpModel(x, y, float(signal_variance), float(lengthscale), float(noise_variance),
                   chol, alpha, lml, jitter)


def _neg_lml_and_grad(theta: np.ndarray, d2: np.ndarray, y: np.ndarray):
    sv, ls, nv = np.exp(theta)
    m, d = y.shape
    try:
        base = np.exp(-d2 / (2.0 * ls**2))
        k = sv * base
        k[np.diag_indices(m)] += nv + 1e-12 * sv
        chol = np.linalg.cholesky(k)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros(3)
    alpha = scipy.linalg.cho_solve((chol, True), y)
    logdet = 2.0 * float(np.log(np.diag(chol)).sum())
    lml = -0.5 * float((y * alpha).sum()) - 0.5 * d * logdet - 0.5 * d * m * _LOG2PI
    kinv = scipy.linalg.cho_solve((chol, True), np.eye(m))
    # dLML/dtheta_j = 0.5 sum_dims a^T dK a - 0.5 d tr(K^-1 dK), dK wrt log-params
    dks = (sv * base, sv * base * (d2 / ls**2), nv * np.eye(m))
    grad = np.empty(3)
    for j, dk in enumerate(dks):
        quad = float(np.einsum("id,ij,jd->", alpha, dk, alpha))
        grad[j] = 0.5 * quad - 0.5 * d * float((kinv * dk).sum())
    return -lml, -grad


def _initial_thetas(d2: np.ndarray, y: np.ndarray, n_restarts: int, seed: int):
    """Data-driven first init; remaining draws log-uniform within the bounds."""
    off = d2[np.triu_indices(len(d2), k=1)]
    diameter = float(np.sqrt(np.median(off))) if off.size else 1.0
    diameter = max(diameter, 1e-6)
    var = max(float(y.var(axis=0, ddof=0).mean()), 1e-12)
    bounds = np.log(
        [[1e-3 * var, 1e3 * var], [1e-2 * diameter, 1e2 * diameter], [1e-8 * var, 10.0 * var]]
    )
    thetas = [np.log([var, diameter, 0.1 * var])]
    rng = np.random.default_rng(np.random.SeedSequence([seed, 101]))
    for _ in range(max(n_restarts - 1, 0)):
        thetas.append(rng.uniform(bounds[:, 0], bounds[:, 1]))
    return thetas, [tuple(b) for b in bounds]


def gp_fit(inputs, targets, n_restarts: int = 5, seed: int = 0) -> GpModel:
    """Maximize the log marginal likelihood over seeded restarts."""
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.atleast_2d(np.asarray(targets, dtype=float))
    if x.shape[0] < 3:
        raise ValueError("need at least three samples")
    d2 = _sq_dists(x, x)
    thetas, bounds = _initial_thetas(d2, y, n_restarts, seed)
    best = None
    for theta0 in thetas:
        res = minimize(
            _neg_lml_and_grad, theta0, args=(d2, y), jac=True, method="L-BFGS-B", bounds=bounds
        )
        if best is None or res.fun < best.fun:
            best = res
    sv, ls, nv = np.exp(best.x)
    return gp_condition(x, y, sv, ls, nv)


def gp_predict(model: GpModel, query) -> np.ndarray:
    """Posterior mean k(query, X) (K + noise I)^-1 Y; prior mean is zero."""
    q = np.asarray(query, dtype=float)
    single = q.ndim == 1
    k = gp_kernel(np.atleast_2d(q), model.train_inputs, model.signal_variance, model.lengthscale)
    out = k @ model.alpha
    return out[0] if single else out
