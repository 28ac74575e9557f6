"""Bayesian filters: linear Kalman, discriminative variants, EKF, and UKF.

All filters share linear Gaussian latent dynamics z_i = A z_{i-1} + noise(G).
The discriminative filters replace the generative observation model with
regression-estimated conditional moments f(x) and Q(x) of the latent given
the observation, fused with the dynamics in information (precision) form.
Every recursion is deterministic, returns symmetrized covariances, and
raises FilterNumericError with the failing step index on non-finite or
non-PD intermediates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import FilterNumericError, NotPositiveDefiniteError, RankError
from .linalg import (
    DEFAULT_TOL,
    Tolerances,
    is_positive_definite,
    pseudo_inverse,
    pseudo_inverse_stack,
    symmetrize,
)

__all__ = [
    "StateSpaceParams",
    "GaussianBelief",
    "BeliefSequence",
    "DkfInputs",
    "UtParams",
    "kf_fit",
    "kf_filter",
    "dkf_filter",
    "robust_dkf_filter",
    "ekf_filter",
    "ukf_filter",
    "sigma_points",
    "unscented_transform",
]

INNOVATION_JITTER = 1e-10


@dataclass
class StateSpaceParams:
    """Linear-Gaussian model pieces.

    A: (d, d) transition matrix
    G: (d, d) process-noise covariance
    H: (p, d) observation matrix (linear observation model only)
    R: (p, p) observation-noise covariance
    S: (d, d) stationary latent covariance (initial filter covariance)
    """

    A: np.ndarray
    G: np.ndarray
    H: np.ndarray | None = None
    R: np.ndarray | None = None
    S: np.ndarray | None = None

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.G = np.atleast_2d(np.asarray(self.G, dtype=float))
        for name in ("H", "R", "S"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, np.atleast_2d(np.asarray(v, dtype=float)))

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]


@dataclass
class GaussianBelief:
    """Latent-state estimate: mean vector and covariance matrix."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.cov = np.atleast_2d(np.asarray(self.cov, dtype=float))


@dataclass
class BeliefSequence:
    """Filter output: per-step means (T, d) and covariances (T, d, d)."""

    means: np.ndarray
    covs: np.ndarray

    def __len__(self) -> int:
        return self.means.shape[0]

    def __getitem__(self, i: int) -> GaussianBelief:
        return GaussianBelief(self.means[i], self.covs[i])


@dataclass
class DkfInputs:
    """Precomputed conditional moments per step: f(x_i) and Q(x_i)."""

    f_values: np.ndarray  # (T, d)
    q_values: np.ndarray  # (T, d, d)

    def __post_init__(self):
        self.f_values = np.atleast_2d(np.asarray(self.f_values, dtype=float))
        self.q_values = np.asarray(self.q_values, dtype=float)
        if self.q_values.ndim != 3 or len(self.q_values) != len(self.f_values):
            raise ValueError("f_values and q_values must have equal length")


@dataclass(frozen=True)
class UtParams:
    """Scaled unscented-transform parameters; kappa None means 3 - d."""

    alpha: float = 1.0
    beta: float = 2.0
    kappa: float | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must be in (0, 1]")


def _cov_ddof1(rows: np.ndarray) -> np.ndarray:
    c = np.cov(rows, rowvar=False, ddof=1)
    return symmetrize(np.atleast_2d(c))


def kf_fit(latents, observations) -> StateSpaceParams:
    """Closed-form least squares fit of (A, G, H, R, S) from paired series."""
    z = np.atleast_2d(np.asarray(latents, dtype=float))
    x = np.atleast_2d(np.asarray(observations, dtype=float))
    t, d = z.shape
    p = x.shape[1]
    if x.shape[0] != t:
        raise ValueError("latents and observations must have the same length")
    if t < d + p + 2:
        raise ValueError(f"need at least {d + p + 2} samples, got {t}")
    sol, _, rank, _ = np.linalg.lstsq(z[:-1], z[1:], rcond=None)
    if rank < d:
        raise RankError("latent series is rank deficient; cannot fit dynamics")
    a = sol.T
    g = _cov_ddof1(z[1:] - z[:-1] @ a.T)
    sol, _, rank, _ = np.linalg.lstsq(z, x, rcond=None)
    if rank < d:
        raise RankError("latent series is rank deficient; cannot fit observation map")
    h = sol.T
    r = _cov_ddof1(x - z @ h.T)
    s = _cov_ddof1(z)
    return StateSpaceParams(A=a, G=g, H=h, R=r, S=s)


def _factor_innovation(m: np.ndarray, step: int):
    """Cholesky of an innovation covariance, with one jitter retry."""
    m = symmetrize(m)
    try:
        return scipy.linalg.cho_factor(m, lower=True)
    except np.linalg.LinAlgError:
        try:
            return scipy.linalg.cho_factor(m + INNOVATION_JITTER * np.eye(len(m)), lower=True)
        except np.linalg.LinAlgError:
            raise FilterNumericError(step, "innovation covariance not positive definite") from None


def _check_finite(mean: np.ndarray, cov: np.ndarray, step: int) -> None:
    if not (np.isfinite(mean).all() and np.isfinite(cov).all()):
        raise FilterNumericError(step, "non-finite state estimate")


def kf_filter(params: StateSpaceParams, observations, init: GaussianBelief) -> BeliefSequence:
    """Standard predict/update recursion for the linear-Gaussian model."""
    x = np.atleast_2d(np.asarray(observations, dtype=float))
    a, g, h, r = params.A, params.G, params.H, params.R
    t = x.shape[0]
    d = a.shape[0]
    mean, cov = init.mean.copy(), init.cov.copy()
    means = np.empty((t, d))
    covs = np.empty((t, d, d))
    eye = np.eye(d)
    for i in range(t):
        mean_pred = a @ mean
        cov_pred = symmetrize(a @ cov @ a.T + g)
        factor = _factor_innovation(h @ cov_pred @ h.T + r, i)
        gain = scipy.linalg.cho_solve(factor, h @ cov_pred).T
        mean = mean_pred + gain @ (x[i] - h @ mean_pred)
        cov = symmetrize((eye - gain @ h) @ cov_pred)
        _check_finite(mean, cov, i)
        means[i], covs[i] = mean, cov
    return BeliefSequence(means, covs)


def dkf_filter(
    params: StateSpaceParams,
    inputs: DkfInputs,
    pd_strategy: str = "verbatim",
    tol: Tolerances = DEFAULT_TOL,
) -> BeliefSequence:
    """Discriminative filter fusing dynamics with conditional moments.

    Starts from mean 0 and covariance S. Each step propagates the previous
    belief through the dynamics and combines precisions:

        cov_i  = pinv(pinv(M_i) + pinv(Q_i) - pinv(S))
        mean_i = cov_i (pinv(M_i) v_i + pinv(Q_i) f_i)

    with M_i = A cov_{i-1} A^T + G and v_i = A mean_{i-1}. The correction
    term pinv(Q_i) - pinv(S) must be positive definite; when it is not,
    the "verbatim" strategy replaces pinv(Q_i) by pinv(pinv(Q_i) + pinv(S))
    while the "drop" strategy omits the -pinv(S) term for that step.
    """
    if pd_strategy not in ("verbatim", "drop"):
        raise ValueError(f"unknown pd_strategy {pd_strategy!r}")
    if params.S is None:
        raise ValueError("params.S is required for the discriminative filter")
    a, g = params.A, params.G
    s = symmetrize(params.S)
    s_inv = pseudo_inverse(s, tol)
    f_vals, q_vals = inputs.f_values, inputs.q_values
    t, d = f_vals.shape
    q_invs = pseudo_inverse_stack(q_vals, tol)
    mean = np.zeros(d)
    cov = s.copy()
    means = np.empty((t, d))
    covs = np.empty((t, d, d))
    for i in range(t):
        v = a @ mean
        m_inv = pseudo_inverse(symmetrize(a @ cov @ a.T + g), tol)
        q_inv = q_invs[i]
        correction_ok = is_positive_definite(symmetrize(q_inv - s_inv), tol)
        if correction_ok:
            prec = m_inv + q_inv - s_inv
        elif pd_strategy == "verbatim":
            q_inv = pseudo_inverse(q_inv + s_inv, tol)
            prec = m_inv + q_inv - s_inv
        else:
            prec = m_inv + q_inv
        cov = symmetrize(pseudo_inverse(prec, tol))
        mean = cov @ (m_inv @ v + q_inv @ f_vals[i])
        _check_finite(mean, cov, i)
        means[i], covs[i] = mean, cov
    return BeliefSequence(means, covs)


def robust_dkf_filter(
    params: StateSpaceParams, inputs: DkfInputs, tol: Tolerances = DEFAULT_TOL
) -> BeliefSequence:
    """Discriminative filter with an improper flat prior.

    The stationary-precision term is treated as negligible and omitted, so
    no PD check is needed and S is unused. The first step is taken directly
    from the conditional moments; the recursion starts at the second step.
    """
    a, g = params.A, params.G
    f_vals, q_vals = inputs.f_values, inputs.q_values
    t, d = f_vals.shape
    q_invs = pseudo_inverse_stack(q_vals, tol)
    means = np.empty((t, d))
    covs = np.empty((t, d, d))
    means[0] = f_vals[0]
    covs[0] = symmetrize(q_vals[0])
    mean, cov = means[0], covs[0]
    for i in range(1, t):
        v = a @ mean
        m_inv = pseudo_inverse(symmetrize(a @ cov @ a.T + g), tol)
        cov = symmetrize(pseudo_inverse(m_inv + q_invs[i], tol))
        mean = cov @ (m_inv @ v + q_invs[i] @ f_vals[i])
        _check_finite(mean, cov, i)
        means[i], covs[i] = mean, cov
    return BeliefSequence(means, covs)


def ekf_filter(obs_fn, obs_jacobian, params: StateSpaceParams, observations,
               init: GaussianBelief) -> BeliefSequence:
    """Extended Kalman filter with a nonlinear state-to-observation map.

    obs_fn maps a state vector to an observation vector; obs_jacobian
    returns its (p, d) Jacobian. Linearization happens at the predicted
    mean of each step.
    """
    x = np.atleast_2d(np.asarray(observations, dtype=float))
    a, g, r = params.A, params.G, params.R
    t = x.shape[0]
    d = a.shape[0]
    mean, cov = init.mean.copy(), init.cov.copy()
    means = np.empty((t, d))
    covs = np.empty((t, d, d))
    eye = np.eye(d)
    for i in range(t):
        mean_pred = a @ mean
        cov_pred = symmetrize(a @ cov @ a.T + g)
        jac = np.atleast_2d(np.asarray(obs_jacobian(mean_pred), dtype=float))
        factor = _factor_innovation(jac @ cov_pred @ jac.T + r, i)
        gain = scipy.linalg.cho_solve(factor, jac @ cov_pred).T
        mean = mean_pred + gain @ (x[i] - np.asarray(obs_fn(mean_pred), dtype=float))
        cov = symmetrize((eye - gain @ jac) @ cov_pred)
        _check_finite(mean, cov, i)
        means[i], covs[i] = mean, cov
    return BeliefSequence(means, covs)


def sigma_points(mean: np.ndarray, cov: np.ndarray, ut: UtParams = UtParams()):
    """Scaled sigma points and weights: 2d + 1 points around the mean.

    Returns (points, mean_weights, cov_weights). Raises
    NotPositiveDefiniteError if the covariance cannot be factorized even
    after one jitter retry.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = symmetrize(cov)
    d = len(mean)
    kappa = ut.kappa if ut.kappa is not None else 3.0 - d
    lam = ut.alpha**2 * (d + kappa) - d
    scale = d + lam
    if scale <= 0:
        raise ValueError("alpha^2 (d + kappa) must exceed zero")
    try:
        chol = np.linalg.cholesky(scale * cov)
    except np.linalg.LinAlgError:
        try:
            chol = np.linalg.cholesky(scale * (cov + INNOVATION_JITTER * np.eye(d)))
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError("sigma-point covariance not positive definite") from None
    pts = np.empty((2 * d + 1, d))
    pts[0] = mean
    pts[1: d + 1] = mean + chol.T
    pts[d + 1:] = mean - chol.T
    wm = np.full(2 * d + 1, 1.0 / (2.0 * scale))
    wc = wm.copy()
    wm[0] = lam / scale
    wc[0] = lam / scale + (1.0 - ut.alpha**2 + ut.beta)
    return pts, wm, wc


def unscented_transform(points: np.ndarray, wm: np.ndarray, wc: np.ndarray,
                        noise_cov: np.ndarray | None = None):
    """Recombine transformed sigma points into a mean and covariance."""
    mean = wm @ points
    diff = points - mean
    cov = (wc[:, None] * diff).T @ diff
    if noise_cov is not None:
        cov = cov + noise_cov
    return mean, symmetrize(cov)


def ukf_filter(obs_fn, params: StateSpaceParams, observations,
               ut: UtParams = UtParams(), init: GaussianBelief | None = None) -> BeliefSequence:
    """Unscented Kalman filter; obs_fn maps (n, d) state rows to (n, p) rows.

    The state transition is multiplication by A; both the transition and the
    observation map are propagated through the scaled unscented transform.
    """
    if init is None:
        raise ValueError("an initial belief is required")
    x = np.atleast_2d(np.asarray(observations, dtype=float))
    a, g, r = params.A, params.G, params.R
    t = x.shape[0]
    d = a.shape[0]
    mean, cov = init.mean.copy(), init.cov.copy()
    means = np.empty((t, d))
    covs = np.empty((t, d, d))
    for i in range(t):
        try:
            pts, wm, wc = sigma_points(mean, cov, ut)
            mean_pred, cov_pred = unscented_transform(pts @ a.T, wm, wc, noise_cov=g)
            pts2, wm, wc = sigma_points(mean_pred, cov_pred, ut)
        except NotPositiveDefiniteError as exc:
            raise FilterNumericError(i, str(exc)) from None
        obs_pts = np.atleast_2d(np.asarray(obs_fn(pts2), dtype=float))
        x_mean, innov = unscented_transform(obs_pts, wm, wc, noise_cov=r)
        cross = (wc[:, None] * (pts2 - mean_pred)).T @ (obs_pts - x_mean)
        factor = _factor_innovation(innov, i)
        gain = scipy.linalg.cho_solve(factor, cross.T).T
        mean = mean_pred + gain @ (x[i] - x_mean)
        cov = symmetrize(cov_pred - gain @ innov @ gain.T)
        _check_finite(mean, cov, i)
        means[i], covs[i] = mean, cov
    return BeliefSequence(means, covs)
