"""Dense linear-algebra helpers for small SPD matrices.

All functions are pure and operate on float64 ndarrays. Covariance handling
elsewhere in the package is funnelled through these helpers so that the
numerical tolerance policy lives in one place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotPositiveDefiniteError

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "symmetrize",
    "is_positive_definite",
    "pseudo_inverse",
    "pseudo_inverse_stack",
    "solve_spd",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerance policy.

    pd_check_eps: smallest admissible Cholesky pivot in is_positive_definite.
    pinv_rcond: singular values below pinv_rcond * sigma_max are truncated;
        None selects the standard SVD cutoff max(rows, cols) * machine eps.
    symmetrize_eps: relative asymmetry considered negligible.
    """

    pd_check_eps: float = 1e-10
    pinv_rcond: float | None = None
    symmetrize_eps: float = 1e-12

    def __post_init__(self):
        if self.pd_check_eps <= 0 or self.symmetrize_eps <= 0:
            raise ValueError("tolerances must be strictly positive")
        if self.pinv_rcond is not None and self.pinv_rcond <= 0:
            raise ValueError("pinv_rcond must be strictly positive")


DEFAULT_TOL = Tolerances()


def _as_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def symmetrize(m) -> np.ndarray:
    """Return (m + m.T) / 2."""
    m = _as_square(m)
    return (m + m.T) / 2.0


def is_positive_definite(m, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Cholesky-based PD test: factorization succeeds with pivots > pd_check_eps."""
    m = _as_square(m)
    if np.isnan(m).any():
        raise ValueError("matrix contains NaN entries")
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return bool((np.diag(chol) ** 2 > tol.pd_check_eps).all())


def _svd_cutoff(s: np.ndarray, shape, tol: Tolerances) -> float:
    rcond = tol.pinv_rcond
    if rcond is None:
        rcond = max(shape) * np.finfo(float).eps
    return rcond * (s.max() if s.size else 0.0)


def pseudo_inverse(m, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via SVD with relative cutoff on singular values."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={m.ndim}")
    if not np.isfinite(m).all():
        raise ValueError("matrix contains non-finite entries")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    cutoff = _svd_cutoff(s, m.shape, tol)
    keep = s > cutoff
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (vt.T * inv) @ u.T


def pseudo_inverse_stack(ms, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Pseudo-inverse of a (n, r, c) stack, same cutoff rule per matrix."""
    ms = np.asarray(ms, dtype=float)
    if ms.ndim != 3:
        raise ValueError(f"expected a stack of matrices, got ndim={ms.ndim}")
    if not np.isfinite(ms).all():
        raise ValueError("stack contains non-finite entries")
    u, s, vt = np.linalg.svd(ms, full_matrices=False)
    rcond = tol.pinv_rcond
    if rcond is None:
        rcond = max(ms.shape[1:]) * np.finfo(float).eps
    cutoff = rcond * s.max(axis=1, keepdims=True)
    inv = np.where(s > cutoff, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    return np.einsum("nij,nj,nkj->nik", vt.transpose(0, 2, 1), inv, u)


def solve_spd(a, b) -> np.ndarray:
    """Solve a @ x = b for symmetric positive definite a via Cholesky."""
    a = _as_square(a)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"shape mismatch: a is {a.shape}, b has leading dim {b.shape[0]}")
    try:
        factor = scipy.linalg.cho_factor(a, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"matrix is not positive definite: {exc}") from exc
    return scipy.linalg.cho_solve(factor, b)
