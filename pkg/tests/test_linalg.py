import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dkfbench.errors import NotPositiveDefiniteError
from dkfbench.linalg import (
    DEFAULT_TOL,
    Tolerances,
    is_positive_definite,
    pseudo_inverse,
    pseudo_inverse_stack,
    solve_spd,
    symmetrize,
)


def test_symmetrize_examples():
    np.testing.assert_allclose(symmetrize([[1, 2], [0, 1]]), [[1, 1], [1, 1]])
    np.testing.assert_allclose(symmetrize(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(symmetrize([[0, -3], [3, 0]]), np.zeros((2, 2)))


def test_symmetrize_rejects_nonsquare():
    with pytest.raises(ValueError):
        symmetrize(np.ones((2, 3)))


@settings(max_examples=100)
@given(st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=2**31 - 1))
def test_symmetrize_idempotent(n, seed):
    m = np.random.default_rng(seed).normal(size=(n, n))
    once = symmetrize(m)
    np.testing.assert_array_equal(symmetrize(once), once)


def test_is_positive_definite_examples():
    assert is_positive_definite(np.eye(4))
    assert not is_positive_definite(np.array([[1.0, 2.0], [2.0, 1.0]]))  # eigs 3, -1
    assert not is_positive_definite(np.zeros((2, 2)))


def test_is_positive_definite_rejects_nan():
    with pytest.raises(ValueError):
        is_positive_definite(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_is_positive_definite_matches_eigenvalue_oracle():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = rng.integers(2, 11)
        m = symmetrize(rng.normal(size=(n, n)))
        oracle = np.linalg.eigvalsh(m).min() > DEFAULT_TOL.pd_check_eps
        assert is_positive_definite(m) == oracle


def test_pseudo_inverse_examples():
    np.testing.assert_allclose(
        pseudo_inverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]), atol=1e-12
    )
    rank1 = np.array([[1.0, 0.0], [0.0, 0.0]])
    np.testing.assert_allclose(pseudo_inverse(rank1), rank1, atol=1e-12)


def test_pseudo_inverse_penrose_identities():
    rng = np.random.default_rng(11)
    m = rng.normal(size=(5, 3))
    p = pseudo_inverse(m)
    np.testing.assert_allclose(m @ p @ m, m, atol=1e-8)
    np.testing.assert_allclose(p @ m @ p, p, atol=1e-8)
    np.testing.assert_allclose((m @ p).T, m @ p, atol=1e-8)
    np.testing.assert_allclose((p @ m).T, p @ m, atol=1e-8)


def test_pseudo_inverse_involutive_for_well_conditioned():
    rng = np.random.default_rng(3)
    for _ in range(20):
        m = rng.normal(size=(4, 4)) + 3.0 * np.eye(4)
        if np.linalg.cond(m) >= 1e8:
            continue
        np.testing.assert_allclose(pseudo_inverse(pseudo_inverse(m)), m, atol=1e-8)


def test_pseudo_inverse_rejects_nonfinite():
    with pytest.raises(ValueError):
        pseudo_inverse(np.array([[np.inf, 0.0], [0.0, 1.0]]))


def test_pseudo_inverse_stack_matches_single():
    rng = np.random.default_rng(5)
    stack = rng.normal(size=(8, 3, 3))
    stack[2] = 0.0  # include a singular member
    got = pseudo_inverse_stack(stack)
    for i in range(len(stack)):
        np.testing.assert_allclose(got[i], pseudo_inverse(stack[i]), atol=1e-10)


def test_solve_spd_examples():
    b = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    np.testing.assert_allclose(solve_spd(np.eye(3), b), b)
    np.testing.assert_allclose(solve_spd([[4.0]], [[2.0]]), [[0.5]])


def test_solve_spd_residual():
    rng = np.random.default_rng(13)
    w = rng.normal(size=(6, 6))
    a = w @ w.T + 6 * np.eye(6)
    b = rng.normal(size=(6, 2))
    x = solve_spd(a, b)
    resid = np.linalg.norm(a @ x - b) / np.linalg.norm(b)
    assert resid <= 1e-10


def test_solve_spd_rejects_indefinite():
    with pytest.raises(NotPositiveDefiniteError):
        solve_spd(np.array([[1.0, 2.0], [2.0, 1.0]]), np.ones(2))


def test_tolerances_validation():
    with pytest.raises(ValueError):
        Tolerances(pd_check_eps=0.0)
    with pytest.raises(ValueError):
        Tolerances(pinv_rcond=-1.0)
