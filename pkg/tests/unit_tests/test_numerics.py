import numpy as np
import pytest
from numpy.testing import assert_allclose

from backend.exceptions import DimensionError
from backend.numerics import (
    condition_number,
    numerical_rank,
    oblique_projection,
    pinv_solve,
    project_out_rows,
    sqrt_psd,
    svd_truncate,
)


def test_svd_truncate_diagonal():
    t = svd_truncate(np.diag([3.0, 2.0, 1.0]), 2)
    assert_allclose(t.Sigma_r, [3.0, 2.0])
    assert_allclose(t.full_singular_values, [3.0, 2.0, 1.0])
    assert np.linalg.norm(np.diag([3.0, 2.0, 1.0]) - t.reconstruct()) == pytest.approx(1.0)
    assert t.discarded_energy() == pytest.approx(1.0)


def test_svd_truncate_rank_one_exact(rng):
    a, b = rng.standard_normal(5), rng.standard_normal(4)
    M = np.outer(a, b)
    assert_allclose(svd_truncate(M, 1).reconstruct(), M, atol=1e-12)


def test_svd_truncate_gram_oracle(rng):
    M = rng.standard_normal((8, 5))
    t = svd_truncate(M, 3)
    gram = np.sort(np.linalg.eigvalsh(M.T @ M))[::-1]
    assert_allclose(t.full_singular_values, np.sqrt(gram), atol=1e-9)
    assert_allclose(t.Sigma_r, t.full_singular_values[:3])
    assert_allclose(t.U_r.T @ t.U_r, np.eye(3), atol=1e-10)
    assert_allclose(t.V_r.T @ t.V_r, np.eye(3), atol=1e-10)


def test_svd_truncate_eckart_young(rng):
    M = rng.standard_normal((9, 6))
    t = svd_truncate(M, 2)
    residual = np.linalg.norm(M - t.reconstruct()) ** 2
    assert residual == pytest.approx(np.sum(t.full_singular_values[2:] ** 2), rel=1e-8)


def test_svd_truncate_full_order_reconstructs(rng):
    M = rng.standard_normal((6, 7))
    t = svd_truncate(M, 6)
    assert np.linalg.norm(M - t.reconstruct()) / np.linalg.norm(M) < 1e-10


def test_svd_truncate_order_range():
    with pytest.raises(ValueError):
        svd_truncate(np.eye(3), 0)
    with pytest.raises(ValueError):
        svd_truncate(np.eye(3), 4)


def test_pinv_solve_identity(rng):
    B = rng.standard_normal((4, 2))
    assert_allclose(pinv_solve(np.eye(4), B), B, atol=1e-15)


def test_pinv_solve_least_squares_average():
    assert_allclose(pinv_solve([[1.0], [1.0]], [[0.0], [2.0]]), [[1.0]])


def test_pinv_solve_consistent_system(rng):
    A = rng.standard_normal((6, 3))
    X0 = rng.standard_normal((3, 2))
    assert_allclose(pinv_solve(A, A @ X0), X0, atol=1e-10)


def test_pinv_solve_minimum_norm():
    # rank-deficient: both columns identical, minimum-norm splits evenly
    X = pinv_solve([[1.0, 1.0], [1.0, 1.0]], [[2.0], [2.0]])
    assert_allclose(X, [[1.0], [1.0]], atol=1e-12)


def test_pinv_solve_projector(rng):
    A = rng.standard_normal((5, 3)) @ rng.standard_normal((3, 4))
    P = A @ pinv_solve(A, A)
    assert_allclose(P, A, atol=1e-9)
    Q = A @ pinv_solve(A, np.eye(5))
    assert_allclose(Q, Q.T, atol=1e-9)
    assert_allclose(Q @ Q, Q, atol=1e-9)


def test_pinv_solve_row_mismatch():
    with pytest.raises(DimensionError):
        pinv_solve(np.eye(3), np.ones((2, 1)))


def test_project_out_rows(rng):
    R = rng.standard_normal((2, 10))
    M = rng.standard_normal((3, 10))
    projected = project_out_rows(M, R)
    assert_allclose(projected @ R.T, 0.0, atol=1e-12)
    assert_allclose(project_out_rows(projected, R), projected, atol=1e-12)


def test_oblique_projection_trivial_cases():
    W_p = np.array([[1.0, 0.0]])
    U_f = np.array([[0.0, 1.0]])
    assert_allclose(oblique_projection(np.array([[1.0, 0.0]]), U_f, W_p), [[1.0, 0.0]], atol=1e-14)
    assert_allclose(oblique_projection(np.array([[1.0, 1.0]]), U_f, W_p), [[1.0, 0.0]], atol=1e-14)


def test_oblique_projection_decomposition(rng):
    m = 30
    W_p = rng.standard_normal((4, m))
    U_f = rng.standard_normal((3, m))
    G = rng.standard_normal((5, 4))
    H = rng.standard_normal((5, 3))
    O = oblique_projection(G @ W_p + H @ U_f, U_f, W_p)
    assert_allclose(O, G @ W_p, atol=1e-8)


def test_oblique_projection_idempotent_and_annihilating(rng):
    W_p = rng.standard_normal((3, 20))
    U_f = rng.standard_normal((2, 20))
    assert_allclose(oblique_projection(W_p, U_f, W_p), W_p, atol=1e-8)
    assert_allclose(oblique_projection(U_f, U_f, W_p), 0.0, atol=1e-8)


def test_oblique_projection_column_mismatch():
    with pytest.raises(DimensionError):
        oblique_projection(np.ones((1, 3)), np.ones((1, 4)), np.ones((1, 3)))


def test_rank_and_condition():
    assert numerical_rank(np.diag([1.0, 1e-3, 0.0])) == 2
    assert condition_number(np.diag([4.0, 2.0])) == pytest.approx(2.0)
    assert condition_number(np.diag([4.0, 1.0, 0.0])) == pytest.approx(4.0)
    assert condition_number(np.zeros((2, 2))) == float("inf")


def test_sqrt_psd_definite(rng):
    L = rng.standard_normal((4, 4))
    S = L @ L.T + 4 * np.eye(4)
    root = sqrt_psd(S)
    assert not root.pseudo
    assert_allclose(root.sqrt @ root.sqrt, S, atol=1e-10)
    assert_allclose(root.inverse_sqrt @ S @ root.inverse_sqrt, np.eye(4), atol=1e-10)


def test_sqrt_psd_singular_falls_back():
    root = sqrt_psd(np.diag([4.0, 0.0]))
    assert root.pseudo
    assert root.rank == 1
    assert_allclose(root.inverse_sqrt, np.diag([0.5, 0.0]))
    assert_allclose(root.sqrt, np.diag([2.0, 0.0]))
