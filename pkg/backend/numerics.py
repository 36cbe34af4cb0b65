"""Dense linear-algebra kernels shared by the identification methods."""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from backend.exceptions import ConvergenceError, DimensionError

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class TruncatedSvd:
    U_r: np.ndarray
    Sigma_r: np.ndarray
    V_r: np.ndarray
    full_singular_values: np.ndarray

    @property
    def order(self) -> int:
        return self.Sigma_r.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.U_r * self.Sigma_r) @ self.V_r.T

    def discarded_energy(self) -> float:
        """Frobenius norm of what the truncation drops."""
        tail = self.full_singular_values[self.order:]
        return float(np.sqrt(np.sum(tail * tail)))


@dataclass(frozen=True)
class PsdRoot:
    inverse_sqrt: np.ndarray
    sqrt: np.ndarray
    rank: int
    pseudo: bool


def _svd(M: np.ndarray):
    try:
        return scipy.linalg.svd(M, full_matrices=False, check_finite=False)
    except scipy.linalg.LinAlgError:
        pass
    try:
        return scipy.linalg.svd(M, full_matrices=False, check_finite=False, lapack_driver="gesvd")
    except scipy.linalg.LinAlgError as e:
        raise ConvergenceError(f"SVD of a {M.shape[0]}x{M.shape[1]} matrix did not converge") from e


def rank_cutoff(singular_values: np.ndarray, shape) -> float:
    if singular_values.size == 0:
        return 0.0
    return max(shape) * EPS * float(singular_values[0])


def singular_values(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if min(M.shape) == 0:
        return np.zeros(0)
    try:
        return scipy.linalg.svdvals(M, check_finite=False)
    except scipy.linalg.LinAlgError as e:
        raise ConvergenceError(f"SVD of a {M.shape[0]}x{M.shape[1]} matrix did not converge") from e


def numerical_rank(M: np.ndarray) -> int:
    s = singular_values(M)
    return int(np.sum(s > rank_cutoff(s, np.shape(M))))


def condition_number(M: np.ndarray) -> float:
    """Effective condition number: largest over smallest singular value kept by the cutoff."""
    s = singular_values(M)
    if s.size == 0 or s[0] == 0.0:
        return float("inf")
    kept = s[s > rank_cutoff(s, np.shape(M))]
    return float(kept[0] / kept[-1])


def svd_truncate(M: np.ndarray, n_r: int) -> TruncatedSvd:
    M = np.asarray(M, dtype=float)
    if not 1 <= n_r <= min(M.shape):
        raise ValueError(f"truncation order {n_r} outside [1, {min(M.shape)}]")
    U, s, Vt = _svd(M)
    return TruncatedSvd(
        U_r=U[:, :n_r],
        Sigma_r=s[:n_r].copy(),
        V_r=Vt[:n_r].T,
        full_singular_values=s,
    )


def pinv_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares solution of A X = B through a cut-off SVD pseudoinverse."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    vector = B.ndim == 1
    if vector:
        B = B[:, np.newaxis]
    if A.shape[0] != B.shape[0]:
        raise DimensionError(f"A rows ({A.shape[0]}) != B rows ({B.shape[0]})")
    if min(A.shape) == 0:
        X = np.zeros((A.shape[1], B.shape[1]))
        return X[:, 0] if vector else X

    U, s, Vt = _svd(A)
    keep = s > rank_cutoff(s, A.shape)
    X = (Vt[keep].T / s[keep]) @ (U[:, keep].T @ B)
    return X[:, 0] if vector else X


def row_space_basis(R: np.ndarray) -> np.ndarray:
    """Orthonormal basis (as columns) of the row space of R."""
    R = np.asarray(R, dtype=float)
    if min(R.shape) == 0:
        return np.zeros((R.shape[1], 0))
    _, s, Vt = _svd(R)
    keep = s > rank_cutoff(s, R.shape)
    return Vt[keep].T


def project_out_rows(M: np.ndarray, R: np.ndarray) -> np.ndarray:
    """M @ Pi, with Pi the orthogonal projector onto the null space of R's rows."""
    M = np.asarray(M, dtype=float)
    if M.shape[1] != np.shape(R)[1]:
        raise DimensionError(f"column counts differ: {M.shape[1]} vs {np.shape(R)[1]}")
    V = row_space_basis(R)
    return M - (M @ V) @ V.T


def oblique_projection(Y_f: np.ndarray, U_f: np.ndarray, W_p: np.ndarray) -> np.ndarray:
    """Project the row space of Y_f onto the row space of W_p along the row space of U_f.

    O = (Y_f Pi) (W_p Pi)^+ W_p; Pi is never formed, only applied.
    """
    Y_f = np.asarray(Y_f, dtype=float)
    W_p = np.asarray(W_p, dtype=float)
    columns = {Y_f.shape[1], np.shape(U_f)[1], W_p.shape[1]}
    if len(columns) != 1:
        raise DimensionError(
            f"column counts differ: Y_f {Y_f.shape[1]}, U_f {np.shape(U_f)[1]}, W_p {W_p.shape[1]}"
        )
    V = row_space_basis(U_f)
    Y_pi = Y_f - (Y_f @ V) @ V.T
    W_pi = W_p - (W_p @ V) @ V.T
    # X = Y_pi W_pi^+  <=>  W_pi^T X^T = Y_pi^T in the least-squares sense
    X = pinv_solve(W_pi.T, Y_pi.T).T
    return X @ W_p


def sqrt_psd(M: np.ndarray) -> PsdRoot:
    """Symmetric square root and inverse square root of a PSD matrix.

    Eigenvalues below the cutoff are dropped, so for a singular matrix the
    inverse root is the pseudo-inverse root and ``pseudo`` is set.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    try:
        w, V = scipy.linalg.eigh((M + M.T) / 2.0, check_finite=False)
    except scipy.linalg.LinAlgError as e:
        raise ConvergenceError(f"eigh of a {M.shape[0]}x{M.shape[0]} matrix did not converge") from e

    top = float(np.max(np.abs(w))) if w.size else 0.0
    keep = w > M.shape[0] * EPS * top
    Vk = V[:, keep]
    root = np.sqrt(w[keep])
    return PsdRoot(
        inverse_sqrt=(Vk / root) @ Vk.T,
        sqrt=(Vk * root) @ Vk.T,
        rank=int(np.sum(keep)),
        pseudo=not bool(np.all(keep)),
    )
