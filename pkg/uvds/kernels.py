"""
Dense linear-algebra kernels shared by the solver, graphs and recognition code.

All routines are pure functions on float64 numpy arrays.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from uvds.exceptions import (
    NonFiniteError,
    NoConvergenceError,
    RankDeficientError,
    ShapeMismatchError,
    SingularPencilError,
)

logger = logging.getLogger(__name__)

Matrix = NDArray[np.float64]
Vector = NDArray[np.float64]

SYLVESTER_GUARD = 1e-12
RANK_GUARD = 1e-10


@dataclass(frozen=True)
class SymEig:
    """Eigenvalues sorted descending, eigenvectors as orthonormal columns."""

    eigenvalues: Vector
    eigenvectors: Matrix

    def reconstruct(self) -> Matrix:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.T


def as_matrix(values, operation: str = "as_matrix") -> Matrix:
    """Coerce to a 2-D float64 array and reject NaN/Inf."""
    m = np.asarray(values, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ShapeMismatchError(operation, "2-D matrix", m.shape)
    check_finite(m, operation)
    return m


def check_finite(m: np.ndarray, operation: str) -> None:
    if not np.all(np.isfinite(m)):
        raise NonFiniteError(operation)


def sym_eig(a: Matrix) -> SymEig:
    """
    Eigendecomposition of a symmetric matrix.

    The input is symmetrized as (A + A^T)/2. Each eigenvector is signed so its
    largest-magnitude entry (first one on ties) is positive, which makes the
    output deterministic.
    """
    a = as_matrix(a, "sym_eig")
    if a.shape[0] != a.shape[1]:
        raise ShapeMismatchError("sym_eig", "square matrix", a.shape)
    a = 0.5 * (a + a.T)
    try:
        w, u = scipy.linalg.eigh(a, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise NoConvergenceError("sym_eig", e)

    order = np.argsort(-w, kind="stable")
    w = w[order]
    u = u[:, order]

    pivots = np.argmax(np.abs(np.round(u, 12)), axis=0)
    signs = np.sign(u[pivots, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return SymEig(eigenvalues=w, eigenvectors=u * signs)


def solve_sylvester_symmetric(
    m_left: Matrix,
    m_right: Matrix,
    c: Matrix,
    left_eig: Optional[SymEig] = None,
    right_eig: Optional[SymEig] = None,
) -> Matrix:
    """
    Solve V @ M_R + M_L @ V = C for symmetric M_L (n x n) and M_R (d x d).

    Both operands are diagonalized and C is divided elementwise by the
    eigenvalue sums in the joint eigenbasis. Precomputed decompositions can
    be passed in to skip the corresponding eigensolve.
    """
    c = as_matrix(c, "solve_sylvester_symmetric")
    n, d = c.shape
    if left_eig is None:
        left_eig = sym_eig(m_left)
    if right_eig is None:
        right_eig = sym_eig(m_right)
    if left_eig.eigenvalues.shape[0] != n:
        raise ShapeMismatchError("solve_sylvester_symmetric", f"left operand {n}x{n}",
                                 left_eig.eigenvectors.shape)
    if right_eig.eigenvalues.shape[0] != d:
        raise ShapeMismatchError("solve_sylvester_symmetric", f"right operand {d}x{d}",
                                 right_eig.eigenvectors.shape)

    lam_l, u_l = left_eig.eigenvalues, left_eig.eigenvectors
    lam_r, u_r = right_eig.eigenvalues, right_eig.eigenvectors
    denom = lam_l[:, None] + lam_r[None, :]

    scale = np.max(np.abs(lam_l)) + np.max(np.abs(lam_r))
    guard = SYLVESTER_GUARD * scale
    smallest = float(np.min(np.abs(denom)))
    if smallest == 0.0 or smallest < guard:
        raise SingularPencilError(smallest, guard)

    c_tilde = u_l.T @ c @ u_r
    v = u_l @ (c_tilde / denom) @ u_r.T
    check_finite(v, "solve_sylvester_symmetric")
    return v


def lstsq(a: Matrix, b: Matrix, ridge: float = 0.0) -> Matrix:
    """
    argmin_P ||B - A P||_F^2 (+ ridge * ||P||_F^2) via the eigendecomposition
    of the Gram matrix A^T A.

    Raises RankDeficientError when ridge is zero and the Gram matrix has an
    eigenvalue below 1e-10 times its largest.
    """
    a = as_matrix(a, "lstsq")
    b = as_matrix(b, "lstsq")
    if a.shape[0] != b.shape[0]:
        raise ShapeMismatchError("lstsq", f"{a.shape[0]} rows in B", b.shape)

    m = a.shape[1]
    gram = a.T @ a
    if ridge > 0.0:
        gram = gram + ridge * np.eye(m)
    eig = sym_eig(gram)
    largest = float(eig.eigenvalues[0])
    smallest = float(eig.eigenvalues[-1])
    if largest <= 0.0 or smallest < RANK_GUARD * largest:
        raise RankDeficientError(smallest, largest)

    u = eig.eigenvectors
    return (u / eig.eigenvalues) @ (u.T @ (a.T @ b))


def default_ridge(a: Matrix) -> float:
    """Fallback ridge 1e-8 * trace(A^T A) / m used when lstsq is rank deficient."""
    a = np.asarray(a, dtype=np.float64)
    return 1e-8 * float(np.sum(a * a)) / max(a.shape[1], 1)


def column_l21(m: Matrix) -> float:
    """Sum of the Euclidean norms of the columns of M, i.e. ||M^T||_{2,1}."""
    m = as_matrix(m, "column_l21")
    return float(np.sum(np.linalg.norm(m, axis=0)))


def center_columns(m: Matrix) -> Tuple[Matrix, Vector]:
    """Subtract the column mean; returns the centered matrix and the mean."""
    m = as_matrix(m, "center_columns")
    mean = m.mean(axis=0)
    return m - mean, mean


def nearest_orthogonal(q: Matrix) -> Matrix:
    """Polar factor U V^T of Q, the closest orthogonal matrix in Frobenius norm."""
    u, _, vt = scipy.linalg.svd(q, check_finite=False)
    return u @ vt


def orthogonality_error(q: Matrix) -> float:
    return float(np.linalg.norm(q @ q.T - np.eye(q.shape[0])))
