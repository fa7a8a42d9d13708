"""Symmetric-definite generalized eigensolver for the projection step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .exceptions import ArgumentError, DimensionError, NumericError


@dataclass(frozen=True)
class EigenSolution:
    """The ``d`` smallest eigenpairs of ``A p = lambda (B + mu I) p``.

    Columns of ``eigenvectors`` satisfy ``p_j^T (B + mu I) p_j = 1/d``, so the
    whole projection has unit trace against the regularised right-hand matrix.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    shift: float


def _check_symmetric(name, M, tol=1e-9):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M), initial=0.0)))
    if np.max(np.abs(M - M.T), initial=0.0) > tol * scale:
        raise ArgumentError(f"{name} is not symmetric")
    return (M + M.T) / 2.0


def _fix_signs(V):
    # make the largest-magnitude entry of each column positive
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def solve_gep(A, B, d: int, ridge: float = 1e-8) -> EigenSolution:
    """Smallest ``d`` eigenpairs of the pencil ``(A, B + mu I)``.

    ``mu = ridge * trace(B) / N``. The pencil is reduced to a standard
    symmetric problem with the Cholesky factor of the regularised ``B``.

    Raises
    ------
    NumericError
        If the regularised ``B`` is not positive definite.
    """
    A = _check_symmetric("A", A)
    B = _check_symmetric("B", B)
    n = A.shape[0]
    if B.shape != A.shape:
        raise DimensionError(f"A has shape {A.shape} but B has shape {B.shape}")
    if not 1 <= d <= n:
        raise ArgumentError(f"d must be in [1, {n}], got {d}")
    if ridge < 0:
        raise ArgumentError(f"ridge must be nonnegative, got {ridge}")

    mu = ridge * float(np.trace(B)) / n
    B_reg = B + mu * np.eye(n)
    try:
        C = linalg.cholesky(B_reg, lower=True)
    except linalg.LinAlgError:
        raise NumericError(
            "right-hand matrix is not positive definite after regularisation "
            f"(mu={mu:.3g}); increase ridge") from None

    # C^{-1} A C^{-T}
    tmp = linalg.solve_triangular(C, A, lower=True)
    S = linalg.solve_triangular(C, tmp.T, lower=True)
    S = (S + S.T) / 2.0
    vals, Y = linalg.eigh(S, subset_by_index=(0, d - 1))
    V = linalg.solve_triangular(C, Y, lower=True, trans="T")
    V = _fix_signs(V)

    # Y orthonormal => V^T B_reg V = I; spread the unit trace over the columns
    V = V / np.sqrt(d)
    res = np.linalg.norm(A @ V - (B_reg @ V) * vals, axis=0)
    return EigenSolution(eigenvalues=vals, eigenvectors=V, residuals=res, shift=mu)


def kernel_range(K, rank_tol: float = 1e-3, min_rank: int = 1):
    """Eigenvectors and eigenvalues of ``K`` above ``rank_tol * lambda_max``.

    At least ``min_rank`` leading directions are always kept.
    """
    K = _check_symmetric("K", K)
    if not 0 <= rank_tol < 1:
        raise ArgumentError(f"rank_tol must be in [0, 1), got {rank_tol}")
    w, U = linalg.eigh(K)
    if w[-1] <= 0:
        raise NumericError("kernel matrix has no positive eigenvalue")
    keep = w > rank_tol * w[-1]
    keep[-min_rank:] = True
    return U[:, keep], w[keep]


def solve_kernel_gep(K, L, D, d: int, ridge: float = 1e-8,
                     rank_tol: float = 1e-3) -> EigenSolution:
    """Smallest ``d`` eigenpairs of ``K L K p = lambda K D K p`` with ``p`` in range(K).

    Components of ``p`` in the null space of ``K`` do not change ``K p`` and
    only make the pencil singular, so ``p`` is restricted to the span of the
    eigenvectors of ``K`` whose eigenvalues exceed ``rank_tol`` times the
    largest, and the reduced pencil is passed to :func:`solve_gep`.
    Eigenvalues, residuals and ``shift`` refer to the reduced pencil; the
    returned eigenvectors are mapped back to ``R^N``.
    """
    n = np.shape(K)[0]
    if not 1 <= d <= n:
        raise ArgumentError(f"d must be in [1, {n}], got {d}")
    U, w = kernel_range(K, rank_tol, min_rank=d)
    KU = U * w
    A = KU.T @ np.asarray(L, dtype=np.float64) @ KU
    B = KU.T @ np.asarray(D, dtype=np.float64) @ KU
    sol = solve_gep((A + A.T) / 2.0, (B + B.T) / 2.0, d, ridge)
    return EigenSolution(eigenvalues=sol.eigenvalues, eigenvectors=U @ sol.eigenvectors,
                         residuals=sol.residuals, shift=sol.shift)
