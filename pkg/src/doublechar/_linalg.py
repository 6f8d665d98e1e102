"""Small linear-algebra helpers used by several modules."""

from __future__ import annotations

import numpy as np
from scipy import linalg


def symplectic_gram(n: int) -> np.ndarray:
    """Gram matrix J of sigma((x, xi), (y, eta)) = xi.y - x.eta.

    With X = (x, xi) and Y = (y, eta) one has sigma(X, Y) = X^T J Y.
    """
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def orthonormal_basis(B: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis of the column span of ``B`` (possibly empty)."""
    B = np.asarray(B)
    if B.size == 0 or B.shape[1] == 0:
        return np.zeros((B.shape[0], 0), dtype=B.dtype)
    U, s, _ = linalg.svd(B, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((B.shape[0], 0), dtype=B.dtype)
    rank = int(np.sum(s > tol * s[0]))
    return U[:, :rank]


def subspace_distance(A: np.ndarray, B: np.ndarray) -> float:
    """Spectral-norm distance between orthogonal projectors onto span(A), span(B)."""
    QA = orthonormal_basis(np.asarray(A))
    QB = orthonormal_basis(np.asarray(B))
    PA = QA @ QA.conj().T
    PB = QB @ QB.conj().T
    if PA.size == 0:
        return 0.0
    return float(np.linalg.norm(PA - PB, 2))


def real_gram(f, dim: int) -> np.ndarray:
    """Symmetric matrix M with f(X) = X^T M X, recovered by polarization.

    ``f`` must be a real quadratic form on R^dim; it is only ever evaluated,
    so this serves as an independent route to the matrix of a form.
    """
    eye = np.eye(dim)
    M = np.empty((dim, dim))
    for i in range(dim):
        for j in range(i, dim):
            val = 0.25 * (f(eye[i] + eye[j]) - f(eye[i] - eye[j]))
            M[i, j] = M[j, i] = val
    return M


def loglog_fit(x, y) -> tuple[float, float, float]:
    """Least-squares line through (log x, log y); returns (slope, intercept, r2)."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2
