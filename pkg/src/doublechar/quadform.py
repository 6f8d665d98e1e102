"""Quadratic forms on R^{2n}, their Hamilton maps and singular spaces.

Coordinates are ordered ``X = (x_1, ..., x_n, xi_1, ..., xi_n)`` and the
symplectic form is ``sigma((x, xi), (y, eta)) = xi.y - x.eta``, i.e.
``sigma(X, Y) = X^T J Y`` with ``J = [[0, -I], [I, 0]]``.

A quadratic symbol is stored through its symmetric coefficient matrix ``A``
so that ``q(X) = 1/2 X^T A X`` (bilinear, no complex conjugation).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import linalg, optimize

from ._linalg import symplectic_gram
from .errors import DimensionError, NontrivialSingularSpace

__all__ = [
    "QuadraticSymbol",
    "HamiltonMap",
    "SingularSpaceResult",
    "EllipticityReport",
    "eval_quadratic",
    "hamilton_map",
    "singular_space",
    "k0_index",
    "is_elliptic_on_singular_space",
    "real_part_nonneg",
    "schrodinger_symbol",
]

DEFAULT_RANK_TOL = 1e-10
DEFAULT_ELLIPTIC_THRESHOLD = 1e-8


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class QuadraticSymbol:
    """Quadratic form ``q(X) = 1/2 X^T A X`` on C^{2n}.

    Parameters
    ----------
    n : int
        Half-dimension of phase space.
    A : array_like, shape (2n, 2n)
        Coefficient matrix.  Only the upper triangle is read; the lower one
        is overwritten by its mirror image so that ``A == A.T`` exactly.
    """

    n: int
    A: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise DimensionError(f"n must be >= 1, got {self.n}")
        A = np.asarray(self.A, dtype=complex)
        if A.shape != (2 * n, 2 * n):
            raise DimensionError(f"A must have shape {(2 * n, 2 * n)}, got {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ValueError("A has non-finite entries")
        A = np.triu(A) + np.triu(A, 1).T
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "A", _readonly(A))

    def __call__(self, X) -> complex:
        return eval_quadratic(self, X)

    def bilinear(self, X, Y) -> complex:
        """Polarized form ``q(X, Y) = 1/2 X^T A Y``."""
        X = self._check(X)
        Y = self._check(Y)
        return complex(0.5 * X @ self.A @ Y)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X)
        if X.shape != (2 * self.n,):
            raise DimensionError(f"expected a vector of length {2 * self.n}, got shape {X.shape}")
        return X

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.A.imag == 0))


def schrodinger_symbol(V2) -> QuadraticSymbol:
    """Symbol ``|xi|^2 + 1/2 V2 x.x`` of a Schrodinger operator at a minimum.

    ``V2`` is the (complex symmetric) Hessian of the potential at 0.
    """
    V2 = np.atleast_2d(np.asarray(V2, dtype=complex))
    n = V2.shape[0]
    A = np.zeros((2 * n, 2 * n), dtype=complex)
    A[:n, :n] = V2
    A[n:, n:] = 2.0 * np.eye(n)
    return QuadraticSymbol(n, A)


def eval_quadratic(q: QuadraticSymbol, X) -> complex:
    """Evaluate ``q(X) = 1/2 X^T A X`` at a real or complex vector ``X``."""
    X = q._check(X)
    return complex(0.5 * X @ q.A @ X)


@dataclass(frozen=True)
class HamiltonMap:
    """Matrix ``F`` with ``q(X, Y) = sigma(X, F Y)``."""

    F: np.ndarray

    def __post_init__(self):
        F = np.asarray(self.F, dtype=complex)
        if F.ndim != 2 or F.shape[0] != F.shape[1] or F.shape[0] % 2:
            raise DimensionError(f"F must be square of even size, got {F.shape}")
        object.__setattr__(self, "F", _readonly(F))

    @property
    def n(self) -> int:
        return self.F.shape[0] // 2

    @property
    def re(self) -> np.ndarray:
        return self.F.real

    @property
    def im(self) -> np.ndarray:
        return self.F.imag

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvals(self.F)

    def symbol(self) -> QuadraticSymbol:
        """Recover the quadratic form, ``A = 2 J F``."""
        J = symplectic_gram(self.n)
        return QuadraticSymbol(self.n, 2.0 * J @ self.F)


def as_hamilton_map(F) -> HamiltonMap:
    if isinstance(F, HamiltonMap):
        return F
    if isinstance(F, QuadraticSymbol):
        return hamilton_map(F)
    return HamiltonMap(np.asarray(F))


def hamilton_map(q: QuadraticSymbol) -> HamiltonMap:
    """Hamilton map of ``q``.

    From ``sigma(X, F Y) = X^T J F Y = 1/2 X^T A Y`` we get
    ``F = 1/2 J^{-1} A = -1/2 J A``.  The defining identity is checked on the
    standard basis before returning.
    """
    J = symplectic_gram(q.n)
    F = -0.5 * J @ q.A
    # sigma(e_i, F e_j) is the (i, j) entry of J F
    err = np.max(np.abs(J @ F - 0.5 * q.A), initial=0.0)
    if err > 1e-12 * max(1.0, float(np.max(np.abs(q.A), initial=0.0))):
        raise RuntimeError(f"Hamilton map check failed (residual {err:.3e})")
    return HamiltonMap(F)


@dataclass(frozen=True)
class SingularSpaceResult:
    """Orthonormal real basis of the singular space and the kernel history.

    ``per_step_dims[k]`` is the dimension of the intersection of the kernels
    of ``(Re F)(Im F)^j`` for ``j = 0..k``, intersected with R^{2n}.
    """

    basis: np.ndarray
    d: int
    per_step_dims: tuple
    rank_tolerance: float

    @property
    def is_trivial(self) -> bool:
        return self.d == 0


def _real_kernel(M: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of ker M for a real matrix, thresholding at ``tol``."""
    m = M.shape[1]
    if M.size == 0:
        return np.eye(m)
    _, s, Vh = linalg.svd(M, full_matrices=True)
    rank = int(np.sum(s > tol))
    return Vh[rank:].T.copy()


def singular_space(F, rank_tolerance: float = DEFAULT_RANK_TOL) -> SingularSpaceResult:
    """Real subspace on which ``(Re F)(Im F)^j`` vanishes for ``j < 2n``.

    Each block ``(Re F)(Im F)^j`` is divided by ``||F||^{j+1}`` so that the
    rank decision is invariant under rescaling ``F``; singular values of the
    stacked, rescaled blocks below ``rank_tolerance`` are treated as zero.
    """
    if rank_tolerance <= 0:
        raise ValueError("rank_tolerance must be positive")
    F = as_hamilton_map(F)
    dim = 2 * F.n
    scale = float(np.linalg.norm(F.F, 2))
    if scale == 0.0:
        return SingularSpaceResult(np.eye(dim), dim, (dim,) * dim, rank_tolerance)
    ReF = F.re / scale
    ImF = F.im / scale

    blocks = []
    dims = []
    M = ReF.copy()
    basis = np.eye(dim)
    for _ in range(dim):
        blocks.append(M)
        basis = _real_kernel(np.vstack(blocks), rank_tolerance)
        dims.append(basis.shape[1])
        M = M @ ImF
    return SingularSpaceResult(basis, basis.shape[1], tuple(dims), rank_tolerance)


def k0_index(F, rank_tolerance: float = DEFAULT_RANK_TOL) -> int:
    """Smallest k such that the kernels up to ``(Re F)(Im F)^k`` meet only in 0."""
    res = singular_space(F, rank_tolerance)
    if res.d > 0:
        raise NontrivialSingularSpace(f"singular space has dimension {res.d}")
    return next(k for k, d in enumerate(res.per_step_dims) if d == 0)


@dataclass(frozen=True)
class EllipticityReport:
    elliptic_on_S: bool
    witness: Optional[np.ndarray]
    min_abs_q_on_sphere: float
    threshold: float = field(default=DEFAULT_ELLIPTIC_THRESHOLD)


def _min_abs_two_dim(B: np.ndarray, samples: int):
    # v(phi) = (cos phi, sin phi); q(v) is a trigonometric polynomial of degree 2
    def absq(phi):
        c, s = np.cos(phi), np.sin(phi)
        return np.abs(B[0, 0] * c * c + 2 * B[0, 1] * c * s + B[1, 1] * s * s)

    phis = np.linspace(0.0, np.pi, 8 * samples, endpoint=False)
    vals = absq(phis)
    k = int(np.argmin(vals))
    step = np.pi / (8 * samples)
    res = optimize.minimize_scalar(
        absq, bounds=(phis[k] - step, phis[k] + step), method="bounded",
        options={"xatol": 1e-14},
    )
    phi = res.x if res.fun < vals[k] else phis[k]
    return float(min(res.fun, vals[k])), np.array([np.cos(phi), np.sin(phi)])


def _min_abs_sphere_search(B: np.ndarray, samples: int, rng) -> tuple:
    """Multi-start local minimization of ``|v^T B v|^2 / |v|^4``."""
    d = B.shape[0]

    def obj(v):
        r = v @ v
        g = v @ B @ v
        val = abs(g) ** 2 / r**2
        grad = 4 * np.real(np.conj(g) * (B @ v)) / r**2 - 4 * abs(g) ** 2 * v / r**3
        return val, grad

    best_val, best_v = np.inf, None
    for _ in range(min(samples, 16)):
        v0 = rng.standard_normal(d)
        res = optimize.minimize(obj, v0 / np.linalg.norm(v0), jac=True, method="BFGS",
                                options={"gtol": 1e-14})
        v = res.x / np.linalg.norm(res.x)
        val = abs(v @ B @ v)
        if val < best_val:
            best_val, best_v = val, v
    return best_val, best_v


def is_elliptic_on_singular_space(
    q: QuadraticSymbol,
    S: SingularSpaceResult,
    samples: int = 64,
    threshold: float = DEFAULT_ELLIPTIC_THRESHOLD,
    seed: int = 0,
) -> EllipticityReport:
    """Decide whether ``q`` vanishes on the unit sphere of ``S``.

    The restricted form ``B = 1/2 S^T A S`` is studied on the unit sphere of
    R^d.  For ``d = 1`` and ``d = 2`` the minimum of ``|q|`` is computed
    directly.  For ``d >= 3`` the set ``{(v^T Re B v, v^T Im B v)}`` is convex,
    so the distance from 0 equals ``max_theta lambda_min(cos theta Re B +
    sin theta Im B)`` when positive, and 0 otherwise; a witness is then found
    by local search.

    The threshold is multiplied by ``||A||_2`` so the decision does not depend
    on the overall scale of ``q``.
    """
    d = S.d
    if d == 0:
        return EllipticityReport(True, None, float("inf"), threshold)
    scale = float(np.linalg.norm(q.A, 2))
    thr = threshold * scale
    B = 0.5 * S.basis.T @ q.A @ S.basis
    if d == 1:
        min_abs = float(abs(B[0, 0]))
        v = np.array([1.0])
    elif d == 2:
        min_abs, v = _min_abs_two_dim(B, samples)
    else:
        Br, Bi = B.real, B.imag

        def neg_support(theta):
            return -linalg.eigvalsh(np.cos(theta) * Br + np.sin(theta) * Bi)[0]

        thetas = np.linspace(0.0, 2 * np.pi, 8 * samples, endpoint=False)
        vals = np.array([neg_support(t) for t in thetas])
        k = int(np.argmin(vals))
        step = 2 * np.pi / (8 * samples)
        res = optimize.minimize_scalar(
            neg_support, bounds=(thetas[k] - step, thetas[k] + step), method="bounded",
            options={"xatol": 1e-14},
        )
        support = max(-res.fun, -vals[k])
        min_abs = max(support, 0.0)
        v = None
        if min_abs <= thr:
            _, v = _min_abs_sphere_search(B, samples, np.random.default_rng(seed))
    elliptic = min_abs > thr
    witness = None
    if not elliptic:
        witness = S.basis @ v
        witness = witness / np.linalg.norm(witness)
    return EllipticityReport(elliptic, witness, float(min_abs), threshold)


def real_part_nonneg(q: QuadraticSymbol, tol: float = 1e-12) -> bool:
    """True iff ``Re A`` is positive semidefinite up to ``tol * max(1, ||A||)``."""
    lam = linalg.eigvalsh(q.A.real)[0]
    return bool(lam >= -tol * max(1.0, float(np.linalg.norm(q.A, 2))))
