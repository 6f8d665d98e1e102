"""Complex symplectic linear algebra on C^{2n} = {(z, zeta)}.

The symplectic form is ``sigma((z, zeta), (w, omega)) = zeta.w - z.omega``,
the complex-bilinear extension of the real form used in :mod:`quadform`, so
the same Gram matrix ``J`` applies.

Quadratic FBI phases are written
``phi(z, y) = 1/2 z^T Czz z + z^T Czy y + 1/2 y^T Cyy y`` and quadratic
weights ``Phi(z) = Re(1/2 z^T a z) + 1/2 conj(z)^T b z``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg

from ._linalg import symplectic_gram
from .errors import (
    DimensionError,
    NotGenerating,
    NotPositive,
    NotStrictlyPsh,
    RealEigenvalue,
    SingularBlock,
)
from .quadform import QuadraticSymbol, as_hamilton_map

__all__ = [
    "CanonicalMap",
    "FBIPhase",
    "WeightForm",
    "LagrangianPlane",
    "WeightGraph",
    "is_canonical",
    "stable_subspaces",
    "kappa_from_phase",
    "phase_from_kappa",
    "weight_from_phase",
    "weight_from_graph",
    "plane_of_weight",
    "standard_phase",
    "transport_symbol",
    "conjugate_hamilton_map",
    "normal_form_map",
]

CANONICAL_TOL = 1e-8
DET_TOL = 1e-12


def _ro(a, dtype=complex) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CanonicalMap:
    """Complex linear map of C^{2n}, expected to preserve sigma."""

    K: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.K, dtype=complex)
        if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] % 2:
            raise DimensionError(f"K must be square of even size, got {K.shape}")
        object.__setattr__(self, "K", _ro(K))

    @property
    def n(self) -> int:
        return self.K.shape[0] // 2

    def __call__(self, X) -> np.ndarray:
        return self.K @ np.asarray(X)

    def __matmul__(self, other: "CanonicalMap") -> "CanonicalMap":
        return CanonicalMap(self.K @ other.K)

    def inverse(self) -> "CanonicalMap":
        # K^{-1} = -J K^T J for a canonical map; a plain solve is used so
        # that non-canonical input is still inverted correctly.
        return CanonicalMap(linalg.inv(self.K))

    def blocks(self):
        n = self.n
        K = self.K
        return K[:n, :n], K[:n, n:], K[n:, :n], K[n:, n:]


def is_canonical(K, tol: float = CANONICAL_TOL) -> tuple[bool, float]:
    """Check ``K^T J K = J``; returns ``(passed, max-norm residual)``."""
    K = K.K if isinstance(K, CanonicalMap) else np.asarray(K)
    J = symplectic_gram(K.shape[0] // 2)
    res = float(np.max(np.abs(K.T @ J @ K - J)))
    return res <= tol, res


@dataclass(frozen=True)
class FBIPhase:
    """Quadratic phase ``phi(z, y)`` with ``det Czy != 0`` and ``Im Cyy > 0``."""

    Czz: np.ndarray
    Czy: np.ndarray
    Cyy: np.ndarray

    def __post_init__(self):
        Czz = np.atleast_2d(np.asarray(self.Czz, dtype=complex))
        Czy = np.atleast_2d(np.asarray(self.Czy, dtype=complex))
        Cyy = np.atleast_2d(np.asarray(self.Cyy, dtype=complex))
        n = Czz.shape[0]
        for name, M in (("Czz", Czz), ("Czy", Czy), ("Cyy", Cyy)):
            if M.shape != (n, n):
                raise DimensionError(f"{name} must be {n}x{n}, got {M.shape}")
        if abs(linalg.det(Czy)) <= DET_TOL:
            raise SingularBlock("det Czy vanishes")
        Czz = 0.5 * (Czz + Czz.T)
        Cyy = 0.5 * (Cyy + Cyy.T)
        if linalg.eigvalsh(Cyy.imag)[0] <= 0:
            raise NotPositive("Im Cyy is not positive definite")
        object.__setattr__(self, "Czz", _ro(Czz))
        object.__setattr__(self, "Czy", _ro(Czy))
        object.__setattr__(self, "Cyy", _ro(Cyy))

    @property
    def n(self) -> int:
        return self.Czz.shape[0]

    @property
    def cphi(self) -> float:
        """Normalizing constant making the transform unitary."""
        n = self.n
        return float(
            2.0 ** (-n / 2) * np.pi ** (-3 * n / 4)
            * linalg.det(self.Cyy.imag) ** (-0.25)
            * abs(linalg.det(self.Czy))
        )

    def __call__(self, z, y) -> complex:
        z = np.asarray(z)
        y = np.asarray(y)
        return complex(0.5 * z @ self.Czz @ z + z @ self.Czy @ y + 0.5 * y @ self.Cyy @ y)


def standard_phase(n: int = 1) -> FBIPhase:
    """Phase ``(i/2) z^2 - i sqrt(2) z.y + (i/2) y^2`` whose weight is ``|z|^2/2``."""
    eye = np.eye(n)
    return FBIPhase(1j * eye, -1j * np.sqrt(2.0) * eye, 1j * eye)


def kappa_from_phase(phi: FBIPhase) -> CanonicalMap:
    """Canonical map ``(y, -phi'_y) -> (z, phi'_z)`` generated by ``phi``.

    Since ``phi'_y = Czy^T z + Cyy y`` and ``phi'_z = Czz z + Czy y``, a point
    ``(y, eta)`` goes to ``z = -Czy^{-T} (eta + Cyy y)`` and
    ``zeta = Czz z + Czy y``.
    """
    n = phi.n
    if abs(linalg.det(phi.Czy)) <= DET_TOL:
        raise SingularBlock("det Czy vanishes")
    CinvT = linalg.inv(phi.Czy).T
    K11 = -CinvT @ phi.Cyy
    K12 = -CinvT
    K21 = phi.Czy + phi.Czz @ K11
    K22 = phi.Czz @ K12
    return CanonicalMap(np.block([[K11, K12], [K21, K22]]))


def phase_from_kappa(K, tol: float = CANONICAL_TOL) -> FBIPhase:
    """Recover the quadratic phase generating ``K``.

    Reading the block formulas of :func:`kappa_from_phase` backwards:
    ``Czy = -K12^{-T}``, ``Cyy = K12^{-1} K11`` and ``Czz = K22 K12^{-1}``.
    The upper-right block ``K12`` must therefore be invertible.

    Before solving, the image of R^{2n} is required to be the graph of a
    strictly plurisubharmonic weight; otherwise no phase with ``Im Cyy > 0``
    can generate ``K`` and :class:`NotPositive` is raised.  The identity map
    fails this test because R^{2n} projects onto R^n only.
    """
    K = K if isinstance(K, CanonicalMap) else CanonicalMap(K)
    ok, res = is_canonical(K, tol)
    if not ok:
        raise NotGenerating(f"map is not canonical (residual {res:.3e})")
    n = K.n
    K11, K12, K21, K22 = K.blocks()

    # base projection of K(R^{2n}) as a real-linear map R^{2n} -> C^n = R^{2n}
    top = np.hstack([K11, K12])
    proj = np.vstack([top.real, top.imag])
    if np.linalg.cond(proj) > 1e12:
        raise NotPositive("image of R^2n is not a graph over the base")
    weight = _weight_of_real_image(K)
    if linalg.eigvalsh(weight.b)[0] <= 0:
        raise NotPositive("image of R^2n is not the graph of a strictly psh weight")

    if np.linalg.cond(K12) > 1e12:
        raise NotGenerating("upper-right block of K is not invertible")
    K12inv = linalg.inv(K12)
    Czy = -K12inv.T
    Cyy = K12inv @ K11
    Czz = K22 @ K12inv
    if linalg.eigvalsh(0.5 * (Cyy + Cyy.T).imag)[0] <= 0:
        raise NotPositive("recovered Im Cyy is not positive definite")
    phi = FBIPhase(Czz, Czy, Cyy)
    err = float(np.max(np.abs(kappa_from_phase(phi).K - K.K)))
    if err > tol * max(1.0, float(np.max(np.abs(K.K)))):
        raise NotGenerating(f"recovered phase reproduces K only to {err:.3e}")
    return phi


@dataclass(frozen=True)
class WeightForm:
    """Real quadratic weight ``Phi(z) = Re(1/2 z^T a z) + 1/2 conj(z)^T b z``.

    ``a`` is complex symmetric (pluriharmonic part) and ``b`` Hermitian (Levi
    part).  ``Phi`` is strictly plurisubharmonic iff ``b`` is positive definite.
    """

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=complex))
        b = np.atleast_2d(np.asarray(self.b, dtype=complex))
        if a.shape != b.shape or a.shape[0] != a.shape[1]:
            raise DimensionError(f"a and b must be square of equal shape, got {a.shape}, {b.shape}")
        object.__setattr__(self, "a", _ro(0.5 * (a + a.T)))
        object.__setattr__(self, "b", _ro(0.5 * (b + b.conj().T)))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def __call__(self, z) -> np.ndarray:
        """Evaluate at ``z`` of shape (n,) or (..., n)."""
        z = np.asarray(z, dtype=complex)
        za = np.einsum("...i,ij,...j->...", z, self.a, z)
        zb = np.einsum("...i,ij,...j->...", z.conj(), self.b, z)
        return 0.5 * za.real + 0.5 * zb.real

    def grad_z(self, z) -> np.ndarray:
        """Holomorphic derivative ``d Phi / dz = 1/2 (a z + b^T conj(z))``."""
        z = np.asarray(z, dtype=complex)
        return 0.5 * (z @ self.a.T + z.conj() @ self.b)

    def levi(self) -> np.ndarray:
        """Matrix of ``d^2 Phi / dzbar_j dz_k`` (equal to ``b^T / 2``)."""
        return 0.5 * self.b.T

    def is_strictly_psh(self, tol: float = 0.0) -> bool:
        return bool(linalg.eigvalsh(self.b)[0] > tol)

    def real_matrix(self) -> np.ndarray:
        """Symmetric ``R`` with ``Phi(x + i y) = (x, y)^T R (x, y)``."""
        ar, ai = self.a.real, self.a.imag
        br, bi = self.b.real, self.b.imag
        R11 = 0.5 * (ar + br)
        R22 = 0.5 * (br - ar)
        R12 = -0.5 * (ai + bi)
        R = np.block([[R11, R12], [R12.T, R22]])
        return 0.5 * (R + R.T)

    @classmethod
    def from_real_matrix(cls, R) -> "WeightForm":
        """Inverse of :meth:`real_matrix`."""
        R = np.asarray(R, dtype=float)
        n = R.shape[0] // 2
        R = 0.5 * (R + R.T)
        R11, R12, R22 = R[:n, :n], R[:n, n:], R[n:, n:]
        ar = R11 - R22
        br = R11 + R22
        # R12 = -(ai + bi)/2 with ai symmetric and bi antisymmetric
        S = -2.0 * R12
        ai = 0.5 * (S + S.T)
        bi = 0.5 * (S - S.T)
        return cls(ar + 1j * ai, br + 1j * bi)

    def min_eig(self) -> float:
        """Smallest eigenvalue of :meth:`real_matrix` (the best ``c`` in ``Phi >= c|z|^2``)."""
        return float(linalg.eigvalsh(self.real_matrix())[0])

    def __sub__(self, other: "WeightForm") -> "WeightForm":
        return WeightForm(self.a - other.a, self.b - other.b)

    def __add__(self, other: "WeightForm") -> "WeightForm":
        return WeightForm(self.a + other.a, self.b + other.b)

    def scaled(self, c: float) -> "WeightForm":
        return WeightForm(c * self.a, c * self.b)


def weight_from_phase(phi: FBIPhase) -> WeightForm:
    """Weight ``Phi(z) = max_y (-Im phi(z, y))`` over real ``y``.

    With ``G = (Im Cyy)^{-1}`` and ``C = Czy`` the maximum is attained at
    ``y* = -G Im(C^T z)`` and equals ``Re(1/2 z^T a z) + 1/2 conj(z)^T b z`` with
    ``a = i Czz - 1/2 C G C^T`` and ``b = 1/2 conj(C) G C^T``.
    """
    G = linalg.inv(phi.Cyy.imag)
    C = phi.Czy
    a = 1j * phi.Czz - 0.5 * C @ G @ C.T
    b = 0.5 * C.conj() @ G @ C.T
    return WeightForm(a, b)


@dataclass(frozen=True)
class WeightGraph:
    """Real-linear graph ``z -> (z, P z + Q conj(z))`` in C^{2n}."""

    P: np.ndarray
    Q: np.ndarray

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.concatenate([z, self.P @ z + self.Q @ z.conj()])

    def real_basis(self) -> np.ndarray:
        """Images of the real basis ``e_1..e_n, i e_1..i e_n`` as columns."""
        n = self.n
        cols = [self(e) for e in np.eye(n)] + [self(1j * e) for e in np.eye(n)]
        return np.column_stack(cols)

    def sigma_gram(self) -> np.ndarray:
        V = self.real_basis()
        return V.T @ symplectic_gram(self.n) @ V

    def im_sigma_residual(self) -> float:
        """``max |Im sigma|`` on pairs of basis vectors; 0 for an I-Lagrangian graph."""
        return float(np.max(np.abs(self.sigma_gram().imag)))

    def re_sigma_rank(self, tol: float = 1e-10) -> int:
        s = linalg.svdvals(self.sigma_gram().real)
        return int(np.sum(s > tol * max(1.0, s[0])))


def plane_of_weight(Phi: WeightForm) -> WeightGraph:
    """Graph of ``z -> (2/i) dPhi/dz = (1/i)(a z + b^T conj(z))``."""
    if not Phi.is_strictly_psh():
        raise NotStrictlyPsh("Levi part b is not positive definite")
    return WeightGraph(_ro(Phi.a / 1j), _ro(Phi.b.T / 1j))


def weight_from_graph(P, Q) -> tuple[WeightForm, float]:
    """Weight whose graph is ``zeta = P z + Q conj(z)``.

    Returns the weight and the size of the non-symmetric parts of ``i P`` and
    ``i Q^T``, which vanish exactly when the graph is I-Lagrangian.
    """
    a = 1j * np.asarray(P)
    b = 1j * np.asarray(Q).T
    defect = max(float(np.max(np.abs(a - a.T))), float(np.max(np.abs(b - b.conj().T))))
    return WeightForm(a, b), defect


def _weight_of_real_image(K: CanonicalMap) -> WeightForm:
    """Weight whose graph is ``K(R^{2n})``; assumes the base projection is invertible."""
    n = K.n
    M = K.K
    # z = M_top X, zeta = M_bot X for real X; write X in terms of (z, conj z)
    top, bot = M[:n], M[n:]
    aug = np.vstack([top, top.conj()])
    Xof = linalg.inv(aug)  # X = Xof @ (z, conj z), real-valued by construction
    T = bot @ Xof
    Phi, _ = weight_from_graph(T[:, :n], T[:, n:])
    return Phi


@dataclass(frozen=True)
class LagrangianPlane:
    """Complex n-dimensional subspace of C^{2n} given by a basis."""

    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=complex)
        object.__setattr__(self, "basis", _ro(B))

    @property
    def n(self) -> int:
        return self.basis.shape[0] // 2

    def sigma_residual(self) -> float:
        B = self.basis
        return float(np.max(np.abs(B.T @ symplectic_gram(self.n) @ B), initial=0.0))

    def hermitian_form(self) -> np.ndarray:
        """Matrix of ``Z -> (1/i) sigma(Z, conj Z)`` in the coefficients of the basis."""
        B = self.basis
        H = 1j * B.conj().T @ symplectic_gram(self.n) @ B
        return 0.5 * (H + H.conj().T)

    def positivity(self, tol: float = 1e-10) -> str:
        """``'positive'``, ``'negative'`` or ``'indefinite'`` (strict)."""
        lam = linalg.eigvalsh(self.hermitian_form())
        scale = max(1.0, float(np.max(np.abs(lam))))
        if lam[0] > tol * scale:
            return "positive"
        if lam[-1] < -tol * scale:
            return "negative"
        return "indefinite"


def stable_subspaces(F, tol: float = 1e-8) -> tuple[LagrangianPlane, LagrangianPlane]:
    """Sums of generalized eigenspaces of ``F`` over ``Im lambda > 0`` and ``< 0``.

    Computed from ordered complex Schur forms, which give orthonormal bases
    of invariant subspaces without forming Jordan chains.
    """
    F = as_hamilton_map(F)
    n = F.n
    lam = F.eigenvalues
    scale = max(1.0, float(np.linalg.norm(F.F, 2)))
    if np.any(np.abs(lam.imag) < tol * scale):
        raise RealEigenvalue(f"eigenvalue(s) near the real axis: {lam[np.abs(lam.imag) < tol * scale]}")
    bases = []
    for sign in (1.0, -1.0):
        _, Z, sdim = linalg.schur(F.F, output="complex", sort=lambda x, s=sign: s * x.imag > 0)
        if sdim != n:
            raise RealEigenvalue(f"expected {n} eigenvalues in each half-plane, got {sdim}")
        bases.append(LagrangianPlane(Z[:, :n]))
    return bases[0], bases[1]


def transport_symbol(q: QuadraticSymbol, K) -> QuadraticSymbol:
    """The symbol ``q o K^{-1}``, i.e. ``q`` written in the coordinates ``K X``."""
    K = K if isinstance(K, CanonicalMap) else CanonicalMap(K)
    Kinv = linalg.inv(K.K)
    return QuadraticSymbol(q.n, Kinv.T @ q.A @ Kinv)


def conjugate_hamilton_map(F, K):
    """Hamilton map ``K F K^{-1}`` of the transported symbol."""
    from .quadform import HamiltonMap

    F = as_hamilton_map(F)
    K = K if isinstance(K, CanonicalMap) else CanonicalMap(K)
    return HamiltonMap(K.K @ F.F @ linalg.inv(K.K))


def normal_form_map(F) -> tuple[CanonicalMap, np.ndarray]:
    """Canonical ``K`` sending the stable subspaces to the coordinate planes.

    ``K`` maps ``Lambda+`` onto ``{(z, 0)}`` and ``Lambda-`` onto ``{(0, zeta)}``;
    in the new coordinates the symbol reads ``M z . zeta``.  Returns ``(K, M)``.
    """
    F = as_hamilton_map(F)
    n = F.n
    plus, minus = stable_subspaces(F)
    Bp, Bm = plus.basis, minus.basis
    J = symplectic_gram(n)
    # columns of K^{-1}: Bp for (z, 0) and Bm N for (0, zeta), with the
    # pairing sigma((e_i, 0), (0, e_j)) = -delta_ij fixing N
    N = -linalg.inv(Bp.T @ J @ Bm)
    Kinv = np.hstack([Bp, Bm @ N])
    K = CanonicalMap(linalg.inv(Kinv))
    G = K.K @ F.F @ Kinv
    off = max(float(np.max(np.abs(G[:n, n:]))), float(np.max(np.abs(G[n:, :n]))))
    if off > 1e-8 * max(1.0, float(np.max(np.abs(G)))):
        raise RuntimeError(f"normal form is not block diagonal (off-diagonal {off:.3e})")
    return K, 2.0 * G[:n, :n]
