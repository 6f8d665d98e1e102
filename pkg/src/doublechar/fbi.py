"""Discretized FBI transforms and weighted norms on C^n.

The transform of a function ``u`` sampled on a uniform grid is

    T u(z) = c_phi h^{-3n/4} sum_y w_y exp(i phi(z, y) / h) u(y),

with trapezoid weights ``w_y``.  For Gaussian-type ``u`` the trapezoid rule
is spectrally accurate, so grids of a few hundred points per axis suffice.
All weighted quantities are formed as ``exp(log|T| - Phi/h)`` to keep the
large factor ``exp(Phi/h)`` carried by ``T`` from overflowing.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .errors import BoundaryMass, DimensionError, NotComparable, NotStrictlyPsh, TruncationWarning
from ._linalg import real_gram
from .eikonal import evolve_weight
from .symplectic import FBIPhase, WeightForm, weight_from_phase

__all__ = [
    "GridFunction",
    "ZBox",
    "FBIField",
    "Polarization",
    "default_grid",
    "fbi_transform",
    "bargmann_norm",
    "local_mass",
    "tail_mass",
    "polarization",
    "fundamental_estimate_check",
    "lp_norm",
    "reconstruct_lp_bound",
    "dynamical_mass",
]

BOUNDARY_REL = 1e-12
NEGLIGIBLE = 1e-18


def trapezoid_weights(N: int, spacing: float) -> np.ndarray:
    w = np.full(N, spacing)
    w[0] = w[-1] = 0.5 * spacing
    return w


def default_grid(h: float, n: int = 1) -> tuple[float, int]:
    """Box half-width ``L = 8 sqrt(h) max(1, sqrt|log h|)`` and point count ``N``.

    ``N`` is odd so that the origin is a grid node.
    """
    L = 8.0 * np.sqrt(h) * max(1.0, np.sqrt(abs(np.log(h))))
    return float(L), (257 if n == 1 else 65)


@dataclass(frozen=True)
class GridFunction:
    """Samples of a function on the uniform grid ``[-L, L]^n`` with ``N`` points per axis.

    ``values`` has shape ``(N,)`` for ``n = 1`` and ``(N, N)`` for ``n = 2``
    (axis ``k`` runs over coordinate ``x_k``).
    """

    n: int
    L: float
    N: int
    values: np.ndarray
    h: float

    def __post_init__(self):
        if self.n not in (1, 2):
            raise DimensionError("only n = 1 and n = 2 grids are supported")
        if self.N < 2 or self.L <= 0:
            raise ValueError("need N >= 2 and L > 0")
        if not 0 < self.h <= 1:
            raise ValueError("h must lie in (0, 1]")
        v = np.asarray(self.values, dtype=complex)
        if v.size != self.N**self.n:
            raise DimensionError(f"expected {self.N**self.n} values, got {v.size}")
        v = v.reshape((self.N,) * self.n).copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.N)

    @property
    def spacing(self) -> float:
        return 2.0 * self.L / (self.N - 1)

    def nodes(self) -> np.ndarray:
        """Grid points as an array of shape ``(N**n, n)``, C order."""
        axes = np.meshgrid(*([self.axis] * self.n), indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=1)

    def weights(self) -> np.ndarray:
        """Trapezoid weights matching :meth:`nodes`."""
        w1 = trapezoid_weights(self.N, self.spacing)
        if self.n == 1:
            return w1
        return np.outer(w1, w1).ravel()

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.n, self.L, self.N, values, self.h)

    def boundary_ratio(self) -> float:
        """Largest ``|u|`` on the grid boundary relative to the peak."""
        a = np.abs(self.values)
        peak = float(a.max())
        if peak == 0.0:
            return 0.0
        if self.n == 1:
            edge = max(a[0], a[-1])
        else:
            edge = max(a[0].max(), a[-1].max(), a[:, 0].max(), a[:, -1].max())
        return float(edge) / peak


@dataclass(frozen=True)
class ZBox:
    """Product grid over ``|Re z_k|, |Im z_k| <= radius`` with ``points`` nodes per real axis."""

    n: int
    radius: float
    points: int

    def axis(self) -> np.ndarray:
        return np.linspace(-self.radius, self.radius, self.points)

    @property
    def spacing(self) -> float:
        return 2.0 * self.radius / (self.points - 1)

    def nodes(self) -> np.ndarray:
        """Complex nodes of shape ``(points**(2n), n)``; real axes ordered (Re z, Im z)."""
        ax = self.axis()
        grids = np.meshgrid(*([ax] * (2 * self.n)), indexing="ij")
        flat = [g.ravel() for g in grids]
        re = np.stack(flat[: self.n], axis=1)
        im = np.stack(flat[self.n :], axis=1)
        return re + 1j * im

    def weights(self) -> np.ndarray:
        w1 = trapezoid_weights(self.points, self.spacing)
        w = w1
        for _ in range(2 * self.n - 1):
            w = np.multiply.outer(w, w1)
        return w.ravel()

    def boundary_mask(self) -> np.ndarray:
        shape = (self.points,) * (2 * self.n)
        mask = np.zeros(shape, dtype=bool)
        for ax in range(2 * self.n):
            idx = [slice(None)] * (2 * self.n)
            idx[ax] = 0
            mask[tuple(idx)] = True
            idx[ax] = -1
            mask[tuple(idx)] = True
        return mask.ravel()

    @classmethod
    def for_h(cls, h: float, n: int = 1, radius: float = 3.0, points: Optional[int] = None) -> "ZBox":
        """Box whose spacing is at most ``sqrt(h)/4``."""
        if points is None:
            m = int(np.ceil(2 * radius / (0.25 * np.sqrt(h))))
            points = m + 1 if m % 2 == 0 else m + 2
        return cls(n, float(radius), int(points))


@dataclass(frozen=True)
class FBIField:
    """Samples of ``T u`` on a :class:`ZBox`.

    ``log_abs`` holds ``log|T u|`` (``-inf`` where ``T u = 0``); ``values``
    reconstructs ``T u`` itself and may overflow for very small ``h``.
    """

    zbox: ZBox
    log_abs: np.ndarray
    arg: np.ndarray
    phase: FBIPhase
    h: float
    warnings: tuple = field(default=())

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_abs) * np.exp(1j * self.arg)

    def weighted(self, Phi: WeightForm, p: float = 1.0) -> np.ndarray:
        """``|T(z)|^p exp(-p Phi(z)/h)`` at every node."""
        z = self.zbox.nodes()
        with np.errstate(invalid="ignore"):
            out = np.exp(p * (self.log_abs - Phi(z) / self.h))
        return np.where(np.isfinite(self.log_abs), out, 0.0)

    def dump_rows(self, Phi: Optional[WeightForm] = None) -> np.ndarray:
        """Rows ``(Re z, Im z, |T| exp(-Phi/h))`` for ``n = 1`` plotting."""
        if self.zbox.n != 1:
            raise DimensionError("row dump is defined for n = 1")
        Phi = Phi if Phi is not None else weight_from_phase(self.phase)
        z = self.zbox.nodes()[:, 0]
        return np.column_stack([z.real, z.imag, self.weighted(Phi, 1.0)])


def fbi_transform(
    u: GridFunction,
    phi: FBIPhase,
    zbox: Optional[ZBox] = None,
    chunk: int = 4096,
) -> FBIField:
    """Trapezoid approximation of ``c_phi h^{-3n/4} int exp(i phi(z,y)/h) u(y) dy``."""
    if phi.n != u.n:
        raise DimensionError(f"phase is for n={phi.n}, grid has n={u.n}")
    if zbox is None:
        zbox = ZBox.for_h(u.h, u.n)
    if zbox.n != u.n:
        raise DimensionError("z box dimension does not match the grid")
    notes = []
    if u.boundary_ratio() > BOUNDARY_REL:
        notes.append(f"input is {u.boundary_ratio():.1e} of its peak at the grid edge")
    # d/dy_k Re phi is bounded on the boxes by R sum_j |Czy_jk|_1 + L sum_j |Re Cyy_jk|,
    # with |c|_1 = |Re c| + |Im c|; the trapezoid rule aliases unless 2 pi / dy
    # clears that frequency by a margin set by the narrowest kernel Gaussian
    czy = np.abs(phi.Czy.real) + np.abs(phi.Czy.imag)
    slope = zbox.radius * czy.sum(axis=0) + u.L * np.abs(phi.Cyy.real).sum(axis=0)
    freq = float(slope.max()) / u.h
    width = max(1.0, float(linalg.eigvalsh(phi.Cyy.imag)[-1]))
    if 2 * np.pi / u.spacing < freq + np.sqrt(70.0 * width / u.h):
        notes.append(f"y spacing {u.spacing:.3g} under-resolves kernel frequency {freq:.3g}")
    for msg in notes:
        warnings.warn(msg, TruncationWarning, stacklevel=2)

    h = u.h
    y = u.nodes()
    uv = u.values.ravel()
    # samples below 1e-18 of the peak cannot change any weighted value at
    # double precision; dropping them keeps wide eigen-grids cheap
    keep = np.abs(uv) > NEGLIGIBLE * np.abs(uv).max(initial=0.0)
    z = zbox.nodes()
    npts = z.shape[0]
    log_abs = np.full(npts, -np.inf)
    arg = np.zeros(npts)
    if not np.any(keep):
        return FBIField(zbox, log_abs, arg, phi, h, tuple(notes))

    y = y[keep]
    wu = (u.weights()[keep] * uv[keep]).astype(complex)
    Phi0 = weight_from_phase(phi)
    yy = 0.5 * np.einsum("ki,ij,kj->k", y, phi.Cyy, y)
    logc = np.log(phi.cphi) - 0.75 * u.n * np.log(h)
    for start in range(0, npts, chunk):
        zc = z[start : start + chunk]
        zz = 0.5 * np.einsum("mi,ij,mj->m", zc, phi.Czz, zc)
        zy = zc @ phi.Czy @ y.T
        # subtract Phi0(z)/h, the maximum of -Im phi(z, .)/h, before exponentiating
        expo = 1j * (zz[:, None] + zy + yy[None, :]) / h - (Phi0(zc) / h)[:, None]
        S = np.exp(expo) @ wu
        with np.errstate(divide="ignore"):
            log_abs[start : start + chunk] = np.log(np.abs(S)) + Phi0(zc) / h + logc
        arg[start : start + chunk] = np.angle(S)
    return FBIField(zbox, log_abs, arg, phi, h, tuple(notes))


def _check_boundary(T: FBIField, integrand: np.ndarray) -> None:
    peak = float(integrand.max(initial=0.0))
    if peak == 0.0:
        return
    edge = float(integrand[T.zbox.boundary_mask()].max())
    if edge > BOUNDARY_REL * peak:
        raise BoundaryMass(f"integrand is {edge / peak:.1e} of its peak on the box boundary")


def bargmann_norm(T: FBIField, Phi: WeightForm) -> float:
    """``(int |T|^2 exp(-2 Phi/h) L(dz))^{1/2}`` by the trapezoid rule on the box."""
    integrand = T.weighted(Phi, 2.0)
    _check_boundary(T, integrand)
    return float(np.sqrt(np.sum(T.zbox.weights() * integrand)))


def local_mass(T: FBIField, Phi: WeightForm, delta: float, p: float) -> float:
    """``int_{|z| < delta} |T|^p exp(-p Phi/h) L(dz)``."""
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    r = np.linalg.norm(T.zbox.nodes(), axis=1)
    integrand = T.weighted(Phi, p)
    return float(np.sum(T.zbox.weights() * integrand * (r < delta)))


def tail_mass(T: FBIField, Phi0: WeightForm, delta: float, p: float) -> float:
    """``L^p`` norm of ``|T| exp(-Phi0/h)`` over ``{|z| >= delta}`` in the box.

    ``p`` is 1, 2 or inf.  For ``p = 2`` the square of the result complements
    ``local_mass(T, Phi0, delta, 2)``.
    """
    r = np.linalg.norm(T.zbox.nodes(), axis=1)
    mask = r >= delta
    if not np.any(mask):
        return 0.0
    f = T.weighted(Phi0, 1.0)[mask]
    if p == 1:
        return float(np.sum(T.zbox.weights()[mask] * f))
    if p == 2:
        return float(np.sqrt(np.sum(T.zbox.weights()[mask] * f**2)))
    if np.isinf(p):
        return float(f.max())
    raise ValueError("p must be 1, 2 or inf")


@dataclass(frozen=True)
class Polarization:
    """Holomorphic quadratic ``Psi(z, w) = 1/2 (z, w)^T Psi (z, w)``."""

    Psi: np.ndarray

    @property
    def n(self) -> int:
        return self.Psi.shape[0] // 2

    def __call__(self, z, w) -> complex:
        Z = np.concatenate([np.asarray(z, dtype=complex), np.asarray(w, dtype=complex)])
        return complex(0.5 * Z @ self.Psi @ Z)


def polarization(Phi: WeightForm) -> Polarization:
    """Replace ``conj z`` by ``w`` in ``Phi``.

    ``Phi = 1/4 z^T a z + 1/4 conj(z)^T conj(a) conj(z) + 1/2 conj(z)^T b z``
    gives ``Psi(z, w) = 1/4 z^T a z + 1/4 w^T conj(a) w + 1/2 w^T b z``.
    """
    if not Phi.is_strictly_psh():
        raise NotStrictlyPsh("Levi part b is not positive definite")
    a, b = Phi.a, Phi.b
    Psi = 0.5 * np.block([[a, b.T], [b, a.conj()]])
    return Polarization(Psi)


def fundamental_estimate_check(Phi: WeightForm, tol: float = 1e-10) -> tuple[float, float]:
    """Constants ``c1, c2 > 0`` with ``-c2|z-w|^2 <= E(z, w) <= -c1|z-w|^2``.

    ``E(z, w) = 2 Re Psi(z, conj w) - Phi(z) - Phi(w)`` is assembled as a real
    quadratic form on R^{4n} by polarization, then rewritten in the variables
    ``u = z - w`` and ``v = z + w``; it must not depend on ``v``.
    """
    n = Phi.n
    Pz = polarization(Phi)

    def E(X):
        z = X[:n] + 1j * X[n : 2 * n]
        w = X[2 * n : 3 * n] + 1j * X[3 * n :]
        return 2 * Pz(z, w.conj()).real - Phi(z) - Phi(w)

    M = real_gram(E, 4 * n)
    # (Re z, Im z, Re w, Im w) = T (Re u, Im u, Re v, Im v) with z = (v+u)/2, w = (v-u)/2
    I2 = np.eye(2 * n)
    T = 0.5 * np.block([[I2, I2], [-I2, I2]])
    Muv = T.T @ M @ T
    k = 2 * n
    scale = max(float(np.max(np.abs(Muv))), np.finfo(float).tiny)
    if np.max(np.abs(Muv[k:, :])) > tol * scale:
        raise NotComparable("E depends on z + w")
    lam = linalg.eigvalsh(-Muv[:k, :k])
    if lam[0] <= tol * scale:
        raise NotComparable("E is not negative definite in z - w")
    return float(lam[0]), float(lam[-1])


def lp_norm(u: GridFunction, p: float) -> float:
    """Grid ``L^p`` norm: trapezoid rule for finite ``p``, maximum for ``p = inf``."""
    a = np.abs(u.values).ravel()
    if np.isinf(p):
        return float(a.max())
    if p < 1:
        raise ValueError("p must be >= 1")
    return float(np.sum(u.weights() * a**p) ** (1.0 / p))


def reconstruct_lp_bound(
    u: GridFunction,
    phi: FBIPhase,
    delta: float,
    p: float,
    zbox: Optional[ZBox] = None,
    field: Optional[FBIField] = None,
) -> tuple[float, float]:
    """``(||u||_p, h^{n/2p - 3n/4} int_{|z|<delta} |T u| exp(-Phi0/h))``.

    Pass ``field = fbi_transform(u, phi, zbox)`` to reuse one transform
    across several ``p``.
    """
    T = field if field is not None else fbi_transform(u, phi, zbox)
    Phi0 = weight_from_phase(phi)
    n = u.n
    inv_p = 0.0 if np.isinf(p) else 1.0 / p
    lhs = lp_norm(u, p)
    rhs = u.h ** (n * inv_p / 2 - 0.75 * n) * local_mass(T, Phi0, delta, 1)
    return lhs, rhs


def dynamical_mass(
    u: GridFunction,
    phi: FBIPhase,
    F,
    delta: float,
    tgrid: Sequence[complex],
    zbox: Optional[ZBox] = None,
) -> list:
    """``int_{|z|<delta} |T u|^2 exp(-2 Xi_t/h)`` along ``tgrid``, ``Xi_t`` the evolved weight."""
    T = fbi_transform(u, phi, zbox)
    Phi0 = weight_from_phase(phi)
    return [local_mass(T, evolve_weight(Phi0, F, t), delta, 2) for t in tgrid]
