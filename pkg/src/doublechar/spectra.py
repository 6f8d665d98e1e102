"""Hermite states and finite-difference Schrodinger operators with complex potentials."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import splu

from ._linalg import loglog_fit
from .errors import DimensionError, InsufficientData, NoConvergence, SupportTruncated
from .fbi import GridFunction, default_grid, lp_norm

__all__ = [
    "PotentialSpec",
    "SchrodingerMatrix",
    "EigenResult",
    "hermite_function",
    "hermite_state",
    "schrodinger_grid",
    "discretize_schrodinger",
    "lowlying_eigenpair",
    "lp_scaling_fit",
    "predicted_exponent",
]


def hermite_function(k: int, x) -> np.ndarray:
    """Normalized Hermite function ``psi_k`` on R via the stable three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p0 = np.pi**-0.25 * np.exp(-0.5 * x**2)
    if k == 0:
        return p0
    p1 = np.sqrt(2.0) * x * p0
    for j in range(2, k + 1):
        p0, p1 = p1, np.sqrt(2.0 / j) * x * p1 - np.sqrt((j - 1) / j) * p0
    return p1


def hermite_state(alpha, h: float, grid: Optional[tuple] = None, check: bool = True):
    """Eigenfunction ``h^{-n/4} psi_alpha(x / sqrt h)`` of ``-h^2 Laplacian + |x|^2``.

    Parameters
    ----------
    alpha : int or tuple of int
        Multi-index; its length fixes the dimension.
    h : float
        Semiclassical parameter.
    grid : (L, N), optional
        Half-width and points per axis; defaults to :func:`fbi.default_grid`
        widened (at fixed spacing) to cover the oscillatory region of higher
        states.

    Returns
    -------
    u : GridFunction
        Samples normalized to unit discrete ``L^2`` norm.
    eigenvalue : float
        ``(2|alpha| + n) h``.
    """
    alpha = (int(alpha),) if np.isscalar(alpha) else tuple(int(a) for a in alpha)
    n = len(alpha)
    if n not in (1, 2) or min(alpha) < 0:
        raise DimensionError(f"bad multi-index {alpha}")
    if grid is None:
        L0, N = default_grid(h, n)
        k = max(alpha)
        L = max(L0, (4 + k) * np.sqrt(h) * np.sqrt(2 * k + 1))
        if L > L0:
            # keep the default spacing so the FBI kernel stays resolved
            m = int(np.ceil((N - 1) * L / L0))
            N = m + 1 if m % 2 == 0 else m + 2
        grid = (L, N)
    L, N = grid
    ax = np.linspace(-L, L, N)
    factors = [h**-0.25 * hermite_function(a, ax / np.sqrt(h)) for a in alpha]
    vals = factors[0] if n == 1 else np.outer(factors[0], factors[1])
    u = GridFunction(n, L, N, vals, h)
    u = u.with_values(u.values / lp_norm(u, 2))
    if check and u.boundary_ratio() > 1e-12:
        raise SupportTruncated(f"state is {u.boundary_ratio():.1e} of its peak at the grid edge")
    return u, (2 * sum(alpha) + n) * h


@dataclass(frozen=True)
class PotentialSpec:
    """Polynomial potential ``V`` and optional subprincipal term ``p1`` (ascending powers)."""

    coeffs: tuple
    p1: tuple = (0.0,)
    n: int = 1

    def __post_init__(self):
        if self.n != 1:
            raise DimensionError("only one-dimensional potentials are supported")
        c = tuple(complex(v) for v in self.coeffs)
        p = tuple(complex(v) for v in self.p1)
        if not c or not all(np.isfinite(v) for v in c + p):
            raise ValueError("coefficients must be a nonempty list of finite numbers")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "p1", p)

    def __call__(self, x) -> np.ndarray:
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), np.array(self.coeffs))

    def subprincipal(self, x) -> np.ndarray:
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), np.array(self.p1))

    def check(self, x) -> dict:
        """Report whether ``Re V >= 0`` on the sample and whether ``Re V`` grows at infinity."""
        re = np.real(self(x))
        c = np.array(self.coeffs)
        nz = np.nonzero(c)[0]
        top = nz[-1] if nz.size else 0
        grows = bool(top >= 1 and top % 2 == 0 and c[top].real > 0)
        return {"re_nonneg": bool(np.all(re >= -1e-14)), "re_grows": grows}


def schrodinger_grid(h: float, scale: float = 1.0, N: Optional[int] = None) -> tuple[float, int]:
    """Half-width ``max(6 sqrt(h) scale, 4)`` and an odd point count."""
    L = max(6.0 * np.sqrt(h) * scale, 4.0)
    if N is None:
        # about 16 points per sqrt(h), capped by the dense budget
        N = int(min(2047, max(257, np.ceil(16 * 2 * L / np.sqrt(h)))))
        N += 1 - N % 2
    return float(L), int(N)


@dataclass(frozen=True)
class SchrodingerMatrix:
    """Dense matrix of ``-h^2 d^2/dx^2 + V + h p1`` on a uniform grid."""

    matrix: np.ndarray
    L: float
    N: int
    h: float

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.N)


def discretize_schrodinger(V: PotentialSpec, h: float, grid: Optional[tuple] = None) -> SchrodingerMatrix:
    """Fourth-order central differences on ``[-L, L]``, zero outside the box.

    The five-point stencil ``(-1, 16, -30, 16, -1) / 12 dx^2`` is applied on all
    ``N`` nodes; references to points outside the box read zero (Dirichlet
    truncation).
    """
    if V.n != 1:
        raise DimensionError("only n = 1 is discretized")
    L, N = grid if grid is not None else schrodinger_grid(h)
    if N > 4096:
        raise ValueError("N exceeds the dense budget of 4096")
    x = np.linspace(-L, L, N)
    dx = x[1] - x[0]
    c = -(h**2) / (12.0 * dx**2)
    diags = [-1.0 * c, 16.0 * c, -30.0 * c, 16.0 * c, -1.0 * c]
    P = np.zeros((N, N), dtype=complex)
    for off, val in zip(range(-2, 3), diags):
        idx = np.arange(max(0, -off), min(N, N - off))
        P[idx, idx + off] = val
    P[np.arange(N), np.arange(N)] += V(x) + h * V.subprincipal(x)
    return SchrodingerMatrix(P, float(L), int(N), float(h))


@dataclass(frozen=True)
class EigenResult:
    eigenvalue: complex
    eigenfunction: GridFunction
    residual: float
    h: float
    method: str = "inverse-iteration"
    in_lowlying_disc: bool = True


def _finish(Pm: SchrodingerMatrix, lam: complex, v: np.ndarray, method: str, C: float) -> EigenResult:
    res = float(np.linalg.norm(Pm.matrix @ v - lam * v) / np.linalg.norm(v))
    u = GridFunction(1, Pm.L, Pm.N, v, Pm.h)
    u = u.with_values(u.values / lp_norm(u, 2))
    k = int(np.argmax(np.abs(u.values)))
    ph = u.values[k] / abs(u.values[k])
    vals = u.values / ph
    vals[k] = abs(vals[k])
    u = u.with_values(vals)
    return EigenResult(complex(lam), u, res, Pm.h, method, bool(abs(lam) <= C * Pm.h))


def lowlying_eigenpair(
    Pm: SchrodingerMatrix,
    h: Optional[float] = None,
    tol: float = 1e-10,
    maxiter: int = 200,
    C: float = 10.0,
) -> EigenResult:
    """Eigenpair of smallest ``|lambda|``.

    Inverse iteration with shift 0 (sparse LU of the banded matrix) converges
    to the eigenvalue closest to the origin.  If it stalls, the full dense
    spectrum is computed instead.
    """
    if h is not None and not np.isclose(h, Pm.h):
        raise ValueError("h does not match the discretization")
    A = Pm.matrix
    N = Pm.N
    S = sparse.csc_matrix(A)
    try:
        lu = splu(S)
    except RuntimeError:
        # exactly singular: 0 is an eigenvalue, let the dense solver find it
        lu, maxiter = None, 0
    x = np.linspace(-Pm.L, Pm.L, N)
    v = np.exp(-(x**2) / (2 * Pm.h)).astype(complex) + 1e-3
    v /= np.linalg.norm(v)
    for _ in range(maxiter):
        w = lu.solve(v)
        v = w / np.linalg.norm(w)
        Av = S @ v
        lam = np.vdot(v, Av)
        if np.linalg.norm(Av - lam * v) < tol:
            return _finish(Pm, lam, v, "inverse-iteration", C)

    lams, vecs = linalg.eig(A)
    k = int(np.argmin(np.abs(lams)))
    res = _finish(Pm, lams[k], vecs[:, k], "dense", C)
    if res.residual > 1e-8:
        raise NoConvergence(f"no eigenpair with residual below tolerance ({res.residual:.2e})")
    return res


def predicted_exponent(p: float, n: int = 1) -> float:
    """Exponent ``n/(2p) - n/4`` of ``||u||_p`` in ``h``."""
    inv_p = 0.0 if np.isinf(p) else 1.0 / p
    return n * inv_p / 2 - n / 4


def lp_scaling_fit(states: Sequence[tuple], p: float) -> tuple[float, float]:
    """Slope and ``R^2`` of ``log ||u||_p`` against ``log h``.

    ``states`` is a sequence of ``(h, GridFunction)``; at least four values of
    ``h`` spanning a factor of ten are required.
    """
    hs = np.array([float(h) for h, _ in states])
    if len(np.unique(hs)) < 4 or hs.max() < 10.0 * hs.min() * (1 - 1e-9):
        raise InsufficientData("need >= 4 values of h spanning at least one decade")
    norms = [lp_norm(u, p) for _, u in states]
    slope, _, r2 = loglog_fit(hs, norms)
    return slope, r2
