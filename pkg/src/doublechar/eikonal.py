"""Complex-time Hamilton flows and the quadratic weights they transport.

For a quadratic symbol with Hamilton map ``F`` the Hamilton vector field is
``H_q X = 2 F X``, so the linear flow at complex time ``t`` is ``exp(2 t F)``.
Weights are transported by pushing their graph ``Lambda_Phi`` through this
flow and reading off the new graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from ._linalg import loglog_fit, symplectic_gram
from .errors import Caustic, DimensionError, NoGoodTime, StepOverflow
from .quadform import HamiltonMap, QuadraticSymbol, as_hamilton_map
from .symplectic import CanonicalMap, WeightForm, weight_from_graph

__all__ = [
    "GoodTimeResult",
    "DecayFit",
    "SymbolSpec",
    "FlowResult",
    "quadratic_flow",
    "evolve_weight",
    "evolve_weight_pullback",
    "normal_form_hamilton_map",
    "eikonal_residual",
    "eikonal_residual_along_flow",
    "find_good_time",
    "decay_exponent_fit",
    "integrate_complex_flow",
]

CAUSTIC_COND = 1e12


def quadratic_flow(F, t: complex) -> CanonicalMap:
    """Linear Hamilton flow ``exp(2 t F)`` at complex time ``t``."""
    F = as_hamilton_map(F)
    if t == 0:
        return CanonicalMap(np.eye(2 * F.n))
    return CanonicalMap(linalg.expm(2.0 * complex(t) * F.F))


def evolve_weight(Phi0: WeightForm, F, t: complex, caustic_cond: float = CAUSTIC_COND) -> WeightForm:
    """Weight ``Xi_t`` whose graph is ``exp(2 t F)`` applied to the graph of ``Phi0``.

    A point of the initial graph is ``(z, P0 z + Q0 conj z)`` with
    ``P0 = a / i`` and ``Q0 = b^T / i``.  Its image ``(w, omega)`` depends
    real-linearly on ``z``; inverting ``w = U z + V conj z`` (through the
    augmented system on ``(z, conj z)``) expresses ``omega`` through ``w``.
    """
    if t == 0:
        return Phi0
    F = as_hamilton_map(F)
    n = F.n
    if Phi0.n != n:
        raise DimensionError("weight and Hamilton map dimensions differ")
    E = quadratic_flow(F, t).K
    E11, E12, E21, E22 = E[:n, :n], E[:n, n:], E[n:, :n], E[n:, n:]
    P0 = Phi0.a / 1j
    Q0 = Phi0.b.T / 1j
    U = E11 + E12 @ P0
    V = E12 @ Q0
    X = E21 + E22 @ P0
    Y = E22 @ Q0
    aug = np.block([[U, V], [V.conj(), U.conj()]])
    cond = np.linalg.cond(aug)
    if not np.isfinite(cond) or cond > caustic_cond:
        raise Caustic(f"base projection is singular at t={t} (condition {cond:.3e})")
    G = linalg.inv(aug)
    G1, G2 = G[:n, :n], G[:n, n:]
    P = X @ G1 + Y @ G2.conj()
    Q = X @ G2 + Y @ G1.conj()
    Xi, _ = weight_from_graph(P, Q)
    return Xi


def evolve_weight_pullback(Phi0: WeightForm, M, t: complex) -> WeightForm:
    """Closed form ``z -> Phi0(exp(-t M) z)`` valid for symbols ``M z . zeta``."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    S = linalg.expm(-complex(t) * M)
    return WeightForm(S.T @ Phi0.a @ S, S.conj().T @ Phi0.b @ S)


def normal_form_hamilton_map(M) -> HamiltonMap:
    """Hamilton map of ``q(z, zeta) = zeta^T M z``, namely ``diag(M, -M^T) / 2``."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    n = M.shape[0]
    F = np.zeros((2 * n, 2 * n), dtype=complex)
    F[:n, :n] = 0.5 * M
    F[n:, n:] = -0.5 * M.T
    return HamiltonMap(F)


def _sphere_sample(n: int, samples: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((samples, n)) + 1j * rng.standard_normal((samples, n))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def eikonal_residual(
    Phi_minus: WeightForm,
    Phi_plus: WeightForm,
    q: QuadraticSymbol,
    t: complex,
    dt: complex,
    Phi_minus_i: Optional[WeightForm] = None,
    Phi_plus_i: Optional[WeightForm] = None,
    samples: int = 64,
    seed: int = 0,
) -> float:
    """Defect of ``2 d_t Xi + i q(z, (2/i) d_z Xi) = 0`` on a unit-sphere sample.

    ``Xi_t`` is real valued, so its complex-time derivative is the Wirtinger
    derivative ``d_t = (d_{Re t} - i d_{Im t}) / 2``.  Central differences
    along ``dt`` and along ``i dt`` give both real directional derivatives;
    supply the weights at ``t -+ i dt`` as ``Phi_minus_i``/``Phi_plus_i``.

    If only the pair along ``dt`` is given, the returned value is the defect
    of the single directional derivative, ``|D_u Xi - 2 Re(u d_t Xi)|`` with
    ``u = dt/|dt|`` and ``d_t Xi`` taken from the equation itself.

    ``t`` is carried for reporting; the weight at ``t`` is approximated by
    the average of the supplied neighbours.
    """
    dt = complex(dt)
    h = abs(dt)
    if h == 0:
        raise ValueError("dt must be nonzero")
    u = dt / h
    n = q.n
    zs = _sphere_sample(n, samples, seed)
    full = Phi_minus_i is not None and Phi_plus_i is not None
    pairs = [Phi_minus, Phi_plus] + ([Phi_minus_i, Phi_plus_i] if full else [])
    mid = WeightForm(
        sum(p.a for p in pairs) / len(pairs), sum(p.b for p in pairs) / len(pairs)
    )
    D_u = (Phi_plus(zs) - Phi_minus(zs)) / (2 * h)
    zeta = (2.0 / 1j) * mid.grad_z(zs)
    Z = np.concatenate([zs, zeta], axis=1)
    qv = 0.5 * np.einsum("si,ij,sj->s", Z, q.A, Z)
    if full:
        D_iu = (Phi_plus_i(zs) - Phi_minus_i(zs)) / (2 * h)
        two_dt = (D_u - 1j * D_iu) * np.conj(u)
        res = np.abs(two_dt + 1j * qv)
    else:
        dt_pred = -0.5j * qv
        res = np.abs(D_u - 2.0 * np.real(u * dt_pred))
    return float(np.max(res))


def eikonal_residual_along_flow(
    Phi0: WeightForm, F, t: complex, dt: complex, samples: int = 64, seed: int = 0
) -> float:
    """Evolve ``Phi0`` to ``t -+ dt`` and ``t -+ i dt`` and return the full residual."""
    F = as_hamilton_map(F)
    q = F.symbol()
    ws = [evolve_weight(Phi0, F, t + s) for s in (-dt, dt, -1j * dt, 1j * dt)]
    return eikonal_residual(ws[0], ws[1], q, t, dt, ws[2], ws[3], samples=samples, seed=seed)


@dataclass(frozen=True)
class GoodTimeResult:
    t0: complex
    epsilon: int
    rho: float
    s: float
    c: float
    min_eig_gap: float

    def to_dict(self) -> dict:
        return {
            "t0_re": float(self.t0.real),
            "t0_im": float(self.t0.imag),
            "epsilon": int(self.epsilon),
            "rho": float(self.rho),
            "s": float(self.s),
            "c": float(self.c),
            "min_eig_gap": float(self.min_eig_gap),
        }


def find_good_time(
    Phi0: WeightForm,
    F,
    T0: float,
    epsilon: Optional[int] = None,
    s_values: Optional[Sequence[float]] = None,
    rho_values: Optional[Sequence[float]] = None,
    c_floor: float = 1e-12,
    grid_points: int = 25,
) -> GoodTimeResult:
    """Search ``t = -eps rho - i s`` for a time with ``Phi0 - Xi_t >= c |z|^2``.

    The default grid is logarithmic: ``s`` in ``[1e-4, T0/2]`` and ``rho`` in
    ``{0}`` together with ``[1e-4, T0/2]``; only candidates with ``|t| < T0``
    are tried.  Both signs of ``eps`` are tried unless one is given.  Search
    order is fixed (``eps``, then increasing ``s``, then increasing ``rho``)
    and the first certified candidate is returned.

    ``c_floor`` is relative to the largest eigenvalue magnitude of ``Phi0``.
    """
    if T0 <= 0:
        raise ValueError("T0 must be positive")
    F = as_hamilton_map(F)
    hi = T0 / 2
    lo = min(1e-4, hi)
    if s_values is None:
        s_values = np.geomspace(lo, hi, grid_points)
    if rho_values is None:
        rho_values = np.concatenate([[0.0], np.geomspace(lo, hi, grid_points)])
    eps_list = (1, -1) if epsilon is None else (int(epsilon),)
    R0 = Phi0.real_matrix()
    floor = c_floor * max(float(np.max(np.abs(linalg.eigvalsh(R0)))), np.finfo(float).tiny)
    best = -np.inf
    for eps in eps_list:
        for s in s_values:
            for rho in rho_values:
                t = complex(-eps * rho, -s)
                if abs(t) >= T0:
                    continue
                try:
                    Xi = evolve_weight(Phi0, F, t)
                except Caustic:
                    continue
                gap = float(linalg.eigvalsh(R0 - Xi.real_matrix())[0])
                best = max(best, gap)
                if gap >= floor:
                    return GoodTimeResult(t, eps, float(rho), float(s), gap, gap)
    raise NoGoodTime(f"no certified time in D(0, {T0}); best gap {best:.3e}")


@dataclass(frozen=True)
class DecayFit:
    slope: float
    r2: float
    s: np.ndarray
    gaps: np.ndarray


def decay_exponent_fit(Phi0: WeightForm, F, s_grid: Sequence[float]) -> DecayFit:
    """Log-log slope of the weight gap ``min eig(Phi0 - Xi_{-is})`` against ``s``."""
    F = as_hamilton_map(F)
    s_grid = np.asarray(s_grid, dtype=float)
    if s_grid.size < 2 or np.any(s_grid <= 0):
        raise ValueError("s_grid needs at least two positive values")
    R0 = Phi0.real_matrix()
    gaps = np.array(
        [linalg.eigvalsh(R0 - evolve_weight(Phi0, F, -1j * s).real_matrix())[0] for s in s_grid]
    )
    if np.any(gaps <= 0):
        raise ValueError("weight gap is not positive on the whole s grid")
    slope, _, r2 = loglog_fit(s_grid, gaps)
    return DecayFit(slope, r2, s_grid, gaps)


@dataclass(frozen=True)
class SymbolSpec:
    """Holomorphic polynomial ``f(z, zeta)`` on C^{2n} given by monomials.

    Each monomial is ``(exponents, coefficient)`` with ``exponents`` a tuple
    of ``2n`` nonnegative integers ordered ``(z_1..z_n, zeta_1..zeta_n)``.
    """

    n: int
    monomials: tuple

    def __post_init__(self):
        mons = []
        for exps, c in self.monomials:
            exps = tuple(int(e) for e in exps)
            if len(exps) != 2 * self.n or min(exps) < 0:
                raise DimensionError(f"bad multi-index {exps} for n={self.n}")
            c = complex(c)
            if not np.isfinite(c):
                raise ValueError("non-finite coefficient")
            mons.append((exps, c))
        object.__setattr__(self, "monomials", tuple(mons))

    @classmethod
    def from_quadratic(cls, q: QuadraticSymbol) -> "SymbolSpec":
        dim = 2 * q.n
        mons = []
        for i in range(dim):
            for j in range(i, dim):
                e = [0] * dim
                e[i] += 1
                e[j] += 1
                c = 0.5 * q.A[i, i] if i == j else q.A[i, j]
                if c != 0:
                    mons.append((tuple(e), c))
        return cls(q.n, tuple(mons))

    def value(self, Z) -> complex:
        Z = np.asarray(Z, dtype=complex)
        return complex(sum(c * np.prod(Z ** np.array(e)) for e, c in self.monomials))

    def gradient(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=complex)
        g = np.zeros(2 * self.n, dtype=complex)
        for e, c in self.monomials:
            e = np.array(e)
            for k in np.nonzero(e)[0]:
                ek = e.copy()
                ek[k] -= 1
                g[k] += c * e[k] * np.prod(Z**ek)
        return g

    def hessian(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=complex)
        dim = 2 * self.n
        H = np.zeros((dim, dim), dtype=complex)
        for e, c in self.monomials:
            e = np.array(e)
            for k in np.nonzero(e)[0]:
                ek = e.copy()
                ek[k] -= 1
                for l in np.nonzero(ek)[0]:
                    ekl = ek.copy()
                    ekl[l] -= 1
                    H[k, l] += c * e[k] * ek[l] * np.prod(Z**ekl)
        return H


@dataclass(frozen=True)
class FlowResult:
    endpoint: np.ndarray
    jacobian: np.ndarray
    symplectic_residual: float
    steps: int


def integrate_complex_flow(
    f: SymbolSpec,
    Z0,
    t: complex,
    steps: int,
    order: str = "imag_first",
    bound: float = 1e6,
) -> FlowResult:
    """Flow of ``H_f`` to complex time ``t`` with its variational equation.

    The complex-time flow is the composition of two real-time flows: the
    field ``(i d_zeta f, -i d_z f)`` for time ``Im t`` and ``(d_zeta f, -d_z f)``
    for time ``Re t``.  They commute, so ``order`` (``"imag_first"`` or
    ``"real_first"``) only matters up to discretization error.  Each leg uses
    ``steps`` classical RK4 steps on the joint system ``(Z, Jacobian)``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    n = f.n
    dim = 2 * n
    Z = np.asarray(Z0, dtype=complex).copy()
    if Z.shape != (dim,):
        raise DimensionError(f"Z0 must have length {dim}")
    Jm = symplectic_gram(n)
    t = complex(t)
    W = np.eye(dim, dtype=complex)

    def field(Zv, W, c):
        # H = c (d_zeta f, -d_z f) = -c J grad f; its derivative is -c J Hess f
        g = f.gradient(Zv)
        Hs = f.hessian(Zv)
        return -c * (Jm @ g), -c * (Jm @ Hs @ W)

    def leg(Z, W, c, T):
        if T == 0:
            return Z, W
        dtau = T / steps
        for _ in range(steps):
            k1 = field(Z, W, c)
            k2 = field(Z + 0.5 * dtau * k1[0], W + 0.5 * dtau * k1[1], c)
            k3 = field(Z + 0.5 * dtau * k2[0], W + 0.5 * dtau * k2[1], c)
            k4 = field(Z + dtau * k3[0], W + dtau * k3[1], c)
            Z = Z + dtau / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            W = W + dtau / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            if not np.all(np.isfinite(Z)) or np.linalg.norm(Z) > bound:
                raise StepOverflow(f"trajectory norm exceeded {bound}")
        return Z, W

    legs = [(1j, t.imag), (1.0, t.real)]
    if order == "real_first":
        legs.reverse()
    elif order != "imag_first":
        raise ValueError(f"unknown order {order!r}")
    for c, T in legs:
        Z, W = leg(Z, W, c, T)
    res = float(np.max(np.abs(W.T @ Jm @ W - Jm)))
    return FlowResult(Z, W, res, steps)
