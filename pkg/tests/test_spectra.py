import numpy as np
import pytest
from numpy.polynomial import hermite as H
from scipy.special import factorial

import doublechar.spectra as spectra
from doublechar.errors import DimensionError, InsufficientData, NoConvergence, SupportTruncated
from doublechar.fbi import lp_norm
from doublechar.spectra import (
    PotentialSpec,
    SchrodingerMatrix,
    discretize_schrodinger,
    hermite_function,
    hermite_state,
    lowlying_eigenpair,
    lp_scaling_fit,
    predicted_exponent,
    schrodinger_grid,
)

OSC = PotentialSpec((0, 0, 1))
ROT = PotentialSpec((0, 0, 1 + 1j))
H_SCAN = [0.2 * 2.0**-k for k in range(5)]


def hermite_oracle(k, x):
    """Normalized Hermite function from numpy's physicists' polynomials."""
    c = np.zeros(k + 1)
    c[k] = 1
    return H.hermval(x, c) * np.exp(-(x**2) / 2) / np.sqrt(2.0**k * factorial(k) * np.sqrt(np.pi))


# ---------------------------------------------------------------- Hermite states


def test_hermite_function_matches_numpy():
    x = np.linspace(-6, 6, 101)
    for k in range(8):
        assert np.allclose(hermite_function(k, x), hermite_oracle(k, x), atol=1e-13)


def test_ground_state_closed_form():
    h = 0.1
    u, lam = hermite_state(0, h)
    x = u.axis
    assert np.allclose(u.values, (np.pi * h) ** -0.25 * np.exp(-(x**2) / (2 * h)), atol=1e-12)
    assert lp_norm(u, 2) == pytest.approx(1.0, abs=1e-14)
    assert lam == pytest.approx(h)


def test_first_excited_eigenvalue():
    assert hermite_state(1, 0.1)[1] == pytest.approx(0.3)
    assert hermite_state((1, 2), 0.1)[1] == pytest.approx(0.8)


def test_hermite_discrete_residual():
    h = 0.1
    L, _ = schrodinger_grid(h)
    u, lam = hermite_state(1, h, grid=(L, 513))
    Pm = discretize_schrodinger(OSC, h, grid=(L, 513))
    v = u.values.ravel()
    assert np.linalg.norm(Pm.matrix @ v - lam * v) / np.linalg.norm(v) < 1e-6


def test_two_dimensional_state_is_product():
    h = 0.2
    u, _ = hermite_state((1, 0), h)
    a = hermite_state(1, h, grid=(u.L, u.N))[0].values
    b = hermite_state(0, h, grid=(u.L, u.N))[0].values
    ref = np.outer(a, b)
    assert np.allclose(u.values, ref / lp_norm(u.with_values(ref), 2), atol=1e-12)


def test_support_truncated():
    with pytest.raises(SupportTruncated):
        hermite_state(3, 0.1, grid=(0.5, 51))
    with pytest.raises(DimensionError):
        hermite_state((0, 0, 0), 0.1)


# ---------------------------------------------------------------- discretization


def test_potential_spec():
    V = PotentialSpec((1, 0, 2 + 1j), p1=(0.5,))
    assert V(2.0) == pytest.approx(9 + 4j)
    assert V.subprincipal(3.0) == pytest.approx(0.5)
    assert V.check(np.linspace(-1, 1, 11)) == {"re_nonneg": True, "re_grows": True}
    assert PotentialSpec((0, 0, -1)).check([0.5]) == {"re_nonneg": False, "re_grows": False}
    with pytest.raises(ValueError):
        PotentialSpec(())
    with pytest.raises(DimensionError):
        PotentialSpec((0, 1), n=2)


def test_subprincipal_shifts_spectrum():
    h = 0.1
    lam0 = lowlying_eigenpair(discretize_schrodinger(OSC, h)).eigenvalue
    lam1 = lowlying_eigenpair(discretize_schrodinger(PotentialSpec((0, 0, 1), p1=(0.5j,)), h)).eigenvalue
    assert lam1 - lam0 == pytest.approx(0.5j * h, abs=1e-10)


def test_schrodinger_grid():
    L, N = schrodinger_grid(0.1)
    assert L == 4.0 and N % 2 == 1 and 257 <= N <= 2047
    assert schrodinger_grid(0.01, N=101) == (4.0, 101)
    with pytest.raises(ValueError):
        discretize_schrodinger(OSC, 0.1, grid=(4.0, 5000))


def test_oscillator_lowest_eigenvalue():
    r = lowlying_eigenpair(discretize_schrodinger(OSC, 0.1))
    assert abs(r.eigenvalue - 0.1) < 1e-4
    assert r.residual < 1e-8 and r.in_lowlying_disc


def test_free_box_modes():
    # zero extension puts the Dirichlet walls one node outside [-L, L]; the
    # truncated stencil then converges at first order in the spacing
    h, L = 0.1, 1.0
    errs = []
    for N in (65, 129, 257):
        Pm = discretize_schrodinger(PotentialSpec((0,)), h, grid=(L, N))
        dx = 2 * L / (N - 1)
        lam = np.sort(np.linalg.eigvals(Pm.matrix).real)[:3]
        exact = h**2 * (np.arange(1, 4) * np.pi / (2 * (L + dx))) ** 2
        errs.append(np.max(np.abs(lam / exact - 1)))
    assert errs[-1] < 2e-3
    assert np.all(np.log2(np.array(errs[:-1]) / errs[1:]) > 0.9)


def test_rotated_oscillator_eigenvalue():
    h = 0.1
    r = lowlying_eigenpair(discretize_schrodinger(ROT, h))
    assert r.eigenvalue == pytest.approx(h * np.sqrt(1 + 1j), abs=1e-6)
    assert abs(r.eigenvalue) == pytest.approx(h * 2**0.25, abs=1e-6)
    assert r.eigenvalue.real > 0


def test_rotated_oscillator_excited_branch():
    # (2k+1) h sqrt(1+i) for the first few k
    h = 0.1
    lams = np.linalg.eigvals(discretize_schrodinger(ROT, h).matrix)
    lams = lams[np.argsort(np.abs(lams))][:3]
    assert np.allclose(lams, (2 * np.arange(3) + 1) * h * np.sqrt(1 + 1j), atol=1e-5)


# ---------------------------------------------------------------- eigenpairs


def test_oscillator_ground_state_matches_hermite():
    h = 0.05
    r = lowlying_eigenpair(discretize_schrodinger(OSC, h), h=h)
    assert abs(r.eigenvalue - h) < 1e-4
    u, _ = hermite_state(0, h, grid=(r.eigenfunction.L, r.eigenfunction.N))
    diff = r.eigenfunction.with_values(r.eigenfunction.values - u.values)
    assert lp_norm(diff, 2) < 1e-4


def test_diagonal_matrix():
    d = np.array([3.0, -0.5 + 0.1j, 2.0, 0.7])
    Pm = SchrodingerMatrix(np.diag(d), 1.0, 4, 0.01)
    r = lowlying_eigenpair(Pm)
    assert r.eigenvalue == pytest.approx(d[np.argmin(np.abs(d))], abs=1e-12)
    assert not r.in_lowlying_disc  # |lambda| > 10 h


def test_singular_matrix_falls_back_to_dense():
    Pm = SchrodingerMatrix(np.diag([0.0, 1.0, 2.0]), 1.0, 3, 0.1)
    r = lowlying_eigenpair(Pm)
    assert r.eigenvalue == 0 and r.method == "dense"


def test_dense_fallback_agrees():
    Pm = discretize_schrodinger(ROT, 0.1, grid=(4.0, 257))
    a = lowlying_eigenpair(Pm)
    b = lowlying_eigenpair(Pm, maxiter=0)
    assert b.method == "dense" and a.method == "inverse-iteration"
    assert a.eigenvalue == pytest.approx(b.eigenvalue, abs=1e-10)
    assert np.allclose(a.eigenfunction.values, b.eigenfunction.values, atol=1e-6)


def test_no_convergence(monkeypatch):
    Pm = discretize_schrodinger(OSC, 0.1, grid=(4.0, 65))
    bad = np.ones((65, 65), dtype=complex)
    monkeypatch.setattr(spectra.linalg, "eig", lambda A: (np.full(65, 0.1 + 0j), bad))
    with pytest.raises(NoConvergence):
        lowlying_eigenpair(Pm, maxiter=0)


def test_h_mismatch():
    with pytest.raises(ValueError):
        lowlying_eigenpair(discretize_schrodinger(OSC, 0.1), h=0.2)


@pytest.mark.property
def test_eigenfunction_phase_convention():
    for V in (OSC, ROT, PotentialSpec((0, 0.3j, 1, 0.2j))):
        u = lowlying_eigenpair(discretize_schrodinger(V, 0.1)).eigenfunction
        k = int(np.argmax(np.abs(u.values)))
        assert u.values[k].imag == 0 and u.values[k].real > 0


@pytest.mark.property
def test_eigenvalue_fourth_order_convergence():
    lam = [lowlying_eigenpair(discretize_schrodinger(OSC, 0.1, grid=(4.0, N))).eigenvalue for N in (65, 129, 257, 513)]
    d = np.abs(np.diff(lam))
    orders = np.log2(d[:-1] / d[1:])
    assert np.all(orders > 3.5), orders


@pytest.mark.property
def test_lowlying_eigenvalue_is_order_h():
    for V in (OSC, ROT, PotentialSpec((0, 0, 1, 0.5j))):
        ratios = []
        for h in H_SCAN[:4]:
            r = lowlying_eigenpair(discretize_schrodinger(V, h))
            assert r.in_lowlying_disc
            ratios.append(abs(r.eigenvalue) / h)
        assert max(ratios) < 10 and max(ratios) / min(ratios) < 1.5


# ---------------------------------------------------------------- scaling fits


def test_predicted_exponent():
    assert predicted_exponent(np.inf) == -0.25
    assert predicted_exponent(2) == 0.0
    assert predicted_exponent(1) == 0.25
    assert predicted_exponent(1, n=2) == 0.5


@pytest.mark.property
@pytest.mark.parametrize("p", [1, 4 / 3, 2, 4, np.inf])
def test_lp_scaling_of_hermite_states(p):
    states = [(h, hermite_state(0, h)[0]) for h in H_SCAN]
    slope, r2 = lp_scaling_fit(states, p)
    tol = 0.01 if p == 2 else 0.02
    assert abs(slope - predicted_exponent(p)) < tol
    assert r2 > 0.999 or p == 2


def test_lp_scaling_needs_a_decade():
    states = [(h, hermite_state(0, h)[0]) for h in (0.2, 0.15, 0.1, 0.05)]
    with pytest.raises(InsufficientData):
        lp_scaling_fit(states, 2)
    with pytest.raises(InsufficientData):
        lp_scaling_fit(states[:3], 2)
