import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from conftest import random_phase_blocks, random_psh_weight_blocks, random_symmetric
from doublechar.errors import NotPositive, NotStrictlyPsh, RealEigenvalue, SingularBlock
from doublechar.quadform import QuadraticSymbol, hamilton_map, singular_space
from doublechar.symplectic import (
    CanonicalMap,
    FBIPhase,
    WeightForm,
    conjugate_hamilton_map,
    is_canonical,
    kappa_from_phase,
    normal_form_map,
    phase_from_kappa,
    plane_of_weight,
    stable_subspaces,
    standard_phase,
    transport_symbol,
    weight_from_phase,
)

HO = QuadraticSymbol(1, 2 * np.eye(2))
XI2_IX2 = QuadraticSymbol(1, np.diag([2j, 2]))


def weight_by_grid_max(phi, z, L=12.0, m=4001):
    """max over real y of -Im phi(z, y), n = 1, by grid search plus refinement."""
    ys = np.linspace(-L, L, m)
    vals = np.array([-phi(np.array([z]), np.array([y])).imag for y in ys])
    k = int(np.argmax(vals))
    res = minimize_scalar(
        lambda y: phi(np.array([z]), np.array([y])).imag,
        bounds=(ys[max(k - 1, 0)], ys[min(k + 1, m - 1)]),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return max(vals[k], -res.fun)


# ---------------------------------------------------------------- canonical maps


def test_is_canonical_examples():
    ok, res = is_canonical(CanonicalMap(np.eye(2)))
    assert ok and res == 0
    assert is_canonical(kappa_from_phase(standard_phase(1)))[0]
    ok, res = is_canonical(CanonicalMap(2 * np.eye(2)))
    assert not ok and res == pytest.approx(3.0)


# ---------------------------------------------------------------- stable subspaces


def test_stable_subspaces_harmonic_oscillator():
    plus, minus = stable_subspaces(hamilton_map(HO))
    v = plus.basis[:, 0]
    assert abs(v[1] / v[0] - 1j) < 1e-12
    assert plus.positivity() == "positive"
    assert minus.positivity() == "negative"


def test_stable_subspaces_xi2_ix2():
    F = hamilton_map(XI2_IX2).F
    plus, _ = stable_subspaces(F)
    lam = (-1 + 1j) / np.sqrt(2)
    v = plus.basis[:, 0]
    assert np.linalg.norm(F @ v - lam * v) < 1e-10


def test_stable_subspaces_real_spectrum():
    F = hamilton_map(QuadraticSymbol(1, np.array([[0, 1], [1, 0]])))
    assert np.allclose(F.F, np.diag([0.5, -0.5]))
    with pytest.raises(RealEigenvalue):
        stable_subspaces(F)


def _random_trivial_S_symbol(rng, n):
    while True:
        G = rng.standard_normal((2 * n, 2 * n))
        B = rng.standard_normal((2 * n, int(rng.integers(1, 2 * n + 1))))
        ReA = B @ B.T if rng.random() < 0.5 else G @ G.T
        q = QuadraticSymbol(n, ReA + 1j * random_symmetric(rng, 2 * n, complex_=False))
        if singular_space(hamilton_map(q)).d == 0:
            return q


@pytest.mark.property
def test_q_vanishes_on_stable_subspaces(rng):
    for _ in range(30):
        n = int(rng.integers(1, 4))
        q = _random_trivial_S_symbol(rng, n)
        plus, minus = stable_subspaces(hamilton_map(q))
        for L in (plus, minus):
            assert L.basis.shape == (2 * n, n)
            assert L.sigma_residual() < 1e-10
            for v in L.basis.T:
                assert abs(q(v)) < 1e-8


# ---------------------------------------------------------------- phases and kappa


def test_standard_kappa_formula():
    K = kappa_from_phase(standard_phase(1))
    for x, xi in [(1.0, 0.0), (0.3, -1.2), (2.0, 0.5)]:
        z, zeta = K(np.array([x, xi]))
        assert abs(z - (x - 1j * xi) / np.sqrt(2)) < 1e-14
        assert abs(zeta - (xi - 1j * x) / np.sqrt(2)) < 1e-14
    z, zeta = K(np.array([1.0, 0.0]))
    assert np.allclose([z, zeta], [1 / np.sqrt(2), -1j / np.sqrt(2)])


def test_kappa_maps_lagrangian_graph_correctly(rng):
    # (y, -phi'_y) -> (z, phi'_z) checked by differentiating phi numerically
    Czz, Czy, Cyy = random_phase_blocks(rng, 2)
    phi = FBIPhase(Czz, Czy, Cyy)
    K = kappa_from_phase(phi)
    z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    y = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    eps = 1e-6

    def d(f, v, k):
        e = np.zeros(2)
        e[k] = eps
        return (f(v + e) - f(v - e)) / (2 * eps)

    phi_y = np.array([d(lambda yy: phi(z, yy), y, k) for k in range(2)])
    phi_z = np.array([d(lambda zz: phi(zz, y), z, k) for k in range(2)])
    out = K(np.concatenate([y, -phi_y]))
    assert np.allclose(out, np.concatenate([z, phi_z]), atol=1e-7)


def test_standard_phase_constants():
    sp = standard_phase(1)
    assert sp.cphi == pytest.approx(np.pi**-0.75, rel=1e-14)
    sp2 = standard_phase(2)
    assert sp2.cphi == pytest.approx(np.pi**-1.5, rel=1e-14)


def test_singular_mixed_block():
    with pytest.raises(SingularBlock):
        FBIPhase(np.eye(1), np.zeros((1, 1)), 1j * np.eye(1))


def test_phase_from_kappa_standard():
    phi = phase_from_kappa(kappa_from_phase(standard_phase(1)))
    assert np.allclose(phi.Czz, 1j, atol=1e-12)
    assert np.allclose(phi.Czy, -1j * np.sqrt(2), atol=1e-12)
    assert np.allclose(phi.Cyy, 1j, atol=1e-12)


def test_phase_from_identity_is_not_positive():
    with pytest.raises(NotPositive):
        phase_from_kappa(CanonicalMap(np.eye(2)))


@pytest.mark.property
def test_phase_kappa_round_trip(rng):
    for _ in range(50):
        n = int(rng.integers(1, 4))
        phi = FBIPhase(*random_phase_blocks(rng, n))
        K = kappa_from_phase(phi)
        assert is_canonical(K)[0]
        back = phase_from_kappa(K)
        for name in ("Czz", "Czy", "Cyy"):
            assert np.max(np.abs(getattr(back, name) - getattr(phi, name))) < 1e-8


# ---------------------------------------------------------------- weights


def test_weight_of_standard_phase():
    for n in (1, 2, 3):
        W = weight_from_phase(standard_phase(n))
        assert np.max(np.abs(W.a)) < 1e-12
        assert np.max(np.abs(W.b - np.eye(n))) < 1e-12


def test_weight_of_bargmann_type_phase():
    # phi(z, y) = i (z - y)^2 / 2
    phi = FBIPhase(1j * np.eye(1), -1j * np.eye(1), 1j * np.eye(1))
    W = weight_from_phase(phi)
    for z in [0.5 + 0.7j, -1.0 + 0.2j, 2j]:
        assert W(np.array([z])) == pytest.approx(z.imag**2 / 2, abs=1e-13)
        assert W(np.array([z])) == pytest.approx(weight_by_grid_max(phi, z), abs=1e-9)


@pytest.mark.property
def test_weight_matches_grid_maximization(rng):
    for _ in range(10):
        phi = FBIPhase(*random_phase_blocks(rng, 1))
        W = weight_from_phase(phi)
        assert W.is_strictly_psh()
        for _ in range(3):
            z = complex(rng.standard_normal(), rng.standard_normal())
            assert W(np.array([z])) == pytest.approx(weight_by_grid_max(phi, z), abs=1e-8)


def test_levi_part_positive_for_random_phases(rng):
    for n in (1, 2, 3):
        for _ in range(10):
            assert weight_from_phase(FBIPhase(*random_phase_blocks(rng, n))).is_strictly_psh()


@pytest.mark.property
def test_real_matrix_matches_evaluation(rng):
    for n in (1, 2, 3):
        W = WeightForm(*random_psh_weight_blocks(rng, n))
        R = W.real_matrix()
        for _ in range(20):
            z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            X = np.concatenate([z.real, z.imag])
            assert X @ R @ X == pytest.approx(W(z), abs=1e-12)
        back = WeightForm.from_real_matrix(R)
        assert np.allclose(back.a, W.a, atol=1e-13) and np.allclose(back.b, W.b, atol=1e-13)


def test_grad_z_matches_wirtinger_difference(rng):
    W = WeightForm(*random_psh_weight_blocks(rng, 2))
    z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    eps = 1e-6
    for k in range(2):
        e = np.zeros(2)
        e[k] = eps
        dx = (W(z + e) - W(z - e)) / (2 * eps)
        dy = (W(z + 1j * e) - W(z - 1j * e)) / (2 * eps)
        assert W.grad_z(z)[k] == pytest.approx(0.5 * (dx - 1j * dy), abs=1e-8)


# ---------------------------------------------------------------- graphs


def test_plane_of_weight_examples():
    G = plane_of_weight(WeightForm(np.zeros((1, 1)), np.eye(1)))
    for z in [1.0, 0.3 - 2j]:
        w = G(np.array([z]))
        assert np.allclose(w, [z, np.conj(z) / 1j])
    G2 = plane_of_weight(WeightForm(np.zeros((1, 1)), 2 * np.eye(1)))
    assert np.allclose(G2(np.array([1 + 1j])), [1 + 1j, 2 * (1 - 1j) / 1j])
    assert G2.im_sigma_residual() < 1e-12
    with pytest.raises(NotStrictlyPsh):
        plane_of_weight(WeightForm(np.zeros((2, 2)), np.diag([1.0, -1.0])))


@pytest.mark.property
def test_weight_graphs_are_I_lagrangian_R_symplectic(rng):
    for n in (1, 2, 3):
        for _ in range(10):
            G = plane_of_weight(WeightForm(*random_psh_weight_blocks(rng, n)))
            assert G.im_sigma_residual() < 1e-10
            assert G.re_sigma_rank() == 2 * n


# ---------------------------------------------------------------- normal forms


def test_transport_and_conjugation_agree(rng):
    for n in (1, 2):
        q = QuadraticSymbol(n, random_symmetric(rng, 2 * n))
        K = kappa_from_phase(FBIPhase(*random_phase_blocks(rng, n)))
        F1 = hamilton_map(transport_symbol(q, K)).F
        F2 = conjugate_hamilton_map(hamilton_map(q), K).F
        assert np.allclose(F1, F2, atol=1e-10)


def test_standard_phase_transports_oscillator_to_normal_form():
    K = kappa_from_phase(standard_phase(1))
    qf = transport_symbol(HO, K)
    # x^2 + xi^2 becomes 2 i z zeta
    assert np.allclose(qf.A, [[0, 2j], [2j, 0]], atol=1e-12)


@pytest.mark.property
def test_normal_form_weight_strictly_convex(rng):
    for _ in range(20):
        n = int(rng.integers(1, 4))
        q = _random_trivial_S_symbol(rng, n)
        F = hamilton_map(q)
        plus, minus = stable_subspaces(F)
        assert plus.positivity() == "positive"
        K, M = normal_form_map(F)
        assert is_canonical(K)[0]
        # K(Lambda+) lies in {zeta = 0}
        assert np.max(np.abs((K.K @ plus.basis)[n:])) < 1e-8
        phi = phase_from_kappa(K)
        W = weight_from_phase(phi)
        assert W.min_eig() > 0
