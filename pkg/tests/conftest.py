import numpy as np
import pytest

SEED = 20240611


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


def random_symmetric(rng, m, complex_=True):
    A = rng.standard_normal((m, m))
    if complex_:
        A = A + 1j * rng.standard_normal((m, m))
    return 0.5 * (A + A.T)


def random_phase_blocks(rng, n):
    """Blocks of a random valid FBI phase (Im Cyy positive definite)."""
    Czz = random_symmetric(rng, n)
    Czy = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) + 2 * np.eye(n)
    G = rng.standard_normal((n, n))
    Cyy = random_symmetric(rng, n).real + 1j * (G @ G.T + 0.5 * np.eye(n))
    return Czz, Czy, Cyy


def random_psh_weight_blocks(rng, n):
    a = random_symmetric(rng, n)
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    b = G @ G.conj().T + 0.5 * np.eye(n)
    return a, b
