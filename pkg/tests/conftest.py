import numpy as np
import pytest

from sepdyn.states import ComponentState, Ket


def random_ket(rng, dim=2, normalize=True):
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    if normalize:
        vec /= np.linalg.norm(vec)
    return Ket(vec)


def random_unitary(rng, dim):
    mat = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(mat)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def fig1_state():
    """|0> on the first qubit, the equal superposition on the second."""
    a0 = Ket(np.array([1.0, 0.0], dtype=complex))
    b0 = Ket(np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0))
    return ComponentState((a0, b0))
