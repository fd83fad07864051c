import numpy as np
import pytest

from qbme.core import DensityMatrix


def random_density(gen: np.random.Generator, d: int, rank: int | None = None) -> np.ndarray:
    """Independent test-side sampler: rho = A A^dagger / Tr with A of shape d x rank."""
    k = d if rank is None else rank
    a = gen.standard_normal((d, k)) + 1j * gen.standard_normal((d, k))
    m = a @ a.conj().T
    return m / np.trace(m).real


def random_pure(gen: np.random.Generator, d: int) -> np.ndarray:
    v = gen.standard_normal(d) + 1j * gen.standard_normal(d)
    return v / np.linalg.norm(v)


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


@pytest.fixture
def gen():
    return np.random.default_rng(20261016)


KET0 = projector([1, 0])
KET1 = projector([0, 1])
KETP = projector(np.array([1, 1]) / np.sqrt(2))
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
