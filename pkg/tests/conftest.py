import numpy as np


def random_density(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Ginibre-random density matrix."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def ket16(m_a: int, m_b: int) -> np.ndarray:
    v = np.zeros(16, dtype=complex)
    v[4 * m_a + m_b] = 1.0
    return v
