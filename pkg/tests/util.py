"""Shared random-state generators for the test suite."""

import numpy as np

from cqcap.operator_core import DensityMatrix


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def rand_pure(rng, d: int) -> DensityMatrix:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()))


def rand_state(rng, d: int) -> DensityMatrix:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def rand_hermitian(rng, d: int) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (g + g.conj().T)


def rand_unitary(rng, d: int) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    ph = np.diag(r).copy()
    ph /= np.abs(ph)
    return q * ph.conj()


def commuting_pair(rng, d: int):
    """Two full-rank states sharing a random eigenbasis."""
    u = rand_unitary(rng, d)
    p = rng.dirichlet(np.ones(d)) + 1e-3
    q = rng.dirichlet(np.ones(d)) + 1e-3
    p, q = p / p.sum(), q / q.sum()
    rho = DensityMatrix((u * p) @ u.conj().T)
    sigma = DensityMatrix((u * q) @ u.conj().T)
    return rho, sigma, p, q
