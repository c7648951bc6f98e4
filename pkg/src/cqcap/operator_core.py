"""Dense Hermitian linear algebra and the validated density-matrix type.

Matrices are plain (d, d) complex numpy arrays underneath; eigensystems come
from LAPACK. Every downstream module leans on the small set of invariants
enforced here: Hermiticity, positivity up to clipped dust, unit trace, and a
deterministic ordering rule for degenerate spectra.
"""

from __future__ import annotations

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
EIG_DUST = 1e-10        # most negative eigenvalue tolerated before clipping
SUPPORT_TOL = 1e-10     # eigenvalues <= this count as kernel
DEGENERACY_TOL = 1e-10  # eigenvalues closer than this form one eigenspace


def asmat(x) -> np.ndarray:
    """Unwrap an operator-like object to its (d, d) complex array."""
    if isinstance(x, HermitianOperator):
        return x.mat
    arr = np.asarray(x, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    return arr


class HermitianOperator:
    """A d x d complex matrix equal to its conjugate transpose within 1e-12."""

    def __init__(self, entries):
        arr = asmat(entries)
        if np.abs(arr - arr.conj().T).max() > HERMITICITY_TOL:
            raise ValueError("matrix is not Hermitian within 1e-12")
        self.mat = 0.5 * (arr + arr.conj().T)
        self.dim = arr.shape[0]

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class DensityMatrix(HermitianOperator):
    """A quantum state: Hermitian, unit trace, eigenvalues >= -1e-10.

    Negative dust above the floor is clipped at construction and the matrix is
    renormalized to unit trace.
    """

    def __init__(self, entries):
        super().__init__(entries)
        tr = self.mat.trace().real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {tr!r} differs from 1 beyond 1e-10")
        w = np.linalg.eigvalsh(self.mat)
        if w[0] < -EIG_DUST:
            raise ValueError(f"minimum eigenvalue {w[0]:.3e} below -1e-10")
        if w[0] < 0.0:
            w2, v = np.linalg.eigh(self.mat)
            w2 = np.clip(w2, 0.0, None)
            self.mat = (v * w2) @ v.conj().T
            self.mat = 0.5 * (self.mat + self.mat.conj().T)
        self.mat = self.mat / self.mat.trace().real
        self._spectrum = None

    @classmethod
    def pure(cls, vec) -> "DensityMatrix":
        v = np.asarray(vec, dtype=complex).reshape(-1)
        nrm = np.linalg.norm(v)
        if nrm == 0.0:
            raise ValueError("zero vector has no associated pure state")
        v = v / nrm
        return cls(np.outer(v, v.conj()))

    @classmethod
    def diagonal(cls, probs) -> "DensityMatrix":
        return cls(np.diag(np.asarray(probs, dtype=complex)))

    def spectrum(self) -> "Spectrum":
        if self._spectrum is None:
            self._spectrum = eig(self)
        return self._spectrum

    def eigenvalues(self) -> np.ndarray:
        return self.spectrum().eigenvalues


class Spectrum:
    """Eigensystem with descending eigenvalues and deterministically ordered columns."""

    def __init__(self, eigenvalues: np.ndarray, vectors: np.ndarray):
        self.eigenvalues = eigenvalues
        self.vectors = vectors

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.eigenvalues) @ self.vectors.conj().T


def _canonical_phase(col: np.ndarray) -> np.ndarray:
    mag = np.abs(col)
    # first index attaining the max within rounding, so ties break the same way
    idx = int(np.argmax(mag >= mag.max() - 1e-12))
    pivot = col[idx]
    if abs(pivot) > 0.0:
        col = col * (pivot.conjugate() / abs(pivot))
    return col


def _lex_key(col: np.ndarray):
    return tuple(np.round(np.concatenate([col.real, col.imag]), 9))


def eig(h) -> Spectrum:
    """Spectral decomposition, eigenvalues descending.

    Degenerate groups (eigenvalue gaps <= 1e-10) get a fixed column order:
    canonical phase first, then lexicographic on rounded entries.
    """
    a = asmat(h)
    w, v = np.linalg.eigh(a)
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    for k in range(v.shape[1]):
        v[:, k] = _canonical_phase(v[:, k])
    d = len(w)
    start = 0
    while start < d:
        stop = start + 1
        while stop < d and w[stop - 1] - w[stop] <= DEGENERACY_TOL:
            stop += 1
        if stop - start > 1:
            order = sorted(range(start, stop), key=lambda k: _lex_key(v[:, k]))
            v[:, start:stop] = v[:, order]
            w[start:stop] = w[order]
        start = stop
    return Spectrum(w, v)


def trace_distance(a, b) -> float:
    am, bm = asmat(a), asmat(b)
    if am.shape != bm.shape:
        raise ValueError(f"dimension mismatch: {am.shape} vs {bm.shape}")
    w = np.linalg.eigvalsh(am - bm)
    return 0.5 * float(np.abs(w).sum())


def support_projector(rho, tol: float = SUPPORT_TOL) -> HermitianOperator:
    """Projector onto the eigenvectors of rho with eigenvalue > tol."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    spec = eig(rho)
    cols = spec.vectors[:, spec.eigenvalues > tol]
    return HermitianOperator(cols @ cols.conj().T)


def log_on_support(rho, tol: float = SUPPORT_TOL) -> HermitianOperator:
    """Matrix logarithm on the support; kernel eigenvalues map to 0.

    The 0 ln 0 = 0 convention is sound because callers only ever trace the
    result against states supported inside rho's support.
    """
    spec = eig(rho)
    w = spec.eigenvalues
    logw = np.where(w > tol, np.log(np.maximum(w, tol)), 0.0)
    return HermitianOperator((spec.vectors * logw) @ spec.vectors.conj().T)
