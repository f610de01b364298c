"""Dense complex linear algebra at small fixed sizes.

Hermitian eigendecomposition with degeneracy clustering, unitary exponentials
of Hermitian generators, and structural defect measures.  Matrices are plain
complex ``numpy`` arrays; the functions here enforce the structural contracts
(hermiticity, unitarity, orthonormal frames) that the rest of the library
relies on.  All operations are pure and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StructuralError

HERMITICITY_TOL = 1e-12   # relative to max|entry|
UNITARITY_TOL = 1e-10     # absolute
DEGENERACY_REL_TOL = 1e-8  # relative gap threshold for clustering


def as_square_matrix(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"{name} must be square, got shape {m.shape}")
    if m.size == 0:
        raise DomainError(f"{name} is empty")
    if not np.all(np.isfinite(m.view(float))):
        raise DomainError(f"{name} has non-finite entries")
    return m


def hermiticity_defect(m: np.ndarray) -> float:
    """max|M - M^dag|, the absolute deviation from hermiticity."""
    m = as_square_matrix(m)
    return float(np.max(np.abs(m - m.conj().T)))


def unitarity_defect(u: np.ndarray) -> float:
    """max|U^dag U - 1|; zero iff U is exactly unitary."""
    u = as_square_matrix(u, "U")
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def require_hermitian(m: np.ndarray, tol: float = HERMITICITY_TOL, name: str = "matrix") -> np.ndarray:
    m = as_square_matrix(m, name)
    scale = max(float(np.max(np.abs(m))), 1.0)
    if hermiticity_defect(m) > tol * scale:
        raise StructuralError(
            f"{name} is not Hermitian: defect {hermiticity_defect(m):.3e} "
            f"exceeds {tol:.1e} * {scale:.3e}"
        )
    return m


def require_unitary(u: np.ndarray, tol: float = UNITARITY_TOL, name: str = "matrix") -> np.ndarray:
    u = as_square_matrix(u, name)
    defect = unitarity_defect(u)
    if defect > tol:
        raise StructuralError(f"{name} is not unitary: defect {defect:.3e} exceeds {tol:.1e}")
    return u


@dataclass(frozen=True)
class SpectralLevel:
    """One (possibly degenerate) eigenvalue with an orthonormal column frame."""

    eigenvalue: float
    multiplicity: int
    frame: np.ndarray  # dim x multiplicity, orthonormal columns


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues clustered into degenerate levels, ordered increasingly."""

    dim: int
    levels: tuple[SpectralLevel, ...]

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([lv.eigenvalue for lv in self.levels])

    @property
    def multiplicities(self) -> tuple[int, ...]:
        return tuple(lv.multiplicity for lv in self.levels)

    def level(self, index: int) -> SpectralLevel:
        return self.levels[index]

    def reconstruct(self) -> np.ndarray:
        """Rebuild sum_n lambda_n P_n from the level frames."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for lv in self.levels:
            out += lv.eigenvalue * (lv.frame @ lv.frame.conj().T)
        return out

    def completeness_defect(self) -> float:
        proj = np.zeros((self.dim, self.dim), dtype=complex)
        for lv in self.levels:
            proj += lv.frame @ lv.frame.conj().T
        return float(np.max(np.abs(proj - np.eye(self.dim))))


def eig_hermitian(m: np.ndarray, degeneracy_tol: float | None = None) -> Spectrum:
    """Eigendecompose a Hermitian matrix, merging near-equal eigenvalues.

    Eigenvalues closer than ``degeneracy_tol`` (default: 1e-8 * max|lambda|)
    are clustered into a single level whose eigenvalue is the cluster mean and
    whose frame collects the corresponding orthonormal eigenvectors.  Within a
    level the frame orientation is the arbitrary one emitted by ``eigh``;
    downstream gauge fixing is the transport machinery's responsibility.
    """
    m = require_hermitian(m)
    vals, vecs = np.linalg.eigh(m)
    if degeneracy_tol is None:
        degeneracy_tol = DEGENERACY_REL_TOL * max(float(np.max(np.abs(vals))), np.finfo(float).tiny)
    elif degeneracy_tol <= 0:
        raise DomainError("degeneracy_tol must be positive")

    levels: list[SpectralLevel] = []
    start = 0
    for k in range(1, len(vals) + 1):
        if k == len(vals) or vals[k] - vals[k - 1] > degeneracy_tol:
            cluster = vals[start:k]
            frame = vecs[:, start:k].copy()
            levels.append(SpectralLevel(float(np.mean(cluster)), k - start, frame))
            start = k
    return Spectrum(dim=m.shape[0], levels=tuple(levels))


def expm_skew(h: np.ndarray, s: float = 1.0) -> np.ndarray:
    """exp(-i*s*H) for Hermitian H, exactly unitary up to roundoff."""
    h = require_hermitian(h, name="generator")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * s * w)) @ v.conj().T


def expm_skew_many(hs: np.ndarray, s: float = 1.0) -> np.ndarray:
    """Batched exp(-i*s*H_k) over a stack of Hermitian matrices (m, d, d)."""
    w, v = np.linalg.eigh(hs)
    phases = np.exp(-1j * s * w)
    return np.einsum("kij,kj,klj->kil", v, phases, v.conj())


def frame_orthonormality_defect(frame: np.ndarray) -> float:
    frame = np.asarray(frame, dtype=complex)
    g = frame.conj().T @ frame
    return float(np.max(np.abs(g - np.eye(frame.shape[1]))))


def subspace_projector_distance(frame_a: np.ndarray, frame_b: np.ndarray) -> float:
    """max-norm distance between the projectors spanned by two frames."""
    pa = frame_a @ frame_a.conj().T
    pb = frame_b @ frame_b.conj().T
    return float(np.max(np.abs(pa - pb)))


def polar_unitary_factor(m: np.ndarray) -> np.ndarray:
    """Unitary factor Q of the polar decomposition M = Q * P with P >= 0."""
    u, _, vh = np.linalg.svd(np.asarray(m, dtype=complex))
    return u @ vh
