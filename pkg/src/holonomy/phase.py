"""Noncyclic geometric phase factors and their gauge-invariant scalars.

The central objects are, per degenerate level n,

    w^n     endpoint overlap matrix  w_ba = <b; start | a; end>
    Gamma^n holonomy matrix (path-ordered exponential of the connection)
    Gcheck  = w^n Gamma^n   the noncyclic geometric phase factor
    Pi^n    = trace(Gcheck) the gauge-invariant scalar

For a cyclic evolution w^n is the identity and Gcheck reduces to the cyclic
holonomy.  In the Abelian case (l_n = 1) the modulus of w is the visibility
and arg(Gcheck) the real noncyclic phase angle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur

from .errors import DomainError, UndefinedPhaseError
from .linalg import require_unitary

VISIBILITY_FLOOR = 1e-12
OVERLAP_SINGULAR_TOL = 1e-10


@dataclass(frozen=True)
class OverlapMatrix:
    """Endpoint frame overlap for one level; a contraction (singular values <= 1)."""

    level_index: int
    matrix: np.ndarray  # (l, l), w_ba = <b; start | a; end>
    theta_start: np.ndarray | None = None
    theta_end: np.ndarray | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        svals = np.linalg.svd(m, compute_uv=False)
        if svals.size and svals.max() > 1.0 + OVERLAP_SINGULAR_TOL:
            raise DomainError(f"overlap matrix has singular value {svals.max():.6f} > 1")
        object.__setattr__(self, "matrix", m)

    @property
    def multiplicity(self) -> int:
        return self.matrix.shape[0]


def overlap_matrix(
    frame_start: np.ndarray,
    frame_end: np.ndarray,
    level_index: int = 0,
    theta_start: np.ndarray | None = None,
    theta_end: np.ndarray | None = None,
) -> OverlapMatrix:
    """w_ba = <b; start | a; end> for two orthonormal frames of one level."""
    a = np.asarray(frame_start, dtype=complex)
    b = np.asarray(frame_end, dtype=complex)
    if a.shape != b.shape:
        raise DomainError(f"frame shapes differ: {a.shape} vs {b.shape}")
    return OverlapMatrix(level_index=level_index, matrix=a.conj().T @ b, theta_start=theta_start, theta_end=theta_end)


def wrap_angle(angle: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    out = float(np.mod(angle + np.pi, 2 * np.pi) - np.pi)
    return np.pi if out == -np.pi else out


def unwrap_nearest_branch(angles: np.ndarray) -> np.ndarray:
    """Cumulative unwrapping: each angle shifted by 2*pi*k to follow its predecessor."""
    angles = np.asarray(angles, dtype=float)
    out = angles.copy()
    for k in range(1, len(out)):
        out[k] = angles[k] + 2 * np.pi * np.round((out[k - 1] - angles[k]) / (2 * np.pi))
    return out


def _sorted_eigenvalues(m: np.ndarray) -> np.ndarray:
    """Eigenvalues ordered by descending modulus, then ascending argument."""
    ev = np.linalg.eigvals(m)
    order = np.lexsort((np.angle(ev), -np.abs(ev)))
    return ev[order]


@dataclass(frozen=True)
class PhaseReport:
    """Geometric-phase data for one level at one endpoint time."""

    level_index: int
    multiplicity: int
    gamma: np.ndarray                 # holonomy matrix (l, l)
    w: OverlapMatrix
    gamma_check: np.ndarray           # w * gamma
    pi: complex                       # trace(w * gamma)
    eigenvalues: np.ndarray           # eigenvalues of gamma_check, sorted
    # Abelian-only angles (radians); None for degenerate levels
    phase_angle: float | None = None      # arg(w * gamma)
    overlap_angle: float | None = None    # arg(w)
    holonomy_angle: float | None = None   # arg(gamma)
    visibility: float | None = None       # |w|
    dynamical_phase: float | None = None  # -integral of E^n, when supplied

    def to_record(self) -> dict:
        """Flat serializable record (complex values split into re_/im_)."""
        rec: dict = {
            "level": self.level_index,
            "multiplicity": self.multiplicity,
            "re_pi": self.pi.real,
            "im_pi": self.pi.imag,
            "abs_pi": abs(self.pi),
        }
        for i, ev in enumerate(self.eigenvalues, start=1):
            rec[f"re_eig{i}"] = ev.real
            rec[f"im_eig{i}"] = ev.imag
        if self.visibility is not None:
            rec["visibility"] = self.visibility
        if self.phase_angle is not None:
            rec["phase_angle"] = self.phase_angle
        if self.overlap_angle is not None:
            rec["overlap_angle"] = self.overlap_angle
        if self.holonomy_angle is not None:
            rec["holonomy_angle"] = self.holonomy_angle
        if self.dynamical_phase is not None:
            rec["dynamical_phase"] = self.dynamical_phase
        return rec


def noncyclic_phase(
    w: OverlapMatrix,
    gamma: np.ndarray,
    dynamical_phase: float | None = None,
) -> PhaseReport:
    """Combine an endpoint overlap with a holonomy into a phase report.

    Gcheck = w Gamma is generally not unitary (its eigenvalues live inside the
    unit disc); they are computed with a general complex eigensolver and
    ordered deterministically.
    """
    gamma = np.asarray(gamma, dtype=complex)
    if gamma.shape != w.matrix.shape:
        raise DomainError(f"gamma shape {gamma.shape} does not match overlap {w.matrix.shape}")
    gcheck = w.matrix @ gamma
    pi = complex(np.trace(gcheck))
    eigs = _sorted_eigenvalues(gcheck)
    l = w.multiplicity

    if l == 1:
        wval = complex(w.matrix[0, 0])
        gval = complex(gamma[0, 0])
        visibility = abs(wval)
        if visibility > VISIBILITY_FLOOR:
            phase_angle = wrap_angle(float(np.angle(wval * gval)))
            overlap_angle = wrap_angle(float(np.angle(wval)))
        else:
            phase_angle = None
            overlap_angle = None
        return PhaseReport(
            level_index=w.level_index,
            multiplicity=1,
            gamma=gamma,
            w=w,
            gamma_check=gcheck,
            pi=pi,
            eigenvalues=eigs,
            phase_angle=phase_angle,
            overlap_angle=overlap_angle,
            holonomy_angle=wrap_angle(float(np.angle(gval))),
            visibility=visibility,
            dynamical_phase=dynamical_phase,
        )

    return PhaseReport(
        level_index=w.level_index,
        multiplicity=l,
        gamma=gamma,
        w=w,
        gamma_check=gcheck,
        pi=pi,
        eigenvalues=eigs,
        dynamical_phase=dynamical_phase,
    )


def abelian_phase(w: complex, gamma: complex, visibility_floor: float = VISIBILITY_FLOOR) -> tuple[float, float]:
    """(phase angle, visibility) for a nondegenerate level.

    The angle is arg(w * gamma) in (-pi, pi], the sum of the endpoint-overlap
    angle and the holonomy angle; the visibility is |w|.  A vanishing overlap
    leaves the angle undefined.
    """
    visibility = abs(w)
    if visibility <= visibility_floor:
        raise UndefinedPhaseError("endpoint states are orthogonal; the noncyclic phase is undefined")
    return wrap_angle(float(np.angle(w * gamma))), visibility


def diagonal_decomposition(
    gamma: np.ndarray,
    frame_end: np.ndarray,
    frame_start: np.ndarray,
) -> list[tuple[float, complex]]:
    """Eigenphases of a unitary holonomy with their star-basis overlap weights.

    Returns pairs (gamma_a, weight_a) such that sum_a exp(i gamma_a) * weight_a
    equals trace(w Gamma); the weights are the diagonal endpoint overlaps in
    the basis where Gamma is diagonal.
    """
    gamma = require_unitary(np.asarray(gamma, dtype=complex), name="holonomy")
    w = overlap_matrix(frame_start, frame_end).matrix
    # unitary => normal, so the complex Schur form is diagonal
    t, s = schur(gamma, output="complex")
    eigs = np.diag(t)
    w_star = s.conj().T @ w @ s
    pairs = [(wrap_angle(float(np.angle(eigs[a]))), complex(w_star[a, a])) for a in range(len(eigs))]
    pairs.sort(key=lambda p: (-abs(p[1]), p[0]))
    return pairs
