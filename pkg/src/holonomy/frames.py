"""Parameter curves, smooth eigenframe transport, and connection matrices.

A :class:`Curve` is a time-stamped path through parameter space.  An
:class:`OperatorFamily` maps parameter vectors to Hermitian matrices.
:func:`transport_frame` follows one spectral level along a curve and
(optionally) applies discrete parallel transport so that the frames vary
smoothly; :func:`connection_matrices` then produces the per-level matrices

    E^n(t)   = <a| H(t) |b>                (energy matrix)
    A^n(t)   = i <a| d/dt |b>              (connection matrix)
    D^n(t)   = E^n(t) - A^n(t)             (evolution generator)

all Hermitian l_n x l_n, where |a>, |b> run over the level frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, LevelCrossingError, ResolutionError, StructuralError
from .linalg import (
    Spectrum,
    eig_hermitian,
    frame_orthonormality_defect,
    polar_unitary_factor,
    require_hermitian,
    require_unitary,
)

CYCLIC_ENDPOINT_TOL = 1e-12
MIN_OVERLAP_SINGULAR_VALUE = 0.5


@dataclass(frozen=True)
class Curve:
    """Sampled path theta(t) through an N-dimensional parameter space."""

    times: np.ndarray          # (m,) strictly increasing
    points: np.ndarray         # (m, N)
    cyclic: bool = False
    evaluator: Callable[[float], np.ndarray] | None = None  # optional analytic theta(t)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if points.shape[0] != times.shape[0]:
            raise DomainError("times and points must have matching lengths")
        if times.ndim != 1 or len(times) < 2:
            raise DomainError("a curve needs at least two samples")
        if np.any(np.diff(times) <= 0):
            raise DomainError("curve times must be strictly increasing")
        if self.cyclic and np.max(np.abs(points[-1] - points[0])) > CYCLIC_ENDPOINT_TOL:
            raise DomainError("cyclic curve endpoints differ beyond tolerance")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)

    @property
    def num_samples(self) -> int:
        return len(self.times)

    @property
    def num_parameters(self) -> int:
        return self.points.shape[1]


def curve_from_function(
    f: Callable[[float], np.ndarray | Sequence[float] | float],
    t0: float,
    t1: float,
    num_samples: int,
    cyclic: bool = False,
) -> Curve:
    """Sample theta(t) = f(t) on a uniform grid of ``num_samples`` points."""
    times = np.linspace(t0, t1, num_samples)
    points = np.array([np.atleast_1d(np.asarray(f(t), dtype=float)) for t in times])
    if cyclic:
        points[-1] = points[0]
    return Curve(times=times, points=points, cyclic=cyclic, evaluator=lambda t: np.atleast_1d(np.asarray(f(t), dtype=float)))


@dataclass(frozen=True)
class OperatorFamily:
    """Hermitian operator family I[theta], optionally linear in fixed generators."""

    dim: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    generators: tuple[np.ndarray, ...] | None = None
    generator_consistency_tol: float = 1e-12

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        m = require_hermitian(np.asarray(self.evaluator(theta), dtype=complex), name="family value")
        if m.shape != (self.dim, self.dim):
            raise DomainError(f"family evaluator returned shape {m.shape}, expected ({self.dim}, {self.dim})")
        if self.generators is not None:
            lin = sum(t * g for t, g in zip(theta, self.generators))
            scale = max(float(np.max(np.abs(m))), 1.0)
            if float(np.max(np.abs(m - lin))) > self.generator_consistency_tol * scale:
                raise StructuralError("family evaluator disagrees with its generator expansion")
        return m


def family_from_generators(generators: Sequence[np.ndarray]) -> OperatorFamily:
    """Family I[theta] = sum_i theta^i X_i from constant Hermitian generators."""
    gens = tuple(require_hermitian(np.asarray(g, dtype=complex), name="generator") for g in generators)
    if not gens:
        raise DomainError("at least one generator is required")
    dim = gens[0].shape[0]
    if any(g.shape != (dim, dim) for g in gens):
        raise DomainError("generators must share one dimension")

    def evaluate(theta: np.ndarray) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if len(theta) != len(gens):
            raise DomainError(f"theta has {len(theta)} components, family has {len(gens)} generators")
        return sum(t * g for t, g in zip(theta, gens))

    return OperatorFamily(dim=dim, evaluator=evaluate, generators=gens)


@dataclass(frozen=True)
class FrameField:
    """Per-sample orthonormal frames of one spectral level along a curve."""

    level_index: int
    multiplicity: int
    times: np.ndarray               # (m,)
    frames: np.ndarray              # (m, dim, l)
    eigenvalues: np.ndarray         # (m,) level eigenvalue per sample
    cyclic: bool = False
    cyclic_misalignment: float | None = None  # aligned transport around a loop

    @property
    def num_samples(self) -> int:
        return len(self.times)

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    def frame(self, k: int) -> np.ndarray:
        return self.frames[k]


@dataclass(frozen=True)
class ConnectionSamples:
    """Per-sample E^n, A^n, D^n matrices for one level, plus optional evaluators."""

    level_index: int
    times: np.ndarray            # (m,)
    a: np.ndarray                # (m, l, l) connection matrices
    e: np.ndarray                # (m, l, l) energy matrices
    evaluator_a: Callable[[float], np.ndarray] | None = None
    evaluator_e: Callable[[float], np.ndarray] | None = None

    @property
    def d(self) -> np.ndarray:
        return self.e - self.a

    @property
    def multiplicity(self) -> int:
        return self.a.shape[1]

    def evaluator_d(self) -> Callable[[float], np.ndarray] | None:
        if self.evaluator_a is None or self.evaluator_e is None:
            return None
        ea, ee = self.evaluator_a, self.evaluator_e
        return lambda t: np.asarray(ee(t)) - np.asarray(ea(t))


def _spectra_along(family: OperatorFamily, curve: Curve, degeneracy_tol: float | None) -> list[Spectrum]:
    return [eig_hermitian(family(theta), degeneracy_tol) for theta in curve.points]


def transport_frame(
    family: OperatorFamily,
    curve: Curve,
    level: int,
    gauge: str = "aligned",
    degeneracy_tol: float | None = None,
) -> FrameField:
    """Follow one spectral level along a curve.

    ``gauge="raw"`` keeps the frames exactly as emitted by the
    eigendecomposition at each sample (arbitrary per-sample orientation).
    ``gauge="aligned"`` post-multiplies each frame by the unitary polar factor
    of its overlap with the previous frame (discrete parallel transport),
    leaving the first frame unchanged.
    """
    if gauge not in ("raw", "aligned"):
        raise DomainError(f"unknown gauge {gauge!r}")
    spectra = _spectra_along(family, curve, degeneracy_tol)
    pattern = spectra[0].multiplicities
    if not 0 <= level < len(pattern):
        raise DomainError(f"level {level} out of range; family has {len(pattern)} levels")
    for k, spec in enumerate(spectra):
        if spec.multiplicities != pattern:
            raise LevelCrossingError(
                f"level structure changed at sample {k}: {pattern} -> {spec.multiplicities}"
            )

    mult = pattern[level]
    frames = np.array([spec.level(level).frame for spec in spectra])
    eigenvalues = np.array([spec.level(level).eigenvalue for spec in spectra])

    misalignment = None
    if gauge == "aligned":
        for k in range(1, len(frames)):
            overlap = frames[k - 1].conj().T @ frames[k]
            svals = np.linalg.svd(overlap, compute_uv=False)
            if svals.min() < MIN_OVERLAP_SINGULAR_VALUE:
                raise ResolutionError(
                    f"curve under-resolved between samples {k - 1} and {k}: "
                    f"min overlap singular value {svals.min():.3f}"
                )
            # closest unitary to the overlap; makes the new overlap Hermitian PSD
            frames[k] = frames[k] @ polar_unitary_factor(overlap).conj().T
        if curve.cyclic:
            misalignment = float(np.max(np.abs(frames[-1] - frames[0])))
    elif curve.cyclic:
        # identical endpoint parameters and a deterministic eigensolver make
        # the raw endpoint frames coincide; force exact equality anyway
        frames[-1] = frames[0]

    return FrameField(
        level_index=level,
        multiplicity=mult,
        times=curve.times.copy(),
        frames=frames,
        eigenvalues=eigenvalues,
        cyclic=curve.cyclic,
        cyclic_misalignment=misalignment,
    )


def frame_field_from_function(
    frame_fn: Callable[[float], np.ndarray],
    times: np.ndarray,
    level: int = 0,
    eigenvalue_fn: Callable[[float], float] | None = None,
    cyclic: bool = False,
) -> FrameField:
    """Build a FrameField from an analytic frame map t -> (dim x l) matrix."""
    times = np.asarray(times, dtype=float)
    frames = np.array([np.asarray(frame_fn(t), dtype=complex) for t in times])
    for k, f in enumerate(frames):
        if frame_orthonormality_defect(f) > 1e-10:
            raise StructuralError(f"analytic frame at sample {k} is not orthonormal")
    eigs = np.zeros(len(times)) if eigenvalue_fn is None else np.array([eigenvalue_fn(t) for t in times])
    return FrameField(
        level_index=level,
        multiplicity=frames.shape[2],
        times=times,
        frames=frames,
        eigenvalues=eigs,
        cyclic=cyclic,
    )


def _central_difference(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    """d/dt of a sampled matrix path; central interior, one-sided endpoints."""
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (times[2:] - times[:-2])[:, None, None]
    out[0] = (values[1] - values[0]) / (times[1] - times[0])
    out[-1] = (values[-1] - values[-2]) / (times[-1] - times[-2])
    return out


def connection_matrices(
    frames: FrameField,
    hamiltonian: Callable[[float], np.ndarray],
    evaluator_a: Callable[[float], np.ndarray] | None = None,
) -> ConnectionSamples:
    """Compute E^n, A^n, D^n along a frame field.

    A^n comes from central finite differences of the frames (one-sided at the
    endpoints), hermitized as (M + M^dag)/2; an analytic ``evaluator_a`` may be
    supplied to bypass differentiation downstream.  E^n is exact per sample.
    """
    if frames.num_samples < 3:
        raise ResolutionError("connection matrices need at least 3 samples")
    ts = frames.times
    fdot = _central_difference(frames.frames, ts)
    a = 1j * np.einsum("kia,kib->kab", frames.frames.conj(), fdot)
    a = 0.5 * (a + np.conj(np.swapaxes(a, 1, 2)))
    e = np.empty_like(a)
    for k, t in enumerate(ts):
        h = require_hermitian(np.asarray(hamiltonian(t), dtype=complex), name="H(t)")
        e[k] = frames.frames[k].conj().T @ h @ frames.frames[k]
        e[k] = 0.5 * (e[k] + e[k].conj().T)

    def eval_e(t: float) -> np.ndarray:
        k = int(np.clip(np.searchsorted(ts, t), 0, len(ts) - 1))
        return e[k]

    return ConnectionSamples(
        level_index=frames.level_index,
        times=ts.copy(),
        a=a,
        e=e,
        evaluator_a=evaluator_a,
        evaluator_e=None if evaluator_a is None else eval_e,
    )


def apply_gauge(frames: FrameField, v: Callable[[float], np.ndarray]) -> FrameField:
    """Post-multiply each frame by a unitary l x l gauge v(t)."""
    new = np.empty_like(frames.frames)
    for k, t in enumerate(frames.times):
        vk = require_unitary(np.asarray(v(t), dtype=complex), name=f"gauge at t={t}")
        if vk.shape != (frames.multiplicity, frames.multiplicity):
            raise DomainError("gauge dimension does not match level multiplicity")
        new[k] = frames.frames[k] @ vk
    return FrameField(
        level_index=frames.level_index,
        multiplicity=frames.multiplicity,
        times=frames.times.copy(),
        frames=new,
        eigenvalues=frames.eigenvalues.copy(),
        cyclic=frames.cyclic,
        cyclic_misalignment=None,
    )


def verify_invariant(
    family: OperatorFamily,
    curve: Curve,
    hamiltonian: Callable[[float], np.ndarray],
) -> float:
    """Residual max_t |dI/dt - i[I, H]|, a diagnostic for invariant candidates.

    dI/dt is taken by central differences over interior samples; the exact
    invariant condition would make the residual vanish up to truncation.
    """
    if curve.num_samples < 3:
        raise ResolutionError("invariant check needs at least 3 samples")
    values = np.array([family(theta) for theta in curve.points])
    h0 = np.asarray(hamiltonian(curve.times[0]), dtype=complex)
    if h0.shape != (family.dim, family.dim):
        raise DomainError("hamiltonian dimension does not match the family")
    worst = 0.0
    for k in range(1, curve.num_samples - 1):
        didt = (values[k + 1] - values[k - 1]) / (curve.times[k + 1] - curve.times[k - 1])
        h = np.asarray(hamiltonian(curve.times[k]), dtype=complex)
        comm = values[k] @ h - h @ values[k]
        worst = max(worst, float(np.max(np.abs(didt - 1j * comm))))
    return worst
