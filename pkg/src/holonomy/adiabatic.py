"""Adiabatic-limit machinery: Berry frames, the slow propagator, diagnostics.

A driven system H(t) = H[R(t/tau)] on normalized time s = t/tau approaches,
for large tau, the adiabatic propagator

    U0(t) = sum_n sum_ab u0^n_ab(t) |n,a;t><n,b;0|,
    u0^n  = exp(i delta_n(t)) Gamma0^n(t),
    delta_n(t) = -integral_0^t E_n dt',

where Gamma0^n is the holonomy of the level's Berry connection.  U0 is
assembled from whatever smooth frame field is available (parallel-transported
eigenframes by default, analytic frames when the scenario provides them); as
an operator it is independent of that gauge choice.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, LevelCrossingError, ResolutionError
from .frames import (
    ConnectionSamples,
    Curve,
    FrameField,
    OperatorFamily,
    connection_matrices,
    transport_frame,
)
from .linalg import eig_hermitian
from .phase import PhaseReport, noncyclic_phase, overlap_matrix
from .propagate import MatrixOdeProblem, PropagatorTrace, assemble_evolution, holonomy, propagate


@dataclass(frozen=True)
class AdiabaticScenario:
    """Hamiltonian family along a normalized-time curve, traversed in duration tau."""

    family: OperatorFamily
    curve: Curve                      # parameterized by s in [0, 1]
    tau: float
    levels: tuple[int, ...] | None = None  # None: all levels
    # optional analytic hooks (index by level)
    frame_fn: Callable[[int, np.ndarray], FrameField] | None = None
    connection_fn: Callable[[int], Callable[[float], np.ndarray]] | None = None
    energy_fn: Callable[[int], Callable[[float], float]] | None = None

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError("tau must be positive")
        if abs(self.curve.times[0]) > 1e-12 or abs(self.curve.times[-1] - 1.0) > 1e-12:
            raise DomainError("scenario curve must be parameterized by s in [0, 1]")

    def with_tau(self, tau: float) -> "AdiabaticScenario":
        return AdiabaticScenario(
            family=self.family,
            curve=self.curve,
            tau=tau,
            levels=self.levels,
            frame_fn=self.frame_fn,
            connection_fn=self.connection_fn,
            energy_fn=self.energy_fn,
        )

    def s_grid(self, num_samples: int) -> np.ndarray:
        return np.linspace(0.0, 1.0, num_samples)

    def theta_at(self, s: float) -> np.ndarray:
        if self.curve.evaluator is not None:
            return np.atleast_1d(np.asarray(self.curve.evaluator(s), dtype=float))
        pts, ts = self.curve.points, self.curve.times
        k = int(np.clip(np.searchsorted(ts, s) - 1, 0, len(ts) - 2))
        w = (s - ts[k]) / (ts[k + 1] - ts[k])
        return (1 - w) * pts[k] + w * pts[k + 1]

    def hamiltonian_at(self, s: float) -> np.ndarray:
        return self.family(self.theta_at(s))

    def level_indices(self, num_levels: int) -> tuple[int, ...]:
        if self.levels is None:
            return tuple(range(num_levels))
        if any(not 0 <= l < num_levels for l in self.levels):
            raise DomainError(f"scenario levels {self.levels} out of range for {num_levels} levels")
        return self.levels

    def sampled_curve(self, num_samples: int) -> Curve:
        ss = self.s_grid(num_samples)
        pts = np.array([self.theta_at(s) for s in ss])
        return Curve(times=ss, points=pts, cyclic=False, evaluator=self.curve.evaluator)


def _level_frames(scenario: AdiabaticScenario, level: int, num_samples: int) -> FrameField:
    if scenario.frame_fn is not None:
        return scenario.frame_fn(level, scenario.s_grid(num_samples))
    return transport_frame(scenario.family, scenario.sampled_curve(num_samples), level, gauge="aligned")


def _level_connection(scenario: AdiabaticScenario, frames: FrameField) -> ConnectionSamples:
    evaluator = None
    if scenario.connection_fn is not None:
        evaluator = scenario.connection_fn(frames.level_index)
    return connection_matrices(frames, lambda s: scenario.hamiltonian_at(s), evaluator_a=evaluator)


def _cumulative_trapezoid(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def _dynamical_phases(scenario: AdiabaticScenario, frames: FrameField) -> np.ndarray:
    """delta_n(s_k) = -tau * integral_0^{s_k} E_n(s') ds'."""
    ss = frames.times
    if scenario.energy_fn is not None:
        en = scenario.energy_fn(frames.level_index)
        energies = np.array([en(s) for s in ss])
    else:
        energies = frames.eigenvalues
    return -scenario.tau * _cumulative_trapezoid(energies, ss)


def adiabatic_propagator(
    scenario: AdiabaticScenario,
    num_samples: int = 801,
    method: str = "magnus4",
) -> PropagatorTrace:
    """Assemble U0(t) on the grid t = tau * s."""
    spectrum0 = eig_hermitian(scenario.hamiltonian_at(0.0))
    levels = scenario.level_indices(len(spectrum0.levels))
    if scenario.levels is None:
        pass
    elif sum(spectrum0.level(l).multiplicity for l in levels) != scenario.family.dim:
        raise DomainError("adiabatic propagator needs the levels to cover the full dimension")

    frame_fields: list[FrameField] = []
    traces: list[PropagatorTrace] = []
    for level in levels:
        frames = _level_frames(scenario, level, num_samples)
        conn = _level_connection(scenario, frames)
        gamma = holonomy(conn, method=method)
        delta = _dynamical_phases(scenario, frames)
        u = gamma.matrices * np.exp(1j * delta)[:, None, None]
        traces.append(PropagatorTrace(times=gamma.times, matrices=u, method=method, max_step_norm=gamma.max_step_norm))
        frame_fields.append(frames)
    trace_s = assemble_evolution(frame_fields, traces)
    return PropagatorTrace(
        times=scenario.tau * trace_s.times,
        matrices=trace_s.matrices,
        method=method,
        max_step_norm=trace_s.max_step_norm,
    )


@dataclass(frozen=True)
class AdiabaticityReport:
    """Nonadiabatic couplings versus spectral gaps along the drive."""

    times: np.ndarray                       # physical times tau * s
    couplings: tuple[dict, ...]             # per sample: {(m, n): l_m x l_n matrix}
    min_gaps: np.ndarray                    # per sample: smallest |E_n - E_m|
    max_coupling: float
    summary_ratio: float                    # max over samples of max|coupling| / min gap


def adiabaticity_report(scenario: AdiabaticScenario, num_samples: int = 201) -> AdiabaticityReport:
    """Couplings i <m,b| dH/dt |n,a> / (E_n - E_m) and the gap they compete with."""
    if num_samples < 3:
        raise ResolutionError("adiabaticity report needs at least 3 samples")
    ss = scenario.s_grid(num_samples)
    hams = np.array([scenario.hamiltonian_at(s) for s in ss])
    spectra = [eig_hermitian(h) for h in hams]
    pattern = spectra[0].multiplicities
    for k, spec in enumerate(spectra):
        if spec.multiplicities != pattern:
            raise LevelCrossingError(f"level structure changed at sample {k}")

    dt = scenario.tau * np.gradient(ss)
    dh = np.gradient(hams, axis=0) / dt[:, None, None]

    couplings: list[dict] = []
    min_gaps = np.empty(num_samples)
    worst = 0.0
    ratio = 0.0
    for k, spec in enumerate(spectra):
        entry: dict = {}
        gaps = []
        local_max = 0.0
        for m in range(len(spec.levels)):
            for n in range(len(spec.levels)):
                if m == n:
                    continue
                gap = spec.level(n).eigenvalue - spec.level(m).eigenvalue
                gaps.append(abs(gap))
                if abs(gap) < 1e-14:
                    raise LevelCrossingError(f"vanishing gap between levels {m} and {n} at sample {k}")
                fm = spec.level(m).frame
                fn = spec.level(n).frame
                coup = 1j * (fm.conj().T @ dh[k] @ fn) / gap
                entry[(m, n)] = coup
                local_max = max(local_max, float(np.max(np.abs(coup))))
        couplings.append(entry)
        min_gaps[k] = min(gaps)
        worst = max(worst, local_max)
        ratio = max(ratio, local_max / min_gaps[k])
    return AdiabaticityReport(
        times=scenario.tau * ss,
        couplings=tuple(couplings),
        min_gaps=min_gaps,
        max_coupling=worst,
        summary_ratio=float(ratio),
    )


def full_propagator(
    scenario: AdiabaticScenario,
    steps_per_time: float = 20.0,
    min_steps: int = 400,
    method: str = "magnus4",
) -> np.ndarray:
    """U(tau): integrate i dU/dt = H(t) U over the full drive."""
    steps = max(min_steps, int(np.ceil(scenario.tau * steps_per_time)))
    ts = np.linspace(0.0, scenario.tau, steps + 1)
    gen = lambda t: scenario.hamiltonian_at(t / scenario.tau)
    dim = scenario.family.dim
    problem = MatrixOdeProblem(generator=gen, initial=np.eye(dim, dtype=complex), times=ts)
    return propagate(problem, method).final


def convergence_study(
    scenario: AdiabaticScenario,
    tau_list: Sequence[float],
    num_samples: int = 801,
    steps_per_time: float = 20.0,
    method: str = "magnus4",
) -> list[tuple[float, float]]:
    """Defects |U(tau) - U0(tau)|_max along an increasing tau ladder."""
    taus = list(tau_list)
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise DomainError("tau_list must be increasing")
    out = []
    for tau in taus:
        scen = scenario.with_tau(tau)
        u_full = full_propagator(scen, steps_per_time=steps_per_time, method=method)
        u0 = adiabatic_propagator(scen, num_samples=num_samples, method=method).final
        out.append((float(tau), float(np.max(np.abs(u_full - u0)))))
    return out


def adiabatic_noncyclic_phase(
    scenario: AdiabaticScenario,
    level: int,
    t: float | None = None,
    num_samples: int = 801,
    method: str = "magnus4",
) -> PhaseReport:
    """Noncyclic phase report of one level in the adiabatic limit at time t.

    Built from the scenario's frame field: w from the endpoint frames, Gamma
    from the holonomy of the level connection, and the dynamical phase from
    the energy quadrature.
    """
    if t is None:
        t = scenario.tau
    if not 0 <= t <= scenario.tau + 1e-12:
        raise DomainError("t must lie within the scenario duration")

    frames = _level_frames(scenario, level, num_samples)
    conn = _level_connection(scenario, frames)
    gamma_trace = holonomy(conn, method=method)
    delta = _dynamical_phases(scenario, frames)

    s_target = t / scenario.tau
    k = int(np.argmin(np.abs(frames.times - s_target)))
    w = overlap_matrix(
        frames.frames[0],
        frames.frames[k],
        level_index=level,
        theta_start=scenario.theta_at(0.0),
        theta_end=scenario.theta_at(frames.times[k]),
    )
    return noncyclic_phase(w, gamma_trace.matrices[k], dynamical_phase=float(delta[k]))
