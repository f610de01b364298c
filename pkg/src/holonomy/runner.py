"""Run pipelines behind the CLI: phase traces, sweeps, ladders, gauge tests.

The quadrupole pipeline follows the closed-form oracle route: the oracle
connection is integrated numerically, endpoint overlaps come from the
closed-form overlap matrices, and deviations from the closed-form holonomy
and trace are reported as diagnostics.  Custom operator families run the
generic machinery (eigenframe transport, finite-difference connections).
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import quadrupole as qd
from .adiabatic import AdiabaticScenario, adiabaticity_report, convergence_study
from .config import ScenarioConfig
from .errors import ConfigError
from .frames import Curve, OperatorFamily, connection_matrices, transport_frame
from .gauges import random_smooth_gauge, transform_connection
from .io import read_curve_csv, read_generators_json
from .linalg import unitarity_defect
from .phase import (
    OverlapMatrix,
    PhaseReport,
    noncyclic_phase,
    unwrap_nearest_branch,
    wrap_angle,
)
from .propagate import holonomy


@dataclass(frozen=True)
class LevelTrace:
    """Per-sample phase data of one level along the run."""

    label: int                      # 1-based level label
    multiplicity: int
    times: np.ndarray
    pi: np.ndarray                  # complex, per sample
    unitarity_defects: np.ndarray
    phase_angles: np.ndarray | None = None       # Abelian, wrapped
    phase_unwrapped: np.ndarray | None = None    # Abelian, cumulative
    visibilities: np.ndarray | None = None
    report: PhaseReport | None = None            # endpoint report
    oracle_gamma_deviation: float | None = None
    oracle_trace_deviation: float | None = None


@dataclass(frozen=True)
class RunResult:
    system: str
    levels: tuple[LevelTrace, ...]
    phis: np.ndarray | None = None      # quadrupole azimuths per sample
    adiabaticity_ratio: float | None = None
    max_step_norm: float = 0.0
    wall_time_s: float = 0.0

    @property
    def max_unitarity_defect(self) -> float:
        return max(float(np.max(lv.unitarity_defects)) for lv in self.levels)

    def summary(self, config_echo: dict | None = None) -> dict:
        levels = {}
        for lv in self.levels:
            rec = lv.report.to_record() if lv.report is not None else {}
            rec["level"] = lv.label
            rec["max_unitarity_defect"] = float(np.max(lv.unitarity_defects))
            if lv.oracle_gamma_deviation is not None:
                rec["oracle_gamma_deviation"] = lv.oracle_gamma_deviation
            if lv.oracle_trace_deviation is not None:
                rec["oracle_trace_deviation"] = lv.oracle_trace_deviation
            levels[str(lv.label)] = rec
        out = {
            "system": self.system,
            "levels": levels,
            "diagnostics": {
                "max_unitarity_defect": self.max_unitarity_defect,
                "max_step_norm": self.max_step_norm,
            },
            "wall_time_s": self.wall_time_s,
        }
        if self.adiabaticity_ratio is not None:
            out["diagnostics"]["adiabaticity_ratio"] = self.adiabaticity_ratio
        if config_echo is not None:
            out["config"] = config_echo
        return out


def _quadrupole_level_labels(config_levels: tuple[int, ...] | None) -> tuple[int, ...]:
    if config_levels is None:
        return (1, 2)
    if any(l not in (1, 2) for l in config_levels):
        raise ConfigError("quadrupole levels are labeled 1 and 2")
    return config_levels


def _zero_length_run(
    scenario: qd.PrecessionScenario,
    labels: tuple[int, ...],
    start: float,
) -> RunResult:
    """phi_final = phi0: a single sample with the identity phase data."""
    out = []
    for label in labels:
        mult = 1 if label == 1 else 2
        report = noncyclic_phase(
            OverlapMatrix(level_index=label - 1, matrix=np.eye(mult, dtype=complex)),
            np.eye(mult, dtype=complex),
            dynamical_phase=0.0,
        )
        out.append(
            LevelTrace(
                label=label,
                multiplicity=mult,
                times=np.zeros(1),
                pi=np.array([complex(mult)]),
                unitarity_defects=np.zeros(1),
                phase_angles=np.zeros(1) if mult == 1 else None,
                phase_unwrapped=np.zeros(1) if mult == 1 else None,
                visibilities=np.ones(1) if mult == 1 else None,
                report=report,
                oracle_gamma_deviation=0.0 if label == 2 else None,
                oracle_trace_deviation=0.0 if label == 2 else None,
            )
        )
    return RunResult(
        system="quadrupole",
        levels=tuple(out),
        phis=np.array([scenario.phi0]),
        adiabaticity_ratio=None,
        max_step_norm=0.0,
        wall_time_s=time.perf_counter() - start,
    )


def run_quadrupole_phase(
    scenario: qd.PrecessionScenario,
    grid: int = 800,
    method: str = "magnus4",
    levels: tuple[int, ...] | None = None,
    with_adiabaticity: bool = True,
) -> RunResult:
    start = time.perf_counter()
    labels = _quadrupole_level_labels(levels)
    if scenario.duration == 0:
        return _zero_length_run(scenario, labels, start)
    num_samples = grid + 1
    ts = scenario.times(num_samples)
    phis = scenario.phi0 + scenario.omega * ts
    out: list[LevelTrace] = []
    max_step = 0.0

    for label in labels:
        if label == 1:
            conn = qd.level1_connection_samples(scenario, num_samples)
            trace = holonomy(conn, method=method)
            gam = trace.matrices[:, 0, 0]
            w = np.array([qd.w1_closed(scenario.theta, scenario.phi0, p) for p in phis])
            pi = w * gam
            defects = np.abs(np.abs(gam) ** 2 - 1.0)
            angles = np.array([wrap_angle(a) for a in np.angle(pi)])
            vis = np.abs(w)
            report = noncyclic_phase(
                OverlapMatrix(level_index=0, matrix=np.array([[w[-1]]])),
                np.array([[gam[-1]]]),
                dynamical_phase=0.0,
            )
            out.append(
                LevelTrace(
                    label=1,
                    multiplicity=1,
                    times=ts,
                    pi=pi,
                    unitarity_defects=defects,
                    phase_angles=angles,
                    phase_unwrapped=unwrap_nearest_branch(angles),
                    visibilities=vis,
                    report=report,
                )
            )
        else:
            conn = qd.level2_connection_samples(scenario, num_samples)
            trace = holonomy(conn, method=method)
            pis = np.empty(num_samples, dtype=complex)
            defects = np.empty(num_samples)
            gdev = 0.0
            pdev = 0.0
            for k, p in enumerate(phis):
                w2 = qd.w2_closed(scenario.theta, scenario.phi0, p)
                g = trace.matrices[k]
                pis[k] = np.trace(w2 @ g)
                defects[k] = unitarity_defect(g)
                gdev = max(gdev, float(np.max(np.abs(g - qd.gamma2_closed(scenario.theta, scenario.phi0, p)))))
                pdev = max(pdev, abs(pis[k] - qd.pi2_closed(scenario.theta, scenario.phi0, p)))
            e2 = scenario.field_at(0.0).energy_split
            report = noncyclic_phase(
                OverlapMatrix(level_index=1, matrix=qd.w2_closed(scenario.theta, scenario.phi0, phis[-1])),
                trace.final,
                dynamical_phase=-e2 * ts[-1],
            )
            out.append(
                LevelTrace(
                    label=2,
                    multiplicity=2,
                    times=ts,
                    pi=pis,
                    unitarity_defects=defects,
                    report=report,
                    oracle_gamma_deviation=gdev,
                    oracle_trace_deviation=pdev,
                )
            )
        max_step = max(max_step, trace.max_step_norm)

    ratio = None
    if with_adiabaticity:
        ratio = adiabaticity_report(qd.adiabatic_scenario(scenario), num_samples=101).summary_ratio
    return RunResult(
        system="quadrupole",
        levels=tuple(out),
        phis=phis,
        adiabaticity_ratio=ratio,
        max_step_norm=max_step,
        wall_time_s=time.perf_counter() - start,
    )


def _custom_family(config: ScenarioConfig) -> tuple[OperatorFamily, Curve]:
    from .frames import family_from_generators

    gens = read_generators_json(config.generators_file)
    family = family_from_generators(gens)
    curve = read_curve_csv(config.curve_file, cyclic=config.cyclic)
    if curve.num_parameters != len(gens):
        raise ConfigError(
            f"curve has {curve.num_parameters} parameter columns, family has {len(gens)} generators"
        )
    return family, curve


def _adiabaticity_ratio_for_curve(family: OperatorFamily, curve: Curve) -> float:
    t0, t1 = curve.times[0], curve.times[-1]
    ss = (curve.times - t0) / (t1 - t0)
    scen = AdiabaticScenario(
        family=family,
        curve=Curve(times=ss, points=curve.points, cyclic=False),
        tau=float(t1 - t0),
    )
    return adiabaticity_report(scen, num_samples=min(201, curve.num_samples)).summary_ratio


def run_custom_phase(
    config: ScenarioConfig,
    method: str | None = None,
) -> RunResult:
    start = time.perf_counter()
    family, curve = _custom_family(config)
    method = method or config.method
    ham = lambda t: family(curve.points[int(np.argmin(np.abs(curve.times - t)))])

    from .linalg import eig_hermitian

    spectrum0 = eig_hermitian(family(curve.points[0]))
    num_levels = len(spectrum0.levels)
    labels = tuple(range(1, num_levels + 1)) if config.levels is None else config.levels
    if any(not 1 <= l <= num_levels for l in labels):
        raise ConfigError(f"levels {labels} out of range; family has {num_levels} levels")

    out: list[LevelTrace] = []
    max_step = 0.0
    for label in labels:
        level = label - 1
        frames = transport_frame(family, curve, level, gauge="aligned")
        conn = connection_matrices(frames, ham)
        trace = holonomy(conn, method=method)
        m = frames.num_samples
        pis = np.empty(m, dtype=complex)
        defects = np.empty(m)
        for k in range(m):
            w = frames.frames[0].conj().T @ frames.frames[k]
            pis[k] = np.trace(w @ trace.matrices[k])
            defects[k] = unitarity_defect(trace.matrices[k])
        w_final = OverlapMatrix(
            level_index=level,
            matrix=frames.frames[0].conj().T @ frames.frames[-1],
            theta_start=curve.points[0],
            theta_end=curve.points[-1],
        )
        dyn = None
        angles = vis = unwrapped = None
        if frames.multiplicity == 1:
            energies = np.real(conn.e[:, 0, 0])
            dyn = float(-np.sum(0.5 * (energies[1:] + energies[:-1]) * np.diff(frames.times)))
            angles = np.array([wrap_angle(a) for a in np.angle(pis)])
            unwrapped = unwrap_nearest_branch(angles)
            vis = np.abs(np.einsum("i,ki->k", frames.frames[0][:, 0].conj(), frames.frames[:, :, 0]))
        report = noncyclic_phase(w_final, trace.final, dynamical_phase=dyn)
        out.append(
            LevelTrace(
                label=label,
                multiplicity=frames.multiplicity,
                times=frames.times,
                pi=pis,
                unitarity_defects=defects,
                phase_angles=angles,
                phase_unwrapped=unwrapped,
                visibilities=vis,
                report=report,
            )
        )
        max_step = max(max_step, trace.max_step_norm)

    ratio = _adiabaticity_ratio_for_curve(family, curve)
    return RunResult(
        system="custom-family",
        levels=tuple(out),
        adiabaticity_ratio=ratio,
        max_step_norm=max_step,
        wall_time_s=time.perf_counter() - start,
    )


def run_phase(config: ScenarioConfig) -> RunResult:
    if config.system == "quadrupole":
        return run_quadrupole_phase(
            config.precession_scenario(),
            grid=config.grid,
            method=config.method,
            levels=config.levels,
        )
    return run_custom_phase(config)


SWEEP_PARAMETERS = ("theta", "phi_f", "omega", "tau")


def run_sweep(
    config: ScenarioConfig,
    parameter: str,
    start: float,
    stop: float,
    count: int,
) -> list[tuple[float, RunResult]]:
    """Evaluate the phase pipeline at ``count`` sweep points, in input order."""
    if config.system != "quadrupole":
        raise ConfigError("sweeps are defined for the quadrupole system")
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMETERS}")
    if count < 1:
        raise ConfigError("sweep count must be >= 1")
    values = np.linspace(start, stop, count) if count > 1 else np.array([start])
    base = config.precession_scenario()

    def scenario_at(value: float) -> qd.PrecessionScenario:
        kw = dict(
            theta=base.theta, phi0=base.phi0, omega=base.omega,
            phi_final=base.phi_final, coupling=base.coupling, rho=base.rho,
        )
        if parameter == "theta":
            kw["theta"] = value
        elif parameter == "phi_f":
            kw["phi_final"] = value
        elif parameter == "omega":
            kw["omega"] = value
        else:  # tau: fix the duration, keep omega
            kw.pop("phi_final")
            kw["duration"] = value
        return qd.PrecessionScenario(**kw)

    def evaluate(value: float) -> tuple[float, RunResult]:
        result = run_quadrupole_phase(
            scenario_at(float(value)),
            grid=config.grid,
            method=config.method,
            levels=config.levels,
            with_adiabaticity=False,
        )
        return float(value), result

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(evaluate, values))
    return [evaluate(v) for v in values]


def run_adiabatic(config: ScenarioConfig, tau_list: list[float]) -> list[tuple[float, float, float]]:
    """(tau, defect, adiabaticity ratio) rows for a tau ladder."""
    if config.system == "quadrupole":
        scen = qd.adiabatic_scenario(config.precession_scenario())
    else:
        family, curve = _custom_family(config)
        t0, t1 = curve.times[0], curve.times[-1]
        scen = AdiabaticScenario(
            family=family,
            curve=Curve(times=(curve.times - t0) / (t1 - t0), points=curve.points, cyclic=False),
            tau=float(t1 - t0),
        )

    defects = convergence_study(scen, tau_list, method=config.method)

    def ratio_at(tau: float) -> float:
        return adiabaticity_report(scen.with_tau(tau), num_samples=101).summary_ratio

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            ratios = list(pool.map(ratio_at, [tau for tau, _ in defects]))
    else:
        ratios = [ratio_at(tau) for tau, _ in defects]
    return [(tau, defect, ratio) for (tau, defect), ratio in zip(defects, ratios)]


@dataclass(frozen=True)
class GaugeTestResult:
    deviations_pi: np.ndarray
    deviations_conjugation: np.ndarray
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(
            np.all(self.deviations_pi <= self.tolerance)
            and np.all(self.deviations_conjugation <= self.tolerance)
        )


def run_gauge_test(
    config: ScenarioConfig,
    count: int | None = None,
    tolerance: float = 1e-9,
) -> GaugeTestResult:
    """Seeded random smooth gauges on the quadrupole degenerate level.

    Each gauge transforms the connection by the exact gauge law and the
    overlap by its endpoint values; the trace must be invariant and the
    noncyclic phase factor conjugated by the initial gauge value.  The
    integrations run on at least 1600 steps so the integrator error stays
    well below the invariance tolerance.
    """
    if config.system != "quadrupole":
        raise ConfigError("the gauge test is defined for the quadrupole system")
    scenario = config.precession_scenario()
    count = config.gauge_count if count is None else count
    num_samples = max(config.grid, 1600) + 1

    conn = qd.level2_connection_samples(scenario, num_samples)
    trace = holonomy(conn, method=config.method)
    t_final = float(conn.times[-1])
    w_base = qd.w2_closed(scenario.theta, scenario.phi0, scenario.phi_at(t_final))
    gamma_base = trace.final
    pi_base = np.trace(w_base @ gamma_base)
    gcheck_base = w_base @ gamma_base

    seeds = np.random.SeedSequence(config.seed).spawn(count)
    dpi = np.empty(count)
    dconj = np.empty(count)
    for i, seq in enumerate(seeds):
        gauge = random_smooth_gauge(2, 0.0, t_final, seed=seq)
        conn_t = transform_connection(conn, gauge)
        trace_t = holonomy(conn_t, method=config.method)
        v0 = gauge(0.0)
        vt = gauge(t_final)
        w_t = v0.conj().T @ w_base @ vt
        gamma_t = trace_t.final
        dpi[i] = abs(np.trace(w_t @ gamma_t) - pi_base)
        dconj[i] = float(np.max(np.abs(w_t @ gamma_t - v0.conj().T @ gcheck_base @ v0)))
    return GaugeTestResult(deviations_pi=dpi, deviations_conjugation=dconj, tolerance=tolerance)


@dataclass(frozen=True)
class OracleCheck:
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance


def run_oracle_verify(config: ScenarioConfig, num_random: int = 1000) -> list[OracleCheck]:
    """Cross-checks of the closed-form quadrupole suite against the integrators.

    Covers: integrated holonomy vs closed form, brute-force overlaps vs the
    closed-form overlap matrix (both printed forms of its last entry), the
    trace identity, the coefficient identities, and the rotating-frame
    product.  Deviations are maxima over the run grid or the random draws.
    """
    if config.system != "quadrupole":
        raise ConfigError("oracle verification is defined for the quadrupole system")
    scenario = config.precession_scenario()
    checks: list[OracleCheck] = []
    rng = np.random.default_rng(config.seed)

    # 1. integrated holonomy against the closed form
    conn = qd.level2_connection_samples(scenario, config.grid + 1)
    trace = holonomy(conn, method=config.method)
    gdev = 0.0
    for k, t in enumerate(trace.times):
        ref = qd.gamma2_closed(scenario.theta, scenario.phi0, scenario.phi_at(t))
        gdev = max(gdev, float(np.max(np.abs(trace.matrices[k] - ref))))
    checks.append(OracleCheck("holonomy_ode_vs_closed_form", gdev, 1e-8))

    udev = max(unitarity_defect(trace.matrices[k]) for k in range(trace.num_samples))
    checks.append(OracleCheck("holonomy_unitarity", float(udev), 1e-10))

    # 2. brute-force eigenvector overlaps against the closed form
    wdev = 0.0
    w22dev = 0.0
    for _ in range(num_random):
        theta = rng.uniform(0.05, np.pi - 0.05)
        phi0 = rng.uniform(-2 * np.pi, 2 * np.pi)
        phi = phi0 + rng.uniform(-4 * np.pi, 4 * np.pi)
        zeta = np.cos(theta) / np.sin(theta)
        fa = qd.eigenframe(qd.FieldPoint(1.0, phi0, zeta)).level(1).frame
        fb = qd.eigenframe(qd.FieldPoint(1.0, phi, zeta)).level(1).frame
        brute = fa.conj().T @ fb
        closed = qd.w2_closed(theta, phi0, phi)
        wdev = max(wdev, float(np.max(np.abs(brute - closed))))
        k = qd.connection_coeffs(theta)
        dphi = phi - phi0
        alt_w22 = 1 + (k.sigma + 0.75 * k.mu + 0.5) * (1 - np.cos(dphi)) + 1j * k.mu * np.sin(dphi)
        w22dev = max(w22dev, abs(closed[1, 1] - alt_w22))
    checks.append(OracleCheck("overlap_bruteforce_vs_closed_form", wdev, 1e-10))
    checks.append(OracleCheck("overlap_last_entry_dual_forms", w22dev, 1e-12))

    # 3. trace identity
    tdev = 0.0
    for _ in range(num_random):
        theta = rng.uniform(0.05, np.pi - 0.05)
        phi0 = rng.uniform(-2 * np.pi, 2 * np.pi)
        phi = phi0 + rng.uniform(-4 * np.pi, 4 * np.pi)
        lhs = qd.pi2_closed(theta, phi0, phi)
        rhs = np.trace(qd.w2_closed(theta, phi0, phi) @ qd.gamma2_closed(theta, phi0, phi))
        tdev = max(tdev, abs(lhs - rhs))
    checks.append(OracleCheck("trace_formula_vs_matrix_product", tdev, 1e-9))

    # 4. coefficient identities
    cdev = 0.0
    for _ in range(num_random):
        theta = rng.uniform(0.05, np.pi - 0.05)
        k = qd.connection_coeffs(theta)
        c = k.cos_theta
        cdev = max(cdev, abs(k.sigma + 0.75 * k.mu + 0.5 + (1 + c**4) / (1 + c**2)))
        delta_poly = np.sqrt(1 + 4 * c**2 * (4 + 8 * c**2 + 7 * c**4 + c**6)) / (2 * (1 + c**2))
        cdev = max(cdev, abs(k.delta - delta_poly))
    checks.append(OracleCheck("coefficient_identities", cdev, 1e-12))

    # 5. rotating-frame product
    rdev = 0.0
    _, reconstruct = qd.rotating_frame(scenario.theta)
    for t in np.linspace(0.0, scenario.duration, 33):
        phi = scenario.phi_at(t)
        rdev = max(
            rdev,
            float(np.max(np.abs(reconstruct(scenario.phi0, phi) - qd.gamma2_closed(scenario.theta, scenario.phi0, phi)))),
        )
    checks.append(OracleCheck("rotating_frame_vs_closed_form", rdev, 1e-10))
    return checks
