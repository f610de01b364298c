import numpy as np
import pytest

from holonomy.errors import DomainError, UndefinedPhaseError
from holonomy.linalg import expm_skew
from holonomy.phase import (
    OverlapMatrix,
    abelian_phase,
    diagonal_decomposition,
    noncyclic_phase,
    overlap_matrix,
    unwrap_nearest_branch,
    wrap_angle,
)
from holonomy import quadrupole as qd

TYCKO = qd.TYCKO_THETA


def random_unitary(rng, n):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return expm_skew(0.5 * (g + g.conj().T), 1.0)


def random_frame(rng, dim, l):
    m = rng.normal(size=(dim, l)) + 1j * rng.normal(size=(dim, l))
    q, _ = np.linalg.qr(m)
    return q[:, :l]


class TestOverlapMatrix:
    def test_identical_frames_identity(self):
        rng = np.random.default_rng(1)
        f = random_frame(rng, 5, 2)
        w = overlap_matrix(f, f)
        assert np.max(np.abs(w.matrix - np.eye(2))) <= 1e-14

    def test_quadrupole_level2_closed_form(self):
        for theta, phi0, phi in [(TYCKO, 0.0, 2.1), (1.1, 0.4, 5.0), (2.0, -1.0, 1.0)]:
            zeta = np.cos(theta) / np.sin(theta)
            fa = qd.eigenframe(qd.FieldPoint(1.0, phi0, zeta)).level(1).frame
            fb = qd.eigenframe(qd.FieldPoint(1.0, phi, zeta)).level(1).frame
            w = overlap_matrix(fa, fb)
            assert np.max(np.abs(w.matrix - qd.w2_closed(theta, phi0, phi))) <= 1e-12

    def test_quadrupole_level1_closed_form(self):
        for theta, phi0, phi in [(TYCKO, 0.0, 1.0), (0.8, 2.0, 2.5)]:
            zeta = np.cos(theta) / np.sin(theta)
            fa = qd.eigenframe(qd.FieldPoint(1.0, phi0, zeta)).level(0).frame
            fb = qd.eigenframe(qd.FieldPoint(1.0, phi, zeta)).level(0).frame
            w = overlap_matrix(fa, fb)
            assert abs(w.matrix[0, 0] - qd.w1_closed(theta, phi0, phi)) <= 1e-12

    def test_singular_values_bounded(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            w = overlap_matrix(random_frame(rng, 6, 3), random_frame(rng, 6, 3))
            assert np.max(np.linalg.svd(w.matrix, compute_uv=False)) <= 1 + 1e-10

    def test_shape_mismatch_rejected(self):
        rng = np.random.default_rng(3)
        with pytest.raises(DomainError):
            overlap_matrix(random_frame(rng, 4, 2), random_frame(rng, 4, 3))

    def test_expansion_rejected(self):
        with pytest.raises(DomainError):
            OverlapMatrix(level_index=0, matrix=1.5 * np.eye(2))


class TestNoncyclicPhase:
    def test_cyclic_reduces_to_holonomy(self):
        gamma = qd.gamma2_closed(TYCKO, 0.0, 2 * np.pi)
        w = OverlapMatrix(level_index=1, matrix=np.eye(2, dtype=complex))
        report = noncyclic_phase(w, gamma)
        assert np.max(np.abs(report.gamma_check - gamma)) == 0.0
        assert report.pi == pytest.approx(complex(np.trace(gamma)))

    def test_quadrupole_endpoint_identity(self):
        w = OverlapMatrix(level_index=1, matrix=qd.w2_closed(TYCKO, 0.3, 0.3))
        report = noncyclic_phase(w, qd.gamma2_closed(TYCKO, 0.3, 0.3))
        assert report.pi == pytest.approx(2.0, abs=1e-12)

    def test_quadrupole_cyclic_value(self):
        w = OverlapMatrix(level_index=1, matrix=qd.w2_closed(TYCKO, 0.0, 2 * np.pi))
        report = noncyclic_phase(w, qd.gamma2_closed(TYCKO, 0.0, 2 * np.pi))
        assert report.pi == pytest.approx(qd.pi2_cyclic(TYCKO), abs=1e-12)
        expected = sorted(wrap_angle(p) for p in qd.cyclic_eigenphases(TYCKO))
        got = sorted(np.angle(report.eigenvalues))
        assert got == pytest.approx(expected, abs=1e-12)

    def test_trace_bound(self):
        rng = np.random.default_rng(4)
        for l in (1, 2, 3):
            for _ in range(20):
                w = overlap_matrix(random_frame(rng, 5, l), random_frame(rng, 5, l))
                report = noncyclic_phase(w, random_unitary(rng, l))
                assert abs(report.pi) <= l + 1e-10

    def test_eigenvalue_ordering_deterministic(self):
        rng = np.random.default_rng(5)
        w = overlap_matrix(random_frame(rng, 4, 2), random_frame(rng, 4, 2))
        g = random_unitary(rng, 2)
        a = noncyclic_phase(w, g).eigenvalues
        b = noncyclic_phase(w, g).eigenvalues
        assert np.array_equal(a, b)
        assert abs(a[0]) >= abs(a[1]) - 1e-15

    def test_shape_mismatch_rejected(self):
        w = OverlapMatrix(level_index=0, matrix=np.eye(2, dtype=complex))
        with pytest.raises(DomainError):
            noncyclic_phase(w, np.eye(3, dtype=complex))


class TestAbelianPhase:
    def test_unit_overlap(self):
        angle, visibility = abelian_phase(1.0, np.exp(1j * np.pi / 3))
        assert angle == pytest.approx(np.pi / 3, abs=1e-15)
        assert visibility == 1.0

    def test_quadrupole_level1_quarter_turn(self):
        # zeta = 1, dphi = pi/2: overlap 1/2, holonomy angle pi/2
        theta = np.arccos(1 / np.sqrt(2))
        w = qd.w1_closed(theta, 0.0, np.pi / 2)
        angle, visibility = abelian_phase(w, qd.gamma1_closed(0.0, np.pi / 2))
        assert visibility == pytest.approx(0.5, abs=1e-10)
        assert angle == pytest.approx(np.pi / 2, abs=1e-10)

    def test_orthogonal_endpoints_undefined(self):
        with pytest.raises(UndefinedPhaseError):
            abelian_phase(0.0, 1.0)

    def test_angle_sum_decomposition(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            w = rng.uniform(0.1, 1.0) * np.exp(1j * rng.uniform(-np.pi, np.pi))
            g = np.exp(1j * rng.uniform(-np.pi, np.pi))
            angle, _ = abelian_phase(w, g)
            recombined = wrap_angle(np.angle(w) + np.angle(g))
            assert wrap_angle(angle - recombined) == pytest.approx(0.0, abs=1e-12)

    def test_report_visibility_is_overlap_modulus(self):
        w = OverlapMatrix(level_index=0, matrix=np.array([[0.6 * np.exp(0.4j)]]))
        report = noncyclic_phase(w, np.array([[np.exp(1.1j)]]))
        assert report.visibility == pytest.approx(0.6)
        assert report.overlap_angle == pytest.approx(0.4)
        assert report.holonomy_angle == pytest.approx(1.1)
        assert report.phase_angle == pytest.approx(1.5)


class TestDiagonalDecomposition:
    def test_diagonal_holonomy(self):
        gamma = np.diag([np.exp(0.3j), np.exp(-1.2j)])
        rng = np.random.default_rng(7)
        f0 = random_frame(rng, 4, 2)
        ft = random_frame(rng, 4, 2)
        pairs = diagonal_decomposition(gamma, ft, f0)
        angles = sorted(a for a, _ in pairs)
        assert angles == pytest.approx([-1.2, 0.3], abs=1e-12)

    def test_reconstructs_trace(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            l = rng.integers(1, 4)
            f0 = random_frame(rng, 5, l)
            ft = random_frame(rng, 5, l)
            gamma = random_unitary(rng, l)
            pairs = diagonal_decomposition(gamma, ft, f0)
            total = sum(np.exp(1j * a) * wgt for a, wgt in pairs)
            direct = np.trace(overlap_matrix(f0, ft).matrix @ gamma)
            assert abs(total - direct) <= 1e-10

    def test_quadrupole_cyclic_unit_weights(self):
        zeta = np.cos(TYCKO) / np.sin(TYCKO)
        f = qd.eigenframe(qd.FieldPoint(1.0, 0.0, zeta)).level(1).frame
        gamma = qd.gamma2_closed(TYCKO, 0.0, 2 * np.pi)
        pairs = diagonal_decomposition(gamma, f, f)
        expected = sorted(wrap_angle(p) for p in qd.cyclic_eigenphases(TYCKO))
        assert sorted(a for a, _ in pairs) == pytest.approx(expected, abs=1e-10)
        for _, weight in pairs:
            assert abs(weight - 1.0) <= 1e-10


class TestAngleHelpers:
    def test_wrap_angle_range(self):
        for a in np.linspace(-20, 20, 101):
            w = wrap_angle(a)
            assert -np.pi < w <= np.pi
            assert abs(np.exp(1j * a) - np.exp(1j * w)) <= 1e-12

    def test_unwrap_nearest_branch(self):
        truth = np.linspace(0.0, 6 * np.pi, 200)
        wrapped = np.array([wrap_angle(a) for a in truth])
        unwrapped = unwrap_nearest_branch(wrapped)
        assert np.max(np.abs(unwrapped - truth)) <= 1e-12


class TestGaugeBehavior:
    def test_pi_gauge_invariant_and_gcheck_covariant(self):
        rng = np.random.default_rng(9)
        zeta = np.cos(TYCKO) / np.sin(TYCKO)
        f0 = qd.eigenframe(qd.FieldPoint(1.0, 0.0, zeta)).level(1).frame
        ft = qd.eigenframe(qd.FieldPoint(1.0, 2.2, zeta)).level(1).frame
        gamma = qd.gamma2_closed(TYCKO, 0.0, 2.2)
        base = noncyclic_phase(overlap_matrix(f0, ft), gamma)
        for _ in range(20):
            v0 = random_unitary(rng, 2)
            vt = random_unitary(rng, 2)
            w_t = overlap_matrix(f0 @ v0, ft @ vt)
            gamma_t = vt.conj().T @ gamma @ v0
            got = noncyclic_phase(w_t, gamma_t)
            assert abs(got.pi - base.pi) <= 1e-12
            expected = v0.conj().T @ base.gamma_check @ v0
            assert np.max(np.abs(got.gamma_check - expected)) <= 1e-12

    def test_visibility_depends_only_on_endpoints(self):
        # two different interior samplings of the same endpoints
        theta = 1.0
        w_a = qd.w1_closed(theta, 0.0, 2.0)
        scenario_a = qd.PrecessionScenario(theta=theta, omega=0.1, phi_final=2.0)
        scenario_b = qd.PrecessionScenario(theta=theta, omega=0.45, phi_final=2.0)
        za = np.cos(theta) / np.sin(theta)
        for scenario in (scenario_a, scenario_b):
            f0 = qd.eigenframe(scenario.field_at(0.0)).level(0).frame
            ft = qd.eigenframe(scenario.field_at(scenario.duration)).level(0).frame
            w = overlap_matrix(f0, ft)
            assert abs(abs(w.matrix[0, 0]) - abs(w_a)) <= 1e-12
