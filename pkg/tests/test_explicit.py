import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import identities as ident
from szego.closed_form import closed_form_v3
from szego.errors import SpectralError
from szego.experiments import orbit_modes, random_rational
from szego.explicit import (
    AngleAssignment,
    ExplicitSolver,
    build_propagator,
    eval_explicit,
    evolve_explicit,
    evolve_hierarchy,
    quasip_phi,
    solve_angle_system,
)
from szego.hankel import build_hankel, j_functional, reduce, shift_adjoint_matrix, vd_membership
from szego.hardy import energy, momentum, rational_to_coeffs

U05 = np.array([0.5, 1.0])


def reduced(u, N=None):
    return ExplicitSolver(reduce(build_hankel(u, N)))


class TestPropagator:
    def test_at_time_zero(self, rng):
        u = ident.random_poly(rng, 4)
        P = build_propagator(u, 0.0, N=8)
        assert np.array_equal(P.M, shift_adjoint_matrix(8))
        assert np.array_equal(P.v[:5], u)

    @given(st.floats(-20, 20))
    def test_unitarity_and_contraction(self, t):
        P = build_propagator(np.array([0.3 - 0.2j, 1.0, 0.5j]), t, N=10)
        x = np.arange(10) + 1j
        for E in (P.E_H, P.E_K):
            assert np.linalg.norm(E @ x) == pytest.approx(np.linalg.norm(x), rel=1e-12)
        assert np.linalg.norm(P.M, 2) <= 1 + 1e-12

    def test_two_by_two_exponential(self):
        eps, t = 0.5, 0.8
        w = eps * np.sqrt(1 + eps**2 / 4)
        Om = 1 + eps**2 / 2
        MH = np.array([[1 + eps**2, eps], [eps, 1]])
        expected = np.exp(-1j * Om * t) / (2 * w) * (
            -2j * np.sin(w * t) * MH + (2 * w * np.cos(w * t) + 2j * Om * np.sin(w * t)) * np.eye(2)
        )
        assert np.allclose(build_propagator(np.array([eps, 1.0]), t).E_H, expected, atol=1e-14)

    def test_shift_symbol(self):
        t = 1.7
        P = build_propagator(np.array([0, 1.0]), t, N=4)
        assert np.allclose(P.E_H[:2, :2], np.exp(-1j * t) * np.eye(2))
        assert np.allclose(P.E_H[2:, 2:], np.eye(2))


class TestEvolve:
    def test_time_zero(self, rng):
        u = ident.random_poly(rng, 5)
        assert np.allclose(evolve_explicit(u, 0.0).coeffs, u, atol=1e-15)

    @given(st.floats(-50, 50))
    def test_phase_rotation(self, t):
        c = evolve_explicit(np.array([0, 1.0]), t, 4).coeffs
        assert np.allclose(c, [0, np.exp(-1j * t), 0, 0], atol=1e-13)

    @pytest.mark.parametrize("mode", ["truncated", "reduced"])
    def test_closed_form(self, mode):
        for t in (0.5, 1.0, 2.0):
            c = evolve_explicit(U05, t, 200, N=2 if mode == "truncated" else 8, mode=mode).coeffs
            assert np.linalg.norm(c - closed_form_v3(0.5, t).coefficients(200)) <= 1e-10

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            evolve_explicit(U05, 1.0, mode="fast")

    def test_mass_conservation(self):
        sol = reduced(U05, 8)
        c = sol.sweep(np.linspace(0, 100, 201), 2048)
        assert np.max(np.abs(np.linalg.norm(c, axis=1) - np.linalg.norm(U05))) <= 1e-10

    @given(st.integers(0, 10**6), st.floats(-10, 10))
    def test_mass_conservation_truncated(self, seed, t):
        u = ident.random_poly(np.random.default_rng(seed), 3)
        c = evolve_explicit(u, t, 64).coeffs
        tail = ExplicitSolver(u).coefficients(t, 4000).coeffs
        assert np.linalg.norm(tail) == pytest.approx(np.linalg.norm(u), rel=1e-10)
        assert np.linalg.norm(c) <= np.linalg.norm(u) * (1 + 1e-12)

    def test_invariants_along_flow(self, rng):
        r = random_rational(rng, 3)
        u0 = rational_to_coeffs(r, 200).coeffs
        sol = reduced(u0)
        m0 = build_hankel(u0)
        h0 = np.linalg.eigvalsh(m0.H2)[::-1][:4]
        k0 = np.linalg.eigvalsh(m0.K2)[::-1][:4]
        times = (0.7, 2.0, 3.1)
        n = orbit_modes(sol, np.array(times), 1e-14)
        for t in times:
            c = sol.coefficients(t, n).coeffs
            m = build_hankel(c)
            assert np.allclose(np.linalg.eigvalsh(m.H2)[::-1][:4], h0, atol=1e-9)
            assert np.allclose(np.linalg.eigvalsh(m.K2)[::-1][:4], k0, atol=1e-9)
            for y in (0.5, 1, 2):
                assert j_functional(m, y) == pytest.approx(j_functional(m0, y), abs=1e-10)
            assert energy(c) == pytest.approx(energy(u0), abs=1e-10)
            assert momentum(c) == pytest.approx(momentum(u0), abs=1e-10)
            assert vd_membership(c) == 3

    def test_group_property(self, rng):
        u0 = rational_to_coeffs(random_rational(rng, 4), 200).coeffs
        t1, t2 = 1.3, 2.4
        mid = reduced(u0).coefficients(t1, 400).coeffs
        two_step = reduced(mid).coefficients(t2, 400).coeffs
        one_step = reduced(u0).coefficients(t1 + t2, 400).coeffs
        assert np.linalg.norm(two_step - one_step) <= 1e-9

    def test_reduced_matches_truncated(self, rng):
        u0 = rational_to_coeffs(random_rational(rng, 3), 256).coeffs
        a, b = ExplicitSolver(u0), reduced(u0)
        times = np.linspace(0, 10, 11)
        diff = a.sweep(times, 512) - b.sweep(times, 512)
        assert np.max(np.linalg.norm(diff, axis=1)) <= 1e-9


class TestEvaluate:
    def test_examples(self):
        assert eval_explicit(np.array([0, 1.0]), 0.0, 0.5) == pytest.approx(0.5)
        c = evolve_explicit(U05, 1.0, 4).coeffs
        assert eval_explicit(U05, 1.0, 0.0) == pytest.approx(c[0], abs=1e-14)
        cf = closed_form_v3(0.5, 1.0)
        z = 0.3
        assert eval_explicit(U05, 1.0, z) == pytest.approx((cf.a * z + cf.b) / (1 - cf.p * z), abs=1e-13)

    def test_series_agreement(self):
        z = 0.6 * np.exp(0.4j)
        c = evolve_explicit(U05, 2.0, 400, N=2).coeffs
        assert eval_explicit(U05, 2.0, z) == pytest.approx(np.polynomial.polynomial.polyval(z, c), abs=1e-12)

    def test_rejects_boundary(self):
        with pytest.raises(ValueError):
            eval_explicit(U05, 1.0, 1.0)


class TestHierarchy:
    def test_zero_weights(self, rng):
        u = ident.random_poly(rng, 3)
        assert np.allclose(evolve_hierarchy(u, 2.0, [0.0, 0.0], [1.0, 2.0]).coeffs, u, atol=1e-14)
        assert np.allclose(evolve_hierarchy(u, 2.0, [], []).coeffs, u, atol=1e-14)

    def test_rank_one_stays_rank_one(self):
        u0 = np.array([0.8 - 0.3j])
        for t in (0.5, 3.0):
            c = evolve_hierarchy(u0, t, [1.3], [0.7], 8).coeffs
            assert abs(c[0]) == pytest.approx(abs(u0[0]), rel=1e-13)
            assert np.allclose(c[1:], 0, atol=1e-14)

    def test_weight_validation(self):
        with pytest.raises(ValueError, match="distinct"):
            evolve_hierarchy(U05, 1.0, [1, 1], [2, 2])
        with pytest.raises(ValueError, match="positive"):
            evolve_hierarchy(U05, 1.0, [1], [-1])
        with pytest.raises(ValueError):
            evolve_hierarchy(U05, 1.0, [1, 2], [1])


class TestQuasiperiodicMap:
    def setup_method(self):
        self.model = reduce(build_hankel(U05, 8))
        self.sigma = ExplicitSolver(self.model).joint_spectrum()

    def test_zero_angles(self):
        phi = quasip_phi(self.model, AngleAssignment(self.sigma, np.zeros(self.sigma.size)), 6)
        assert np.allclose(phi.coeffs, np.pad(U05, (0, 4)), atol=1e-14)

    @pytest.mark.parametrize("t", [0.4, 2.2, 17.0])
    def test_linear_angles_follow_the_flow(self, t):
        phi = quasip_phi(self.model, AngleAssignment.linear(self.sigma, t), 300)
        assert np.linalg.norm(phi.coeffs - evolve_explicit(U05, t, 300, N=2).coeffs) <= 1e-9

    def test_random_angles_stay_in_v3(self, rng):
        for _ in range(5):
            omega = AngleAssignment(self.sigma, rng.uniform(0, 2 * np.pi, self.sigma.size))
            c = quasip_phi(self.model, omega, 400).coeffs
            assert np.linalg.norm(c) == pytest.approx(np.linalg.norm(U05), rel=1e-10)
            assert vd_membership(c[:200]) == 3

    def test_unmatched_eigenvalue(self):
        with pytest.raises(RuntimeError):
            quasip_phi(self.model, AngleAssignment([0.123], [1.0]), 4)

    def test_assignment_normalises(self):
        om = AngleAssignment([2.0, 1.0], [7.0, -1.0])
        assert np.allclose(om.points, [1, 2])
        assert np.all((om.angles >= 0) & (om.angles < 2 * np.pi))
        with pytest.raises(ValueError):
            AngleAssignment([1.0], [1.0, 2.0])


class TestAngleSystem:
    def setup_method(self):
        self.model = reduce(build_hankel(U05, 8))
        self.sigma = ExplicitSolver(self.model).joint_spectrum()

    def test_zero(self):
        a = solve_angle_system(self.model, AngleAssignment(self.sigma, np.zeros(self.sigma.size)))
        assert np.allclose(a, 0)

    def test_single_point(self):
        rho2, y, theta = 1.7, 1.5, 0.9
        a = solve_angle_system(self.model, AngleAssignment([rho2], [theta]), y=[y])
        J = j_functional(self.model, y)
        assert a[0] == pytest.approx(-theta * (1 + y * rho2) / (2 * y * J), rel=1e-12)

    def test_end_to_end(self, rng):
        omega = AngleAssignment(self.sigma, rng.uniform(0, 2 * np.pi, self.sigma.size))
        a = solve_angle_system(self.model, omega)
        y = np.arange(1, self.sigma.size + 1, dtype=float)
        via_flow = evolve_hierarchy(self.model, 1.0, a, y, n_out=300)
        assert np.linalg.norm(via_flow.coeffs - quasip_phi(self.model, omega, 300).coeffs) <= 1e-8

    def test_parameter_count_and_conditioning(self):
        om = AngleAssignment(self.sigma, np.ones(self.sigma.size))
        with pytest.raises(ValueError):
            solve_angle_system(self.model, om, y=[1.0])
        with pytest.raises(SpectralError, match="condition"):
            solve_angle_system(self.model, om, y=[1.0, 1.0 + 1e-13, 3.0, 4.0][: self.sigma.size])
