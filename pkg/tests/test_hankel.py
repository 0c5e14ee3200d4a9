import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import identities as ident
from szego.errors import SpectralError
from szego.experiments import random_rational
from szego.explicit import evolve_explicit
from szego.hankel import (
    antilinear_commutator,
    build_hankel,
    build_toeplitz,
    cayley_resolvent,
    eigh,
    hankel_matrix,
    hierarchy_generators,
    j_functional,
    joint_spectrum,
    lax_generators,
    reduce,
    shift_adjoint_matrix,
    toeplitz_abs2,
    vd_membership,
)
from szego.hardy import RationalSymbol, conj_product, project_szego, rational_to_coeffs


def rho2(eps):
    return 1 + eps**2 / 2 + np.array([1, -1]) * eps * np.sqrt(1 + eps**2 / 4)


class TestBuildHankel:
    def test_shift_symbol(self):
        m = build_hankel([0, 1], 3)
        assert np.array_equal(m.A, [[0, 1, 0], [1, 0, 0], [0, 0, 0]])
        assert np.allclose(m.H2, np.diag([1, 1, 0]))

    def test_two_by_two_block(self):
        eps = 0.3
        m = build_hankel([eps, 1.0], 2)
        assert np.allclose(m.H2, [[1 + eps**2, eps], [eps, 1]])
        assert np.allclose(m.K2, [[1, 0], [0, 0]])

    def test_zero(self):
        m = build_hankel([0.0], 4)
        for M in (m.A, m.A_shift, m.H2, m.K2):
            assert not np.any(M)

    def test_invariants_and_direct_action(self, rng):
        for _ in range(20):
            u = ident.random_poly(rng, int(rng.integers(0, 6)))
            N = 16
            m = build_hankel(u, N)
            assert np.array_equal(m.A, m.A.T)
            assert np.linalg.norm(m.H2 - m.H2.conj().T) <= 1e-13 * np.linalg.norm(m.H2)
            assert m.rank_one_defect() <= 1e-12
            h = ident.random_poly(rng, 7)
            direct = project_szego(*conj_product(u, h)).padded(N)
            assert np.allclose(m.apply_H(np.pad(h, (0, N - h.size))), direct, atol=1e-13)

    def test_self_adjointness(self, rng):
        u = ident.random_poly(rng, 5)
        m = build_hankel(u, 12)
        worst = 0.0
        for _ in range(100):
            h1, h2 = (rng.standard_normal(12) + 1j * rng.standard_normal(12) for _ in range(2))
            lhs, rhs = np.vdot(h2, m.apply_H(h1)), np.vdot(h1, m.apply_H(h2))
            worst = max(worst, abs(lhs - rhs) / (abs(lhs) + 1e-300))
        assert worst <= 1e-12

    def test_intertwining(self, rng):
        u = ident.random_poly(rng, 4)
        N = 16
        m = build_hankel(u, N)
        Ss = shift_adjoint_matrix(N)
        S = Ss.T
        keep = N - 6
        a = (Ss @ m.A)[:keep, :keep]
        b = (m.A @ S)[:keep, :keep]
        assert np.allclose(a, m.A_shift[:keep, :keep], atol=1e-13)
        assert np.allclose(b, m.A_shift[:keep, :keep], atol=1e-13)


class TestToeplitz:
    def test_identity(self):
        assert np.allclose(build_toeplitz([1.0], 4, 0), np.eye(4))

    def test_abs2_tridiagonal(self):
        eps = 0.4
        T = toeplitz_abs2([eps, 1.0], 4)
        assert np.allclose(np.diag(T), 1 + eps**2)
        assert np.allclose(np.diag(T, 1), eps) and np.allclose(np.diag(T, -1), eps)
        assert np.allclose(np.triu(T, 2), 0)

    def test_shift(self):
        assert np.allclose(build_toeplitz([0, 1.0], 4, 0), shift_adjoint_matrix(4).T)

    def test_adjoint(self, rng):
        b = rng.standard_normal(7) + 1j * rng.standard_normal(7)
        T = build_toeplitz(b, 6, -3)
        Tc = build_toeplitz(np.conj(b[::-1]), 6, -3)
        assert np.allclose(T.conj().T, Tc)


class TestEigh:
    def test_closed_form_eigenvalues(self):
        for eps in (0.5, 1.0):
            spec = eigh([[1 + eps**2, eps], [eps, 1]], psd=True)
            assert np.allclose(spec.eigenvalues, rho2(eps), atol=1e-14)
        assert np.allclose(eigh([[2, 1], [1, 1]]).eigenvalues, [(3 + 5**0.5) / 2, (3 - 5**0.5) / 2])
        assert np.allclose(eigh(np.diag([1.0, 1.0, 0.0])).eigenvalues, [1, 1, 0])

    def test_invariants(self, rng):
        X = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
        M = X @ X.conj().T
        spec = eigh(M, psd=True)
        V = spec.eigenvectors
        assert spec.residual(M) <= 1e-11 * np.linalg.norm(M)
        assert np.allclose(V.conj().T @ V, np.eye(9), atol=1e-12)
        assert np.all(np.diff(spec.eigenvalues) <= 0)

    def test_rejections(self):
        with pytest.raises(SpectralError, match="Hermitian"):
            eigh([[1, 2], [0, 1]])
        with pytest.raises(SpectralError, match="PSD"):
            eigh(np.diag([1.0, -0.5]), psd=True)
        assert eigh(np.diag([1.0, -1e-15]), psd=True).eigenvalues[-1] == 0


class TestMembership:
    def test_examples(self):
        assert vd_membership([0.5, 1.0]) == 3
        assert vd_membership([0.0]) is None
        assert vd_membership([2.0]) == 1

    def test_geometric_series_has_index_two(self):
        # b/(1 - p e^{ix}): rk H = rk K = 1
        c = rational_to_coeffs(RationalSymbol([1.0], [1, -0.5], 2), 80)
        assert vd_membership(c) == 2

    def test_random_rational(self, rng):
        for d in range(1, 7):
            r = random_rational(rng, d)
            assert vd_membership(rational_to_coeffs(r, 150)) == d


class TestReduce:
    def test_two_mode_datum(self):
        eps = 0.5
        red = reduce(build_hankel(np.array([eps, 1.0]), 16))
        assert red.rank == 2
        assert np.allclose(np.sort(np.linalg.eigvalsh(red.H2_r))[::-1], rho2(eps))
        assert np.allclose(np.sort(np.linalg.eigvalsh(red.K2_r)), [0, 1], atol=1e-14)
        assert red.invariance_defect() <= 1e-10
        assert np.allclose(red.K2_r, red.H2_r - np.outer(red.u_r, red.u_r.conj()), atol=1e-12)

    def test_shift_and_constant(self):
        red = reduce(build_hankel(np.array([0, 1.0]), 8))
        assert red.rank == 2
        assert np.allclose(red.Sstar_r @ red.Sstar_r, 0) and not np.allclose(red.Sstar_r, 0)
        red = reduce(build_hankel(np.array([2.0]), 8))
        assert red.rank == 1
        assert np.allclose(red.Sstar_r, 0) and np.allclose(red.K2_r, 0)

    def test_no_gap(self):
        c = 0.99 ** np.arange(12) * np.exp(1j * np.arange(12) ** 2)
        with pytest.raises(SpectralError, match="no clear spectral gap"):
            reduce(build_hankel(c), rank_tol=1e-2)

    def test_zero(self):
        with pytest.raises(SpectralError):
            reduce(build_hankel([0.0], 4))

    def test_joint_spectrum(self):
        r = rho2(0.5)
        sigma = joint_spectrum(reduce(build_hankel(np.array([0.5, 1.0]), 8)))
        assert np.allclose(sigma, [0, r[1], 1, r[0]], atol=1e-12)


class TestLax:
    def test_shift_symbol(self):
        B, C = lax_generators(build_hankel([0, 1.0], 6))
        exact = slice(0, 4)
        assert np.allclose(B[exact, exact], (0.5j * np.diag([1, 1, 0, 0, 0, 0]) - 1j * np.eye(6))[exact, exact])
        assert np.allclose(B + B.conj().T, 0)
        assert np.allclose(C + C.conj().T, 0)

    def test_zero(self):
        B, C = lax_generators(build_hankel([0.0], 4))
        assert not np.any(B) and not np.any(C)

    def test_generator_difference(self, rng):
        m = build_hankel(ident.random_poly(rng, 3), 10)
        B, C = lax_generators(m)
        assert np.allclose(C - B, 0.5j * (m.K2 - m.H2), atol=1e-14)

    def test_finite_difference(self):
        u0 = np.array([0.5, 1.0])
        N, keep = 120, 40

        def gap(delta):
            up = evolve_explicit(u0, delta, N).coeffs
            um = evolve_explicit(u0, -delta, N).coeffs
            fd = (hankel_matrix(up, N) - hankel_matrix(um, N)) / (2 * delta)
            m = build_hankel(u0, N)
            B, _ = lax_generators(m)
            return np.linalg.norm((fd - antilinear_commutator(B, m.A))[:keep, :keep])

        g1, g2 = gap(1e-3), gap(5e-4)
        assert g1 < 1e-5
        assert 3.5 < g1 / g2 < 4.5


class TestHierarchyGenerators:
    def test_zero_symbol(self):
        y = 0.7
        # w = 1, so G(h) = -y Pi(h) = -y h
        F, G, w = hierarchy_generators(build_hankel([0.0], 5), y)
        assert np.allclose(w, np.eye(5)[0])
        assert np.allclose(F, -y * np.eye(5)) and np.allclose(G, -y * np.eye(5))

    @given(st.floats(0.05, 5))
    def test_self_adjoint(self, y):
        m = build_hankel(np.array([0.3 + 0.1j, 1.0, -0.4j]), 12)
        F, G, _ = hierarchy_generators(m, y)
        assert np.allclose(F, F.conj().T, atol=1e-12)
        assert np.allclose(G, G.conj().T, atol=1e-12)

    def test_linear_in_small_y(self):
        m = build_hankel(np.array([0.5, 1.0]), 8)
        F1, _, _ = hierarchy_generators(m, 1e-6)
        F2, _, _ = hierarchy_generators(m, 2e-6)
        # F = y F_1 + O(y^2)
        assert np.linalg.norm(F2 - 2 * F1) < 1e-5 * np.linalg.norm(F1)

    def test_j_two_ways(self):
        eps, y = 0.5, 1.3
        H2 = np.array([[1 + eps**2, eps], [eps, 1]])
        M = np.eye(2) + y * H2
        inv00 = M[1, 1] / np.linalg.det(M)
        m = build_hankel(np.array([eps, 1.0]), 10)
        assert j_functional(m, y) == pytest.approx(inv00, rel=1e-13)
        assert j_functional(reduce(m), y) == pytest.approx(inv00, rel=1e-12)
        with pytest.raises(ValueError):
            j_functional(m, 0.0)


class TestIdentities:
    def test_suite(self, rng):
        worst = ident.identity_suite(rng, instances=20)
        assert max(worst.values()) <= 1e-10, worst

    def test_wrong_sign_is_detected(self, rng):
        u = ident.random_poly(rng, 3)
        m = build_hankel(u, 24)
        F, _, w = hierarchy_generators(m, 1.0)
        ix = -2 * np.convolve(w, m.apply_H(w))
        good = m.A @ np.conj(F) + F @ m.A
        bad = m.A @ np.conj(F) - F @ m.A
        lhs = hankel_matrix(ix, 24)[:10, :10]
        assert np.linalg.norm(lhs - good[:10, :10]) < 1e-12
        assert np.linalg.norm(lhs - bad[:10, :10]) > 1e-3


class TestCayley:
    def test_rank_one(self):
        spec = eigh(build_hankel([2.0], 3).H2, psd=True)
        assert np.allclose(cayley_resolvent(spec), [1, -1 / 5])

    def test_rank_zero(self):
        assert np.allclose(cayley_resolvent(eigh(np.zeros((3, 3)), psd=True)), [1])

    def test_resolvent(self, rng):
        for d in range(1, 7):
            c = rational_to_coeffs(random_rational(rng, d), 60).coeffs
            m = build_hankel(c)
            spec = eigh(m.H2, psd=True)
            a = cayley_resolvent(spec)
            assert np.all(np.abs(a) <= 1 + 1e-14)
            series = sum(ak * np.linalg.matrix_power(m.H2, k) for k, ak in enumerate(a))
            direct = np.linalg.inv(np.eye(m.N) + m.H2)
            assert np.linalg.norm(series - direct) <= 1e-10 * np.linalg.norm(direct)
