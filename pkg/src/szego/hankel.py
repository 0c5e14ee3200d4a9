"""
Matrix models of Hankel, shifted Hankel and Toeplitz operators on L^2_+.

H_u is antilinear, h -> Pi(u conj(h)). It is never stored as an operator:
a HankelModel keeps the symmetric coefficient matrix A (so that
H_u(h) = A @ conj(h)) together with the Hermitian squares H_u^2 = A conj(A)
and K_u^2 = A_s conj(A_s), where A_s is the coefficient matrix of
K_u = S^* H_u = H_{S^* u}.

For a trigonometric polynomial u of length L <= N every matrix here is the
exact section of the infinite operator, because H_u maps everything into
the first L modes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import SpectralError
from .hardy import HardyFunction, as_coeffs, conj_product

RANK_TOL = 1e-10
CLUSTER_RADIUS = 1e-8
GAP_RATIO = 1e3


def hankel_matrix(c, N: int) -> np.ndarray:
    """N x N matrix with entries c[n + p] (zero beyond the data)."""
    c = np.asarray(c, dtype=complex)
    full = np.zeros(2 * N - 1, dtype=complex)
    m = min(c.size, full.size)
    full[:m] = c[:m]
    return sla.hankel(full[:N], full[N - 1 :])


def shift_adjoint_matrix(N: int) -> np.ndarray:
    """Matrix of S^* on the first N modes (exact: S^* never leaves them)."""
    return np.eye(N, k=1, dtype=complex)


@dataclass(frozen=True)
class HankelModel:
    A: np.ndarray
    A_shift: np.ndarray
    H2: np.ndarray
    K2: np.ndarray
    u_vec: np.ndarray

    @property
    def N(self) -> int:
        return self.u_vec.size

    def apply_H(self, h) -> np.ndarray:
        return self.A @ np.conj(np.asarray(h, dtype=complex))

    def apply_K(self, h) -> np.ndarray:
        return self.A_shift @ np.conj(np.asarray(h, dtype=complex))

    def rank_one_defect(self) -> float:
        """||K^2 - H^2 + u u^*|| relative to ||H^2||."""
        d = self.K2 - self.H2 + np.outer(self.u_vec, np.conj(self.u_vec))
        return float(np.linalg.norm(d) / max(np.linalg.norm(self.H2), 1e-300))


def build_hankel(u, N: int | None = None) -> HankelModel:
    """Matrices of H_u, K_u and their squares on the first N modes."""
    c = as_coeffs(u)
    N = c.size if N is None else N
    if N < 1:
        raise ValueError("N must be positive")
    A = hankel_matrix(c, N)
    As = hankel_matrix(c[1:], N)
    H2 = A @ np.conj(A)
    K2 = As @ np.conj(As)
    u_vec = np.zeros(N, dtype=complex)
    m = min(N, c.size)
    u_vec[:m] = c[:m]
    return HankelModel(A, As, 0.5 * (H2 + H2.conj().T), 0.5 * (K2 + K2.conj().T), u_vec)


def build_toeplitz(b, N: int, lowest: int | None = None) -> np.ndarray:
    """T[n][m] = b_hat(n - m) for a two-sided symbol.

    ``b`` holds coefficients of frequencies ``lowest .. lowest+len(b)-1``;
    by default the sequence is centred, i.e. ``lowest = -(len(b) - 1) // 2``.
    """
    b = np.asarray(b, dtype=complex).ravel()
    if lowest is None:
        lowest = -((b.size - 1) // 2)

    def coef(k):
        j = k - lowest
        return b[j] if 0 <= j < b.size else 0

    col = np.array([coef(k) for k in range(N)], dtype=complex)
    row = np.array([coef(-k) for k in range(N)], dtype=complex)
    return sla.toeplitz(col, row)


def toeplitz_abs2(u, N: int) -> np.ndarray:
    """T_{|u|^2} on the first N modes."""
    b, lowest = conj_product(u, u)
    return build_toeplitz(b, N, lowest)


def toeplitz_analytic(w, N: int) -> np.ndarray:
    """T_w for w in L^2_+ (lower triangular)."""
    return build_toeplitz(as_coeffs(w), N, 0)


# --------------------------------------------------------------------------
# spectral data


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def apply(self, f) -> np.ndarray:
        """Spectral calculus: V diag(f(lambda)) V^*."""
        V = self.eigenvectors
        return (V * f(self.eigenvalues)) @ V.conj().T

    def residual(self, M) -> float:
        V, lam = self.eigenvectors, self.eigenvalues
        return float(np.linalg.norm(M @ V - V * lam))


def eigh(M, psd: bool = False, herm_tol: float = 1e-10, clamp_tol: float = 1e-12) -> SpectralData:
    """Hermitian eigendecomposition, eigenvalues in descending order.

    With ``psd=True`` eigenvalues in ``[-clamp_tol * max(1, ||M||), 0)`` are
    set to zero and anything more negative is rejected.
    """
    M = np.asarray(M, dtype=complex)
    scale = max(np.linalg.norm(M), 1e-300)
    if np.linalg.norm(M - M.conj().T) > herm_tol * scale:
        raise SpectralError("matrix is not Hermitian")
    try:
        lam, V = np.linalg.eigh(0.5 * (M + M.conj().T))
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"eigensolver did not converge: {exc}") from exc
    lam, V = lam[::-1].copy(), V[:, ::-1].copy()
    if psd:
        floor = -clamp_tol * max(1.0, np.linalg.norm(M, 2))
        if lam.size and lam[-1] < floor:
            raise SpectralError(f"matrix declared PSD has eigenvalue {lam[-1]:.3g}")
        lam[lam < 0] = 0.0
    return SpectralData(lam, V)


def numerical_rank(eigenvalues, scale: float, tol: float = RANK_TOL) -> int:
    if scale <= 0:
        return 0
    return int(np.sum(np.asarray(eigenvalues) > tol * scale))


def vd_membership(u, tol: float = RANK_TOL, N: int | None = None) -> int | None:
    """The d with rk H_u = [(d+1)/2] and rk K_u = [d/2], or None.

    Both ranks are counted against the largest eigenvalue of H_u^2, since
    K_u^2 <= H_u^2.
    """
    model = build_hankel(u, N)
    lh = np.linalg.eigvalsh(model.H2)
    lk = np.linalg.eigvalsh(model.K2)
    scale = float(lh.max()) if lh.size else 0.0
    r_h = numerical_rank(lh, scale, tol)
    r_k = numerical_rank(lk, scale, tol)
    if r_h < 1:
        return None
    if r_h == r_k:
        return 2 * r_h
    if r_h == r_k + 1:
        return 2 * r_k + 1
    return None


# --------------------------------------------------------------------------
# reduction to range(H_u)


@dataclass(frozen=True)
class ReducedModel:
    """Restriction of S^*, H^2 and K^2 to range(H_{u0}) in an orthonormal basis.

    ``row`` is the first row of the basis, so that the functional (x | 1) of
    a vector with reduced coordinates x_r is ``row @ x_r``; ``one_r`` is its
    conjugate, the coordinates of the projection of 1.
    """

    basis: np.ndarray
    H2_r: np.ndarray
    K2_r: np.ndarray
    Sstar_r: np.ndarray
    u_r: np.ndarray
    one_r: np.ndarray

    @property
    def rank(self) -> int:
        return self.u_r.size

    @property
    def row(self) -> np.ndarray:
        return np.conj(self.one_r)

    def lift(self, x_r) -> np.ndarray:
        return self.basis @ x_r

    def invariance_defect(self) -> float:
        """||(I - P) S^* P|| for the basis projector P."""
        V = self.basis
        SV = shift_adjoint_matrix(V.shape[0]) @ V
        return float(np.linalg.norm(SV - V @ (V.conj().T @ SV), 2))


def reduce(model: HankelModel, rank_tol: float = RANK_TOL) -> ReducedModel:
    """Exact finite-dimensional model on range(H_{u0})."""
    spec = eigh(model.H2, psd=True)
    lam = spec.eigenvalues
    scale = float(lam[0]) if lam.size else 0.0
    r = numerical_rank(lam, scale, rank_tol)
    if r == 0:
        raise SpectralError("H_u vanishes; there is nothing to reduce")
    if r < lam.size and lam[r] > 0 and lam[r - 1] / lam[r] < GAP_RATIO:
        raise SpectralError(
            f"no clear spectral gap between eigenvalues {lam[r - 1]:.6g} and {lam[r]:.6g}"
        )
    V = spec.eigenvectors[:, :r]
    Vh = V.conj().T
    H2_r = Vh @ model.H2 @ V
    K2_r = Vh @ model.K2 @ V
    S_r = Vh @ shift_adjoint_matrix(model.N) @ V
    return ReducedModel(
        basis=V,
        H2_r=0.5 * (H2_r + H2_r.conj().T),
        K2_r=0.5 * (K2_r + K2_r.conj().T),
        Sstar_r=S_r,
        u_r=Vh @ model.u_vec,
        one_r=np.conj(V[0, :]),
    )


def operator_data(model):
    """(H2, K2, S*, u, row) for either a HankelModel or a ReducedModel."""
    if isinstance(model, ReducedModel):
        return model.H2_r, model.K2_r, model.Sstar_r, model.u_r, model.row
    if isinstance(model, HankelModel):
        row = np.zeros(model.N, dtype=complex)
        row[0] = 1
        return model.H2, model.K2, shift_adjoint_matrix(model.N), model.u_vec, row
    raise TypeError(f"expected HankelModel or ReducedModel, got {type(model).__name__}")


def joint_spectrum(model, radius: float = CLUSTER_RADIUS) -> np.ndarray:
    """Union of the spectra of H^2 and K^2, clustered at ``radius``.

    Values closer than ``radius`` (single linkage on the sorted list) are one
    point, represented by their mean.
    """
    H2, K2, *_ = operator_data(model)
    vals = np.sort(np.concatenate([eigh(H2, psd=True).eigenvalues, eigh(K2, psd=True).eigenvalues]))
    clusters = [[vals[0]]]
    for v in vals[1:]:
        if v - clusters[-1][-1] <= radius:
            clusters[-1].append(v)
        else:
            clusters.append([v])
    return np.array([np.mean(c) for c in clusters])


# --------------------------------------------------------------------------
# Lax pairs and the hierarchy


def lax_generators(model: HankelModel, u=None):
    """B_u = (i/2) H^2 - i T_{|u|^2} and C_u = (i/2) K^2 - i T_{|u|^2}."""
    u = model.u_vec if u is None else u
    T = toeplitz_abs2(u, model.N)
    return 0.5j * model.H2 - 1j * T, 0.5j * model.K2 - 1j * T


def antilinear_commutator(B, A) -> np.ndarray:
    """Matrix of [B, H] for linear B and antilinear H(h) = A conj(h)."""
    return B @ A - A @ np.conj(B)


def resolvent_one(H2, y: float) -> np.ndarray:
    """w^y = (I + y H^2)^{-1} 1 on the first N modes (positive definite solve)."""
    N = H2.shape[0]
    rhs = np.zeros(N, dtype=complex)
    rhs[0] = 1
    return sla.solve(np.eye(N) + y * H2, rhs, assume_a="her")


def j_functional(model, y: float) -> float:
    """J^y(u) = ((I + y H_u^2)^{-1} 1 | 1).

    In reduced coordinates 1 splits into its projection onto range(H) and a
    part in ker H^2, on which the resolvent is the identity.
    """
    if y <= 0:
        raise ValueError("y must be positive")
    if isinstance(model, ReducedModel):
        e = model.one_r
        r = model.rank
        x = sla.solve(np.eye(r) + y * model.H2_r, e, assume_a="her")
        return float((1 - np.vdot(e, e) + np.vdot(e, x)).real)
    if not isinstance(model, HankelModel):
        model = build_hankel(model)
    return float(resolvent_one(model.H2, y)[0].real)


def hierarchy_generators(model: HankelModel, y: float):
    """(F_u^y, G_u^y, w^y) as matrices on the first N modes.

    G(h) = -y w Pi(conj(w) h) + y^2 v Pi(conj(v) h) with v = H_u w, and
    F = G - y^2 (. | v) v. For w, h in L^2_+, w Pi(conj(w) h) = T_w T_w^* h.
    """
    if y <= 0:
        raise ValueError("y must be positive")
    N = model.N
    w = resolvent_one(model.H2, y)
    v = model.apply_H(w)
    Tw = toeplitz_analytic(w, N)
    Tv = toeplitz_analytic(v, N)
    G = -y * Tw @ Tw.conj().T + y**2 * Tv @ Tv.conj().T
    F = G - y**2 * np.outer(v, np.conj(v))
    return F, G, w


def hierarchy_field(u, y: float, N: int | None = None) -> HardyFunction:
    """X_{J^y}(u) = 2 i y w^y H_u(w^y), full product length."""
    model = build_hankel(u, N)
    w = resolvent_one(model.H2, y)
    return HardyFunction(2j * y * np.convolve(w, model.apply_H(w)))


def cayley_resolvent(spec: SpectralData, rank: int | None = None, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Coefficients a_0..a_r with (I + H^2)^{-1} = sum_k a_k H^{2k}.

    a_k = (-1)^k (1 + S_1 + ... + S_{r-k}) / (1 + S_1 + ... + S_r), where S_j
    are the elementary symmetric functions of the positive eigenvalues.
    """
    lam = np.asarray(spec.eigenvalues, dtype=float)
    if rank is None:
        rank = numerical_rank(lam, float(lam.max()) if lam.size else 0.0, rank_tol)
    rho2 = np.sort(lam)[::-1][:rank]
    # np.poly gives prod (x - rho2) = x^r - S_1 x^{r-1} + S_2 x^{r-2} - ...
    char = np.poly(rho2) if rank else np.ones(1)
    S = np.array([(-1) ** j * char[j] for j in range(rank + 1)], dtype=float)  # S[0] = 1
    partial = np.cumsum(S)
    return np.array([(-1) ** k * partial[rank - k] / partial[rank] for k in range(rank + 1)])
