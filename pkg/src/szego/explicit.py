"""
Explicit solution formulas.

All three formulas share one shape,

    u(z) = ((I - z E_H E_K S^*)^{-1} E_H u0 | 1),

with E_H = exp(i phi_H(H^2)) and E_K = exp(i phi_K(K^2)) built by spectral
calculus from H_{u0}^2, K_{u0}^2:

    cubic Szego flow at time t    phi_H = -t s,         phi_K = t s
    hierarchy flow at time t      phi_H = 2 t g(s),     phi_K = -2 t g(s)
    torus map Phi(omega)          phi_H = -omega(s),    phi_K = omega(s)

Taylor coefficients are read off as c_n = (M^n v | 1) with M = E_H E_K S^*
and v = E_H u0. The operators act either on the first N modes (a
HankelModel) or on range(H_{u0}) (a ReducedModel); both are exact for
trigonometric-polynomial data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import SpectralError
from .hankel import (
    CLUSTER_RADIUS,
    HankelModel,
    ReducedModel,
    build_hankel,
    eigh,
    j_functional,
    joint_spectrum,
    operator_data,
    reduce,
)
from .hardy import HardyFunction

# block size (in times) for batched sweeps
_SWEEP_CHUNK = 64


@dataclass(frozen=True)
class Propagator:
    E_H: np.ndarray
    E_K: np.ndarray
    M: np.ndarray
    v: np.ndarray
    row: np.ndarray

    def coefficients(self, n_out: int) -> np.ndarray:
        return _taylor_coefficients(self.M[None], self.v[None], self.row, n_out)[0]

    def evaluate(self, z: complex) -> complex:
        n = self.v.size
        x = sla.solve(np.eye(n) - z * self.M, self.v)
        return complex(self.row @ x)


@dataclass(frozen=True)
class AngleAssignment:
    """A function omega on the clustered joint spectrum, values in [0, 2 pi)."""

    points: np.ndarray
    angles: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        ang = np.mod(np.asarray(self.angles, dtype=float).ravel(), 2 * np.pi)
        if pts.size != ang.size:
            raise ValueError("points and angles must have the same length")
        order = np.argsort(pts)
        object.__setattr__(self, "points", pts[order])
        object.__setattr__(self, "angles", ang[order])

    @classmethod
    def linear(cls, points, t: float) -> "AngleAssignment":
        """omega(s) = t s mod 2 pi, the assignment traced by the Szego flow."""
        points = np.asarray(points, dtype=float)
        return cls(points, t * points)

    def __call__(self, values, radius: float = CLUSTER_RADIUS) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        idx = np.abs(values[:, None] - self.points[None, :]).argmin(axis=1)
        miss = np.abs(values - self.points[idx]) > radius
        if np.any(miss):
            raise RuntimeError(f"eigenvalue {values[miss][0]!r} matches no point of the spectrum")
        return self.angles[idx]


class ExplicitSolver:
    """Spectral decompositions of H_{u0}^2 and K_{u0}^2, computed once.

    ``model`` is a HankelModel (truncated mode) or a ReducedModel (finite
    rank mode); a HardyFunction or array is turned into a HankelModel.
    """

    def __init__(self, model, N: int | None = None):
        if not isinstance(model, (HankelModel, ReducedModel)):
            model = build_hankel(model, N)
        self.model = model
        H2, K2, Sstar, u, row = operator_data(model)
        self.spec_H = eigh(H2, psd=True)
        self.spec_K = eigh(K2, psd=True)
        self.Sstar = Sstar
        self.u = u
        self.row = row

    @property
    def dim(self) -> int:
        return self.u.size

    def _exp(self, spec, phases) -> np.ndarray:
        # phases: (T, dim) -> (T, dim, dim)
        V = spec.eigenvectors
        E = np.einsum("ij,tj,kj->tik", V, np.exp(1j * phases), V.conj())
        E[~np.any(phases, axis=1)] = np.eye(V.shape[0])  # exact identity at zero phase
        return E

    def _build(self, phase_H, phase_K):
        """Batched propagators for phase arrays of shape (T, dim)."""
        E_H = self._exp(self.spec_H, phase_H)
        E_K = self._exp(self.spec_K, phase_K)
        M = E_H @ E_K @ self.Sstar
        v = E_H @ self.u
        return E_H, E_K, M, v

    def _phases_szego(self, times):
        times = np.asarray(times, dtype=float).reshape(-1, 1)
        return -times * self.spec_H.eigenvalues, times * self.spec_K.eigenvalues

    def propagator(self, t: float) -> Propagator:
        E_H, E_K, M, v = self._build(*self._phases_szego([t]))
        return Propagator(E_H[0], E_K[0], M[0], v[0], self.row)

    def coefficients(self, t: float, n_out: int) -> HardyFunction:
        return HardyFunction(self.sweep([t], n_out)[0])

    def sweep(self, times, n_out: int) -> np.ndarray:
        """Coefficient rows for every t in ``times``; shape (len(times), n_out)."""
        times = np.asarray(times, dtype=float).ravel()
        out = np.empty((times.size, n_out), dtype=complex)
        for i in range(0, times.size, _SWEEP_CHUNK):
            sl = slice(i, i + _SWEEP_CHUNK)
            _, _, M, v = self._build(*self._phases_szego(times[sl]))
            out[sl] = _taylor_coefficients(M, v, self.row, n_out)
        return out

    def evaluate(self, t: float, z: complex) -> complex:
        return self.propagator(t).evaluate(z)

    # -- hierarchy -------------------------------------------------------

    def hierarchy_g(self, a, y):
        """The scalar function g(s) = sum a_k y_k J^{y_k}(u0) / (1 + y_k s)."""
        a, y = _check_weights(a, y)
        J = np.array([j_functional(self.model, yk) for yk in y])
        c = a * y * J

        def g(s):
            s = np.asarray(s, dtype=float)
            return np.sum(c[:, None] / (1 + y[:, None] * s.ravel()[None, :]), axis=0).reshape(s.shape)

        return g

    def hierarchy_coefficients(self, t: float, a, y, n_out: int) -> HardyFunction:
        g = self.hierarchy_g(a, y)
        ph = 2 * t * g(self.spec_H.eigenvalues)[None, :]
        pk = -2 * t * g(self.spec_K.eigenvalues)[None, :]
        _, _, M, v = self._build(ph, pk)
        return HardyFunction(_taylor_coefficients(M, v, self.row, n_out)[0])

    # -- torus map -------------------------------------------------------

    def joint_spectrum(self, radius: float = CLUSTER_RADIUS) -> np.ndarray:
        return joint_spectrum(self.model, radius)

    def phi(self, omega: AngleAssignment, n_out: int, radius: float = CLUSTER_RADIUS) -> HardyFunction:
        ph = -omega(self.spec_H.eigenvalues, radius)[None, :]
        pk = omega(self.spec_K.eigenvalues, radius)[None, :]
        _, _, M, v = self._build(ph, pk)
        return HardyFunction(_taylor_coefficients(M, v, self.row, n_out)[0])


def _check_weights(a, y):
    a = np.atleast_1d(np.asarray(a, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if a.shape != y.shape:
        raise ValueError("weights and parameters must have the same length")
    if np.any(y <= 0):
        raise ValueError("hierarchy parameters y_k must be positive")
    if np.unique(y).size != y.size:
        raise ValueError("hierarchy parameters y_k must be pairwise distinct")
    return a, y


def _taylor_coefficients(M, v, row, n_out: int) -> np.ndarray:
    """c_n = row . M^n v for n < n_out, batched over the leading axis.

    Small matrices use doubling (X <- [X, M^{2^k} X]), which needs only
    log2(n_out) products; large ones iterate the matrix-vector product.
    """
    T, r, _ = M.shape
    if n_out <= 0:
        return np.zeros((T, 0), dtype=complex)
    if r <= 32:
        X = v[:, :, None]
        P = M
        while X.shape[2] < n_out:
            X = np.concatenate([X, P @ X], axis=2)
            if X.shape[2] < n_out:
                P = P @ P
        return np.einsum("r,trn->tn", row, X[:, :, :n_out])
    out = np.empty((T, n_out), dtype=complex)
    x = v.copy()
    for n in range(n_out):
        out[:, n] = x @ row
        x = np.einsum("tij,tj->ti", M, x)
    return out


def _solver(u0, N=None, mode="truncated") -> ExplicitSolver:
    if isinstance(u0, ExplicitSolver):
        return u0
    if isinstance(u0, (HankelModel, ReducedModel)):
        return ExplicitSolver(u0)
    model = build_hankel(u0, N)
    if mode == "reduced":
        return ExplicitSolver(reduce(model))
    if mode != "truncated":
        raise ValueError(f"unknown mode {mode!r}")
    return ExplicitSolver(model)


def _default_n_out(u0, n_out):
    if n_out is not None:
        return n_out
    if isinstance(u0, (HankelModel, ReducedModel, ExplicitSolver)):
        raise ValueError("n_out is required when passing a model")
    return np.asarray(u0.coeffs if isinstance(u0, HardyFunction) else u0).size


def build_propagator(u0, t: float, N: int | None = None, mode: str = "truncated") -> Propagator:
    """Propagator (E_H, E_K, M, v) of the cubic Szego flow at time t."""
    return _solver(u0, N, mode).propagator(t)


def evolve_explicit(u0, t: float, n_out: int | None = None, N: int | None = None,
                    mode: str = "truncated") -> HardyFunction:
    """First ``n_out`` Fourier coefficients of the cubic Szego solution at time t."""
    n_out = _default_n_out(u0, n_out)
    return _solver(u0, N, mode).coefficients(t, n_out)


def eval_explicit(u0, t: float, z: complex, N: int | None = None, mode: str = "truncated") -> complex:
    """Holomorphic extension u(t, z) at a point of the open disc."""
    if abs(z) > 1 - 1e-6:
        raise ValueError(f"|z| = {abs(z)} is too close to the unit circle")
    return _solver(u0, N, mode).evaluate(t, z)


def evolve_hierarchy(u0, t: float, a, y, n_out: int | None = None, N: int | None = None,
                     mode: str = "truncated") -> HardyFunction:
    """Solution at time t of the flow generated by sum_k a_k J^{y_k}."""
    n_out = _default_n_out(u0, n_out)
    a, y = _check_weights(a, y)
    solver = _solver(u0, N, mode)
    if a.size == 0 or not np.any(a):
        return solver.coefficients(0.0, n_out)
    return solver.hierarchy_coefficients(t, a, y, n_out)


def quasip_phi(model, omega: AngleAssignment, n_out: int, radius: float = CLUSTER_RADIUS) -> HardyFunction:
    """The torus map Phi(omega) evaluated through its Taylor coefficients."""
    return _solver(model).phi(omega, n_out, radius)


def solve_angle_system(model, omega: AngleAssignment, y=None, cond_max: float = 1e12,
                       resid_tol: float = 1e-10) -> np.ndarray:
    """Weights a_k with omega(s) = -2 sum_k a_k y_k J^{y_k}(u0) / (1 + y_k s) on the spectrum.

    Default parameters are y_k = k. Raises SpectralError when the Cauchy-type
    matrix is too ill-conditioned or the residual is too large.
    """
    solver = _solver(model)
    s = omega.points
    n = s.size
    y = np.arange(1, n + 1, dtype=float) if y is None else np.asarray(y, dtype=float)
    if y.size != n:
        raise ValueError(f"need {n} parameters y_k, one per spectral point, got {y.size}")
    _check_weights(np.zeros(n), y)
    J = np.array([j_functional(solver.model, yk) for yk in y])
    C = -2 * (y * J)[None, :] / (1 + y[None, :] * s[:, None])
    cond = np.linalg.cond(C)
    if not np.isfinite(cond) or cond > cond_max:
        raise SpectralError(f"angle system is near-singular (condition number {cond:.3g})")
    a = np.linalg.solve(C, omega.angles)
    resid = np.max(np.abs(C @ a - omega.angles)) if n else 0.0
    if resid > resid_tol:
        raise SpectralError(f"angle system residual {resid:.3g} exceeds {resid_tol:g}")
    return a
