"""
Truncated elements of the Hardy space L^2_+(T).

A function u = sum_k c_k e^{ikx} with k >= 0 is stored by its first N Fourier
coefficients; coefficients of index >= N are zero by convention, so every
HardyFunction is a trigonometric polynomial. The inner product uses the
normalized Haar measure, hence ||e^{ikx}|| = 1.

Two-sided sequences (symbols of Toeplitz operators, products with conjugates)
are passed around as ``(coeffs, lowest)`` where ``coeffs[j]`` is the
coefficient of frequency ``lowest + j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import NotInVdError, SymbolError

TAU_ROOT = 1e-9


@dataclass(frozen=True)
class HardyFunction:
    """First N nonnegative-frequency Fourier coefficients of u in L^2_+."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size == 0:
            c = np.zeros(1, dtype=complex)
        if not np.all(np.isfinite(c)):
            raise ValueError("HardyFunction coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return self.coeffs.size

    def __len__(self):
        return self.coeffs.size

    def padded(self, n: int) -> np.ndarray:
        """Coefficients zero-padded (or cut) to length ``n``."""
        out = np.zeros(n, dtype=complex)
        m = min(n, self.N)
        out[:m] = self.coeffs[:m]
        return out

    def truncated(self, n: int) -> "HardyFunction":
        return HardyFunction(self.padded(n))

    def __call__(self, z):
        """Holomorphic extension sum_k c_k z^k, evaluated for |z| <= 1."""
        return np.polynomial.polynomial.polyval(z, self.coeffs)


def as_coeffs(u) -> np.ndarray:
    """Coefficient array of a HardyFunction or array-like."""
    if isinstance(u, HardyFunction):
        return u.coeffs
    return HardyFunction(u).coeffs


@dataclass(frozen=True)
class RationalSymbol:
    """u = A(e^{ix}) / B(e^{ix}) with B(0) = 1 and no pole in the closed disc.

    Polynomials are stored with ascending coefficients. ``d`` is the index of
    the finite-rank manifold V(d) the symbol is declared to belong to.
    """

    A: np.ndarray
    B: np.ndarray
    d: int
    tau_root: float = field(default=TAU_ROOT, compare=False)

    def __post_init__(self):
        A = _trim(np.array(self.A, dtype=complex).ravel())
        B = _trim(np.array(self.B, dtype=complex).ravel())
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise SymbolError("polynomial coefficients must be finite")
        if int(self.d) != self.d or self.d < 1:
            raise SymbolError(f"d must be a positive integer, got {self.d!r}")
        if B.size == 0 or abs(B[0] - 1) > self.tau_root:
            raise SymbolError("B must satisfy B(0) = 1")
        if A.size == 0:
            raise SymbolError("A is the zero polynomial; u = 0 lies in no V(d)")

        half = self.d // 2
        deg_a, deg_b = A.size - 1, B.size - 1
        if self.d % 2 == 0:
            if deg_a > half - 1 or deg_b != half:
                raise SymbolError(
                    f"d={self.d} requires deg A <= {half - 1} and deg B = {half}; "
                    f"got deg A = {deg_a}, deg B = {deg_b}"
                )
        elif deg_a != half or deg_b > half:
            raise SymbolError(
                f"d={self.d} requires deg A = {half} and deg B <= {half}; "
                f"got deg A = {deg_a}, deg B = {deg_b}"
            )

        zb = self.poles()
        if zb.size and np.min(np.abs(zb)) <= 1 + self.tau_root:
            raise SymbolError(
                f"B has a zero of modulus {np.min(np.abs(zb)):.6g} in the closed unit disc"
            )
        za = _roots(A)
        if za.size and zb.size:
            gap = np.min(np.abs(za[:, None] - zb[None, :]))
            if gap <= self.tau_root:
                raise SymbolError(f"A and B share a root (distance {gap:.3g})")

    def poles(self) -> np.ndarray:
        """Zeros of B (all of modulus > 1)."""
        return _roots(self.B)

    def decay_rate(self) -> float:
        """Largest |root(B)|^{-1}; the coefficients decay like this to the power k."""
        z = self.poles()
        return float(np.max(1 / np.abs(z))) if z.size else 0.0

    def __call__(self, z):
        P = np.polynomial.polynomial
        return P.polyval(z, self.A) / P.polyval(z, self.B)


def _trim(p: np.ndarray) -> np.ndarray:
    nz = np.nonzero(p)[0]
    return p[: nz[-1] + 1] if nz.size else p[:0]


def _roots(p: np.ndarray) -> np.ndarray:
    # companion-matrix eigenvalues
    return np.polynomial.polynomial.polyroots(p) if p.size > 1 else np.zeros(0, complex)


# --------------------------------------------------------------------------
# projections and products


def project_szego(coeffs, lowest: int = 0) -> HardyFunction:
    """Szego projector: keep the frequencies k >= 0 of a two-sided sequence."""
    c = np.asarray(coeffs, dtype=complex).ravel()
    if lowest > 0:
        c = np.concatenate([np.zeros(lowest, complex), c])
        lowest = 0
    return HardyFunction(c[-lowest:])


def conj_product(a, b):
    """Two-sided coefficients of a * conj(b) as ``(coeffs, lowest)``."""
    a, b = as_coeffs(a), as_coeffs(b)
    return np.convolve(a, np.conj(b[::-1])), -(b.size - 1)


def multiply(a, b) -> HardyFunction:
    """Product of two elements of L^2_+ (no projection needed), full length."""
    return HardyFunction(np.convolve(as_coeffs(a), as_coeffs(b)))


def inner(u, v) -> complex:
    """(u | v) = sum_k c_k(u) conj(c_k(v))."""
    a, b = as_coeffs(u), as_coeffs(v)
    n = min(a.size, b.size)
    return complex(np.vdot(b[:n], a[:n]))


def shift(u) -> HardyFunction:
    """Multiplication by e^{ix}."""
    return HardyFunction(np.concatenate([[0], as_coeffs(u)]))


def shift_adjoint(u) -> HardyFunction:
    """S^*: drop the constant term and shift frequencies down by one."""
    c = as_coeffs(u)
    return HardyFunction(c[1:] if c.size > 1 else np.zeros(1, complex))


def cubic_term(u, n_out: int | None = None) -> np.ndarray:
    """Pi(|u|^2 u) by exact double convolution.

    The full result has length 2N - 1; ``n_out`` truncates or zero-pads it.
    """
    c = as_coeffs(u)
    n = c.size
    uu = np.convolve(c, c)  # frequencies 0 .. 2N-2
    # coefficient k of uu * conj(u) is sum_m uu[k+m] conj(c[m]); pad so every k < 2N-1 is complete
    out = np.correlate(np.concatenate([uu, np.zeros(n - 1, complex)]), c, mode="valid")
    if n_out is None:
        return out
    res = np.zeros(n_out, dtype=complex)
    m = min(n_out, out.size)
    res[:m] = out[:m]
    return res


def cubic_szego_rhs(u, n_out: int | None = None) -> HardyFunction:
    """Right-hand side -i Pi(|u|^2 u) of the cubic Szego equation."""
    return HardyFunction(-1j * cubic_term(u, n_out))


# --------------------------------------------------------------------------
# norms and conserved densities


def norm_l2(u) -> float:
    return float(np.linalg.norm(as_coeffs(u)))


def norm_sobolev(u, s: float) -> float:
    """(sum_k |c_k|^2 (1 + k^2)^s)^{1/2}."""
    if not s >= 0:
        raise ValueError(f"Sobolev index must be nonnegative, got {s}")
    c = as_coeffs(u)
    k = np.arange(c.size, dtype=float)
    return float(np.sqrt(np.sum(np.abs(c) ** 2 * (1 + k**2) ** s)))


def norm_wiener(u) -> float:
    return float(np.sum(np.abs(as_coeffs(u))))


def momentum_density(u, n: int) -> float:
    """mu_n = n |c_n|^2."""
    c = as_coeffs(u)
    return float(n * abs(c[n]) ** 2) if 0 <= n < c.size else 0.0


def momentum(u) -> float:
    """sum_n n |c_n|^2, which equals Tr K_u^2."""
    c = as_coeffs(u)
    return float(np.sum(np.arange(c.size) * np.abs(c) ** 2))


def energy(u) -> float:
    """E(u) = (1/4) int |u|^4 = (1/4) ||u^2||^2 by Parseval."""
    uu = np.convolve(as_coeffs(u), as_coeffs(u))
    return 0.25 * float(np.sum(np.abs(uu) ** 2))


# --------------------------------------------------------------------------
# rational symbols <-> coefficients


def rational_to_coeffs(r: RationalSymbol, N: int) -> HardyFunction:
    """First N Taylor coefficients of A/B from the recurrence B * c = A."""
    zb = r.poles()
    if zb.size and np.min(np.abs(zb)) <= 1 + r.tau_root:
        raise SymbolError("B has a zero in the closed unit disc; the series does not converge")
    impulse = np.zeros(N, dtype=complex)
    impulse[0] = 1
    return HardyFunction(lfilter(r.A, r.B, impulse))


def default_modes(r: RationalSymbol, tol: float = 1e-12, cap: int = 1 << 20) -> int:
    """Smallest N with sum_{k>=N} |c_k|^2 (1 + k^2) < tol^2.

    The series is generated far enough that the geometric bound rho^k makes
    the omitted remainder negligible against ``tol^2``.
    """
    rho = r.decay_rate()
    if rho == 0:
        return max(r.A.size, 1)
    extra = int(np.ceil(np.log(tol**2 * 1e-6) / np.log(rho)))
    length = min(cap, extra + 8 * r.B.size + r.A.size + 16)
    c = rational_to_coeffs(r, length).coeffs
    k = np.arange(length, dtype=float)
    w = np.abs(c) ** 2 * (1 + k**2)
    tail = np.cumsum(w[::-1])[::-1]
    ok = np.nonzero(tail < tol**2)[0]
    if not ok.size:
        raise ValueError(f"no truncation below {cap} modes reaches tol={tol}")
    return max(int(ok[0]), 1)


def coeffs_to_rational(u, d: int, tol: float = 1e-10) -> RationalSymbol:
    """Recover (A, B) from Taylor coefficients of an element of V(d).

    Solves sum_j B_j c_{k-j} = 0 for k > deg A in least squares with
    singular-value cutoff ``tol * sigma_max`` and reads A from the low rows.
    Raises NotInVdError when the data does not fit V(d) to ``tol`` and
    SymbolError when the recovered pair violates the V(d) invariants.
    """
    c = as_coeffs(u)
    n_b = (d + 1) // 2
    n_a = d // 2 if d % 2 else d // 2 - 1
    L = c.size
    if L <= n_a + n_b + 1:
        raise NotInVdError(f"{L} coefficients cannot determine an element of V({d})")
    scale = np.linalg.norm(c)
    if scale == 0:
        raise NotInVdError("u = 0 lies in no V(d)")

    rows = np.arange(n_a + 1, L)
    if n_b:
        M = np.array([[c[k - j] if k - j >= 0 else 0 for j in range(1, n_b + 1)] for k in rows])
        sol, *_ = np.linalg.lstsq(M, -c[rows], rcond=tol)
        B = np.concatenate([[1.0], sol])
    else:
        B = np.ones(1, dtype=complex)
    resid = np.convolve(B, c)[n_a + 1 : L]
    if np.linalg.norm(resid) > tol * scale * max(1.0, np.linalg.norm(B)):
        raise NotInVdError(
            f"coefficients do not satisfy a recurrence of V({d}) "
            f"(relative residual {np.linalg.norm(resid) / scale:.3g})"
        )
    A = np.convolve(B, c)[: n_a + 1]
    # drop numerically-zero leading terms before the degree checks
    A = np.where(np.abs(A) > tol * scale, A, 0)
    B = np.where(np.abs(B) > tol * np.max(np.abs(B)), B, 0)
    r = RationalSymbol(A, B, d)
    err = np.linalg.norm(rational_to_coeffs(r, L).coeffs - c)
    if err > tol * max(1.0, scale):
        raise NotInVdError(f"round trip error {err:.3g} exceeds tolerance")
    return r
