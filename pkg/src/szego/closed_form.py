"""Closed-form solution from u0 = e^{ix} + eps, which stays in V(3)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def omega_tilde(eps: float) -> float:
    """Frequency (eps/2) sqrt(4 + eps^2) of the internal oscillation."""
    return 0.5 * eps * np.sqrt(4 + eps**2)


def t_eps(eps: float) -> float:
    """Time pi / (2 omega) at which |p| is largest."""
    return np.pi / (2 * omega_tilde(eps))


@dataclass(frozen=True)
class V3ClosedForm:
    """u(t, x) = (a e^{ix} + b) / (1 - p e^{ix})."""

    a: complex
    b: complex
    p: complex
    eps: float
    t: float

    def __post_init__(self):
        if not abs(self.p) < 1:
            raise ValueError(f"|p| = {abs(self.p)} is not < 1")
        if self.a == 0 or self.a + self.b * self.p == 0:
            raise ValueError("degenerate triple: need a != 0 and a + b p != 0")

    def coefficients(self, n: int) -> np.ndarray:
        """c_0 = b, c_k = (a + b p) p^{k-1} for k >= 1."""
        c = np.zeros(n, dtype=complex)
        c[0] = self.b
        if n > 1:
            c[1:] = (self.a + self.b * self.p) * self.p ** np.arange(n - 1)
        return c

    def symbol(self):
        """(A, B) in ascending order, i.e. A = b + a z, B = 1 - p z."""
        return np.array([self.b, self.a]), np.array([1.0, -self.p])


def closed_form_v3(eps: float, t: float) -> V3ClosedForm:
    if eps == 0:
        return V3ClosedForm(np.exp(-1j * t), 0.0, 0.0, 0.0, t)
    w = omega_tilde(eps)
    root = np.sqrt(4 + eps**2)
    a = np.exp(-1j * t * (1 + eps**2))
    b = np.exp(-1j * t * (1 + eps**2 / 2)) * (eps * np.cos(w * t) - 1j * (2 + eps**2) / root * np.sin(w * t))
    p = -2j / root * np.sin(w * t) * np.exp(-1j * t * eps**2 / 2)
    return V3ClosedForm(complex(a), complex(b), complex(p), eps, t)


def momentum_density_at_t_eps(eps: float, n) -> np.ndarray:
    """mu_n(t_eps) = n eps^4 / (4 + eps^2)^2 (1 - eps^2 / (4 + eps^2))^{n-1}."""
    n = np.asarray(n, dtype=float)
    q = 1 - eps**2 / (4 + eps**2)
    return n * eps**4 / (4 + eps**2) ** 2 * q ** (n - 1)
