"""
Fixed-step RK4 integration in Fourier coefficients.

This is the independent oracle for the explicit formulas. The state keeps N
modes; the cubic nonlinearity is evaluated on a grid of at least 3N - 2
points, which holds the full product |u|^2 u without aliasing, and then
truncated back to N. That truncation is the only modeling error.

States may carry leading batch axes: ``rk4_states`` integrates several
data with the same N in lockstep.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import IntegrationError
from .hankel import build_hankel, j_functional, resolvent_one
from .hardy import HardyFunction, as_coeffs, cubic_term, energy, momentum

DEFAULT_Y = (0.5, 1.0, 2.0)


@dataclass(frozen=True)
class FlowObservation:
    t: float
    mass: float
    momentum: float
    energy: float
    j_values: tuple
    spectrum_drift: float
    state: np.ndarray | None = field(default=None, repr=False, compare=False)
    spectra: tuple | None = field(default=None, repr=False, compare=False)


def _spectra(u):
    m = build_hankel(u)
    return np.linalg.eigvalsh(m.H2)[::-1], np.linalg.eigvalsh(m.K2)[::-1]


def observe(u, y_list=DEFAULT_Y, t: float = 0.0, reference=None, keep_state: bool = False,
            spectra: bool = True) -> FlowObservation:
    """Conserved quantities of u, all computed from scratch.

    ``reference`` is an earlier observation (or a pair of eigenvalue arrays);
    the spectrum drift is the largest eigenvalue change of H^2 and K^2.
    """
    c = as_coeffs(u)
    model = build_hankel(c)
    js = tuple(j_functional(model, y) for y in y_list)
    drift = 0.0
    spec = None
    if spectra:
        spec = (np.linalg.eigvalsh(model.H2)[::-1], np.linalg.eigvalsh(model.K2)[::-1])
        if reference is not None:
            ref = reference.spectra if isinstance(reference, FlowObservation) else reference
            drift = max(float(np.max(np.abs(a - b))) for a, b in zip(spec, ref))
    return FlowObservation(
        t=float(t),
        mass=float(np.vdot(c, c).real),
        momentum=momentum(c),
        energy=energy(c),
        j_values=js,
        spectrum_drift=drift,
        state=c.copy() if keep_state else None,
        spectra=spec,
    )


def szego_field(c: np.ndarray) -> np.ndarray:
    """-i Pi(|u|^2 u) truncated to the last-axis length of c."""
    n = c.shape[-1]
    m = sfft.next_fast_len(3 * n - 2)
    vals = sfft.ifft(c, n=m, axis=-1) * m
    out = sfft.fft(np.abs(vals) ** 2 * vals, axis=-1)[..., :n] / m
    return -1j * out


def szego_field_direct(c: np.ndarray) -> np.ndarray:
    """Same as szego_field via exact double convolution (1-D only)."""
    return -1j * cubic_term(c, c.size)


def hierarchy_field_sum(c: np.ndarray, a, y) -> np.ndarray:
    """sum_k a_k 2 i y_k w_k H_u(w_k), truncated to len(c)."""
    n = c.size
    model = build_hankel(c)
    out = np.zeros(n, dtype=complex)
    for ak, yk in zip(a, y):
        if ak == 0:
            continue
        w = resolvent_one(model.H2, yk)
        out += ak * 2j * yk * np.convolve(w, model.apply_H(w))[:n]
    return out


def _steps(t_end: float, dt: float):
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    steps = int(round(t_end / dt))
    return steps, (t_end / steps if steps else 0.0)


def _integrate(field_fn, c, steps: int, h: float, every: int | None, on_record):
    """Classical RK4; ``on_record(i, state)`` at steps divisible by ``every`` and at the end."""
    for i in range(1, steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = field_fn(c)
            k2 = field_fn(c + 0.5 * h * k1)
            k3 = field_fn(c + 0.5 * h * k2)
            k4 = field_fn(c + h * k3)
            new = c + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(new)):
            raise IntegrationError(f"non-finite state after step {i}", last_good_t=(i - 1) * h)
        c = new
        if every and (i % every == 0 or i == steps):
            on_record(i, c)
    return c


def _rk4(field_fn, u0, t_end: float, dt: float, observe_every: int | None, y_list,
         keep_states: bool, spectra: bool):
    c = np.array(as_coeffs(u0), dtype=complex)
    steps, h = _steps(t_end, dt)
    obs = []
    first = None
    if observe_every:
        first = observe(c, y_list, 0.0, keep_state=keep_states, spectra=spectra)
        obs.append(first)

    def record(i, state):
        obs.append(observe(state, y_list, i * h, reference=first, keep_state=keep_states, spectra=spectra))

    c = _integrate(field_fn, c, steps, h, observe_every, record)
    return HardyFunction(c), obs


def rk4_states(u0s, t_end: float, dt: float, record_every: int):
    """Batched cubic Szego RK4 without observations.

    ``u0s`` has shape (..., N). Returns (times, states) with states of shape
    (len(times), ..., N), recorded at t = 0, every ``record_every`` steps,
    and at t_end.
    """
    c = np.array(u0s, dtype=complex)
    steps, h = _steps(t_end, dt)
    times, states = [0.0], [c.copy()]

    def record(i, state):
        times.append(i * h)
        states.append(state.copy())

    _integrate(szego_field, c, steps, h, record_every, record)
    return np.array(times), np.array(states)


def rk4_szego(u0, t_end: float, dt: float, observe_every: int | None = None, y_list=DEFAULT_Y,
              keep_states: bool = False, spectra: bool = True):
    """Integrate i u' = Pi(|u|^2 u) with classical RK4.

    The step is adjusted to t_end / round(t_end / dt) so the run lands on
    t_end. Observations are taken every ``observe_every`` steps and at the end.
    """
    return _rk4(szego_field, u0, t_end, dt, observe_every, y_list, keep_states, spectra)


def rk4_hierarchy(u0, t_end: float, dt: float, a, y, observe_every: int | None = None,
                  y_list=None, keep_states: bool = False, spectra: bool = True):
    """Integrate u' = sum_k a_k X_{J^{y_k}}(u) with classical RK4."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if a.shape != y.shape:
        raise ValueError("weights and parameters must have the same length")
    if np.any(y <= 0):
        raise ValueError("hierarchy parameters y_k must be positive")
    y_list = tuple(y) if y_list is None else y_list
    return _rk4(lambda c: hierarchy_field_sum(c, a, y), u0, t_end, dt, observe_every, y_list,
                keep_states, spectra)


def max_drift(observations) -> dict:
    """Largest deviation from the first observation for each conserved quantity."""
    o0 = observations[0]
    out = {
        "mass": max(abs(o.mass - o0.mass) for o in observations),
        "momentum": max(abs(o.momentum - o0.momentum) for o in observations),
        "energy": max(abs(o.energy - o0.energy) for o in observations),
        "spectrum": max(o.spectrum_drift for o in observations),
    }
    for k in range(len(o0.j_values)):
        out[f"j{k}"] = max(abs(o.j_values[k] - o0.j_values[k]) for o in observations)
    return out
