"""
Experiment drivers behind the command line: instability of H^s norms along
the V(3) family e^{ix} + eps, explicit-versus-RK4 comparison, the
quasiperiodicity probe, and the hierarchy comparison.

Each driver returns plain rows (dicts) plus a summary dict; writing files is
left to the caller.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .closed_form import closed_form_v3, omega_tilde, t_eps
from .direct import max_drift, rk4_hierarchy, rk4_states, rk4_szego
from .errors import SpectralError, TruncationError
from .explicit import ExplicitSolver
from .hankel import build_hankel, reduce, vd_membership
from .hardy import (
    RationalSymbol,
    as_coeffs,
    default_modes,
    momentum,
    norm_sobolev,
    rational_to_coeffs,
)


def random_rational(rng: np.random.Generator, d: int, max_inv_modulus: float = 0.7,
                    min_inv_modulus: float = 0.1) -> RationalSymbol:
    """Random element of V(d) whose poles have inverse moduli in the given range."""
    half = d // 2
    n_poles = half
    q = rng.uniform(min_inv_modulus, max_inv_modulus, n_poles) * np.exp(2j * np.pi * rng.random(n_poles))
    B = np.array([1.0 + 0j])
    for qj in q:
        B = np.convolve(B, [1.0, -qj])
    deg_a = half if d % 2 else half - 1
    A = (rng.standard_normal(deg_a + 1) + 1j * rng.standard_normal(deg_a + 1)) / np.sqrt(2 * (deg_a + 1))
    if d % 2:
        A[-1] = A[-1] if abs(A[-1]) > 0.2 else 0.5
    return RationalSymbol(A, B, d)


# --------------------------------------------------------------------------
# instability along u0 = e^{ix} + eps


@dataclass
class ExperimentConfig:
    epsilons: list
    s: float = 1.0
    N: int | None = None  # None: grow until the conserved tails are captured
    t_grid: list | None = None  # None: use t_eps for each eps
    tail_tol: float = 1e-8
    trajectory_samples: int = 400
    workers: int = 1
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.s < 0:
            raise ValueError("Sobolev index must be nonnegative")
        if self.N is not None and self.N < 64:
            raise ValueError("N must be at least 64")
        if any(e == 0 for e in self.epsilons):
            raise ValueError("epsilons must be nonzero")


def _auto_coefficients(solver: ExplicitSolver, t: float, mass: float, mom: float, tol: float = 1e-11,
                       start: int = 1024, cap: int = 1 << 22):
    n = start
    while True:
        c = solver.coefficients(t, n).coeffs
        mass_tail = mass - float(np.vdot(c, c).real)
        mom_tail = mom - momentum(c)
        if (mass_tail < tol and mom_tail < tol) or n >= cap:
            return c, mass_tail
        n *= 2


def required_modes(c_long: np.ndarray, mass: float, tail_tol: float) -> int:
    """Smallest N whose discarded mass is at most ``tail_tol``."""
    kept = np.cumsum(np.abs(c_long) ** 2)
    ok = np.nonzero(mass - kept <= tail_tol)[0]
    return int(ok[0]) + 1 if ok.size else c_long.size


def instability_point(eps: float, s: float, N: int | None, tail_tol: float, t: float | None = None) -> dict:
    u0 = np.array([eps, 1.0], dtype=complex)
    solver = ExplicitSolver(reduce(build_hankel(u0)))
    t = t_eps(eps) if t is None else t
    mass = 1 + eps**2
    mom = 1.0  # Tr K^2 of e^{ix} + eps
    if N is None:
        c, tail = _auto_coefficients(solver, t, mass, mom)
    else:
        c = solver.coefficients(t, N).coeffs
        tail = mass - float(np.vdot(c, c).real)
    row = {"eps": eps, "t": t, "modes": c.size, "tail_mass": tail}
    if tail > tail_tol:
        c_long, _ = _auto_coefficients(solver, t, mass, mom)
        need = required_modes(c_long, mass, tail_tol)
        raise TruncationError(
            f"eps={eps}: {c.size} modes leave tail mass {tail:.3g} > {tail_tol:g}; need N >= {need}",
            required_modes=need,
        )
    n = np.arange(c.size)
    mu = n * np.abs(c) ** 2
    q = 1 - eps**2 / (4 + eps**2)
    brute = n * q ** (n - 1.0)
    cf = closed_form_v3(eps, t).coefficients(c.size)
    row.update(
        hs_norm=norm_sobolev(c, s),
        argmax_mu=int(np.argmax(mu[1:]) + 1),
        argmax_mu_exact=int(np.argmax(brute[1:]) + 1),
        momentum_sum=float(np.sum(mu)),
        closed_form_distance=float(np.linalg.norm(c - cf)),
    )
    return row


def p_trajectory(eps: float, samples: int = 400) -> list:
    """p(t) on [0, 2 pi / omega], read off the explicit solution as c_2 / c_1."""
    solver = ExplicitSolver(reduce(build_hankel(np.array([eps, 1.0]))))
    times = np.linspace(0, 2 * np.pi / omega_tilde(eps), samples)
    c = solver.sweep(times, 3)
    rows = []
    for t, ck in zip(times, c):
        p = ck[2] / ck[1]
        pc = closed_form_v3(eps, t).p
        rows.append({"eps": eps, "t": t, "p_re": p.real, "p_im": p.imag, "p_abs": abs(p),
                     "p_closed_re": pc.real, "p_closed_im": pc.imag})
    return rows


def _point_job(args):
    eps, cfg_s, cfg_N, tail_tol = args
    try:
        return instability_point(eps, cfg_s, cfg_N, tail_tol), None
    except TruncationError as exc:
        return None, (eps, str(exc), exc.required_modes)


def run_instability(config: ExperimentConfig):
    """Rows per eps, p-trajectory rows, and a summary with the log-log slope."""
    jobs = [(float(e), config.s, config.N, config.tail_tol) for e in config.epsilons]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as ex:
            results = list(ex.map(_point_job, jobs))
    else:
        results = [_point_job(j) for j in jobs]
    rows = [r for r, _ in results if r is not None]
    refused = [{"eps": e, "reason": msg, "required_modes": need} for _, (e, msg, need) in
               ((r, f) for r, f in results if f is not None)]
    traj = []
    for e in config.epsilons:
        traj.extend(p_trajectory(float(e), config.trajectory_samples))
    slope = None
    if len(rows) >= 2:
        x = np.log([1 / abs(r["eps"]) for r in rows])
        y = np.log([r["hs_norm"] for r in rows])
        slope = float(np.polyfit(x, y, 1)[0])
    summary = {"slope": slope, "expected_slope": 2 * config.s - 1, "refused": refused,
               "points": len(rows)}
    return rows, traj, summary


INSTABILITY_COLUMNS = ["eps", "t", "modes", "hs_norm", "argmax_mu", "argmax_mu_exact",
                       "momentum_sum", "closed_form_distance", "tail_mass"]
TRAJECTORY_COLUMNS = ["eps", "t", "p_re", "p_im", "p_abs", "p_closed_re", "p_closed_im"]


# --------------------------------------------------------------------------
# explicit formula versus RK4


def _padded(c0: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(max(n, c0.size), dtype=complex)
    out[: c0.size] = c0
    return out


def run_compare(u0, t_end: float, dt: float, grid_step: float = 0.1, y_list=(0.5, 1.0, 2.0),
                modes: int | None = None, tail_tol: float = 1e-15, spectra: bool = True):
    """Distance between the explicit solution and RK4 on a time grid.

    The datum is padded to ``modes`` coefficients; by default just enough
    that the exact orbit keeps less than ``tail_tol`` of L^2 norm beyond
    them. The explicit side is sampled on twice as many modes so whatever
    RK4 cannot represent counts against it.
    """
    c0 = as_coeffs(u0)
    every = max(1, int(round(grid_step / dt)))
    solver = ExplicitSolver(c0)
    if modes is None:
        grid = np.linspace(0.0, t_end, max(2, int(round(t_end / grid_step)) + 1))
        modes = orbit_modes(solver, grid, tail_tol)
    c = _padded(c0, modes)
    N = c.size
    _, obs = rk4_szego(c, t_end, dt, observe_every=every, y_list=y_list, keep_states=True,
                       spectra=spectra)
    times = np.array([o.t for o in obs])
    exact = solver.sweep(times, 2 * N)
    o0 = obs[0]
    rows = []
    for o, ce in zip(obs, exact):
        diff = ce.copy()
        diff[:N] -= o.state
        rows.append({
            "t": o.t,
            "l2_distance": float(np.linalg.norm(diff)),
            "mass_drift": abs(o.mass - o0.mass),
            "momentum_drift": abs(o.momentum - o0.momentum),
            "energy_drift": abs(o.energy - o0.energy),
            "j_drift": max(abs(a - b) for a, b in zip(o.j_values, o0.j_values)),
            "spectrum_drift": o.spectrum_drift,
        })
    summary = {"max_distance": max(r["l2_distance"] for r in rows), "drifts": max_drift(obs),
               "modes": N, "steps": int(round(t_end / dt))}
    return rows, summary


COMPARE_COLUMNS = ["t", "l2_distance", "mass_drift", "momentum_drift", "energy_drift", "j_drift",
                   "spectrum_drift"]


def orbit_modes(orbit, times, tol: float, start: int = 64, cap: int = 1 << 14) -> int:
    """Smallest multiple of 64 whose L^2 tail stays below ``tol`` along the sampled orbit.

    ``orbit`` is an ExplicitSolver or a callable (times, n) -> coefficient rows.
    """
    sweep = orbit.sweep if isinstance(orbit, ExplicitSolver) else orbit
    n = start
    while n <= cap:
        c = sweep(times, 2 * n)
        tail = np.sqrt(np.cumsum(np.abs(c[:, ::-1]) ** 2, axis=1)[:, ::-1]).max(axis=0)
        ok = np.nonzero(tail[: n + 1] <= tol)[0]
        if ok.size:
            return int(64 * np.ceil(max(ok[0], 1) / 64))
        n *= 2
    raise TruncationError(f"orbit needs more than {cap} modes", required_modes=cap)


def run_oracle_batch(symbols, t_end: float = 10.0, dt: float = 1e-3, grid_step: float = 0.1,
                     tail_tol: float = 1e-15, halvings: int = 1):
    """Explicit formula against batched RK4 for several rational data.

    N is shared by the batch and chosen so that the exact orbit of every
    datum loses less than ``tail_tol`` in L^2 beyond N modes. RK4 is run at
    dt, dt/2, ... (``halvings`` extra runs). Returns (rows, summary) where
    each row holds one datum's max distance per step size and the
    successive reduction ratios.
    """
    grid = np.linspace(0.0, t_end, int(round(t_end / grid_step)) + 1)
    solvers, mode_counts = [], []
    for r in symbols:
        c0 = rational_to_coeffs(r, default_modes(r, 1e-17))
        sol = ExplicitSolver(reduce(build_hankel(c0)))
        solvers.append(sol)
        mode_counts.append(orbit_modes(sol, grid, tail_tol))
    N = max(mode_counts)
    data = np.array([rational_to_coeffs(r, N).coeffs for r in symbols])
    exact = [sol.sweep(grid, 2 * N) for sol in solvers]
    gaps = []
    step = dt
    for _ in range(halvings + 1):
        every = int(round(grid_step / step))
        times, states = rk4_states(data, t_end, step, every)
        if times.size != grid.size or not np.allclose(times, grid, atol=1e-9):
            raise ValueError("grid_step must be a multiple of dt dividing t_end")
        g = []
        for j, ex in enumerate(exact):
            diff = ex.copy()
            diff[:, :N] -= states[:, j]
            g.append(float(np.linalg.norm(diff, axis=1).max()))
        gaps.append(g)
        step /= 2
    gaps = np.array(gaps)
    rows = []
    for j, r in enumerate(symbols):
        row = {"datum": j, "d": r.d, "modes_needed": mode_counts[j]}
        for k in range(halvings + 1):
            row[f"gap_{k}"] = gaps[k, j]
        for k in range(halvings):
            row[f"ratio_{k}"] = gaps[k, j] / gaps[k + 1, j]
        rows.append(row)
    summary = {"modes": N, "max_gap": float(gaps[0].max()),
               "ratios": [[row[f"ratio_{k}"] for row in rows] for k in range(halvings)]}
    return rows, summary


def random_oracle_data(seed: int, count: int = 10, degrees=(3, 4)):
    rng = np.random.default_rng(seed)
    return [random_rational(rng, degrees[i % len(degrees)]) for i in range(count)]


# --------------------------------------------------------------------------
# hierarchy: explicit formula versus RK4


def run_hierarchy(u0, a, y, t_end: float, dt: float, grid_step: float = 0.1,
                  modes: int | None = None, tail_tol: float = 1e-15):
    """Explicit hierarchy formula against RK4 on the summed Hamiltonian field."""
    c0 = as_coeffs(u0)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    every = max(1, int(round(grid_step / dt)))
    solver = ExplicitSolver(c0)

    def exact(t, n):
        return solver.hierarchy_coefficients(t, a, y, n).coeffs

    if modes is None:
        grid = np.linspace(0.0, t_end, max(2, int(round(t_end / grid_step)) + 1))
        modes = orbit_modes(lambda ts, n: np.array([exact(t, n) for t in ts]), grid, tail_tol)
    c = _padded(c0, modes)
    N = c.size
    _, obs = rk4_hierarchy(c, t_end, dt, a, y, observe_every=every, keep_states=True)
    o0 = obs[0]
    rows = []
    for o in obs:
        diff = exact(o.t, 2 * N).copy()
        diff[:N] -= o.state
        rows.append({
            "t": o.t,
            "l2_distance": float(np.linalg.norm(diff)),
            "mass_drift": abs(o.mass - o0.mass),
            "j_drift": max(abs(p - q) for p, q in zip(o.j_values, o0.j_values)),
            "spectrum_drift": o.spectrum_drift,
        })
    summary = {"max_distance": max(r["l2_distance"] for r in rows), "drifts": max_drift(obs),
               "modes": N}
    return rows, summary


HIERARCHY_COLUMNS = ["t", "l2_distance", "mass_drift", "j_drift", "spectrum_drift"]


# --------------------------------------------------------------------------
# quasiperiodicity probe


def _modes_for_orbit(solver: ExplicitSolver, times, mass: float, tol: float, start: int = 64,
                     cap: int = 1 << 16) -> int:
    probe = times[:: max(1, times.size // 200)]
    n = start
    while n < cap:
        c = solver.sweep(probe, n)
        tails = mass - np.sum(np.abs(c) ** 2, axis=1)
        if np.max(tails) < tol:
            return n
        n *= 2
    return cap


def run_quasip(u0, horizon: float, delta: float, s: float = 1.0, step: float | None = None,
               windows: int = 10, membership_checks: int = 20, growth_tol: float = 1e-2,
               tail_tol: float = 1e-13):
    """Sample u(t) on [0, horizon] with the explicit formula and probe quasiperiodicity.

    Reports sup_t ||u(t)||_{H^s}, windowed maxima, the best return to u0 in
    H^1 after the orbit has left the 2*delta ball, and V(d) membership on an
    evenly spaced subsample.
    """
    c0 = as_coeffs(u0)
    d0 = vd_membership(c0)
    if d0 is None:
        raise SpectralError("datum is not numerically of finite rank")
    reduced = reduce(build_hankel(c0))
    solver = ExplicitSolver(reduced)
    sigma = solver.joint_spectrum()
    fmax = float(np.max(sigma)) if sigma.size else 1.0
    if step is None:
        step = 2 * np.pi / (100 * max(fmax, 1e-3))
    times = np.arange(0.0, horizon + 0.5 * step, step)
    mass = float(np.vdot(c0, c0).real)
    n_out = max(_modes_for_orbit(solver, times, mass, tail_tol), c0.size)
    ref = np.zeros(n_out, dtype=complex)
    ref[: min(n_out, c0.size)] = c0[:n_out]
    k = np.arange(n_out, dtype=float)
    w_s = (1 + k**2) ** s
    w_1 = 1 + k**2
    hs = np.empty(times.size)
    dist = np.empty(times.size)
    chunk = 512
    for i in range(0, times.size, chunk):
        c = solver.sweep(times[i : i + chunk], n_out)
        hs[i : i + chunk] = np.sqrt(np.sum(np.abs(c) ** 2 * w_s, axis=1))
        dist[i : i + chunk] = np.sqrt(np.sum(np.abs(c - ref) ** 2 * w_1, axis=1))

    edges = np.linspace(0, horizon, windows + 1)
    wmax = [float(hs[(times >= lo) & (times <= hi)].max()) for lo, hi in zip(edges[:-1], edges[1:])]
    stable = max(wmax[1:], default=wmax[0]) <= wmax[0] * (1 + growth_tol)

    # a return only counts once the orbit has left the 2*delta ball and started to come back
    best_t, best_d = None, None
    left = np.nonzero(dist > 2 * delta)[0]
    if left.size:
        falling = np.nonzero(np.diff(dist[left[0]:]) < 0)[0]
        if falling.size:
            j0 = left[0] + falling[0]
            j = j0 + int(np.argmin(dist[j0:]))
            best_t, best_d = float(times[j]), float(dist[j])

    check_idx = np.unique(np.linspace(0, times.size - 1, membership_checks).astype(int))
    check_c = solver.sweep(times[check_idx], n_out)
    memberships = [vd_membership(ci) for ci in check_c]

    rows = [{"t": t, "hs_norm": h, "h1_distance": dd} for t, h, dd in zip(times, hs, dist)]
    summary = {
        "d": d0,
        "spectrum": sigma.tolist(),
        "modes": n_out,
        "step": step,
        "sup_hs": float(hs.max()),
        "hs_u0": float(hs[0]),
        "window_max": wmax,
        "no_growth": bool(stable),
        "recurrence_t": best_t,
        "recurrence_distance": best_d,
        "recurrence_found": best_d is not None and best_d <= delta,
        "membership": memberships,
        "membership_constant": all(m == d0 for m in memberships),
    }
    return rows, summary


QUASIP_COLUMNS = ["t", "hs_norm", "h1_distance"]


def sample_rational_coeffs(seed: int, d: int = 3, tol: float = 1e-12):
    r = random_rational(np.random.default_rng(seed), d)
    return r, rational_to_coeffs(r, default_modes(r, tol))
