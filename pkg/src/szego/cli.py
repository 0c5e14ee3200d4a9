"""
Command-line interface.

Every subcommand writes one CSV (to --out, or stdout) and, when --out is
given, a ``<out>.meta.json`` sidecar with the configuration, a summary and
library versions. The summary is also printed to stderr as JSON.

Exit status: 0 when the run meets its tolerance, 2 when it does not, 3 on
bad input (unreadable file, schema error, invalid flags).
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .direct import max_drift, rk4_szego
from .errors import InputError, IntegrationError, NotInVdError, SpectralError, SymbolError, TruncationError
from .experiments import (
    COMPARE_COLUMNS,
    HIERARCHY_COLUMNS,
    INSTABILITY_COLUMNS,
    QUASIP_COLUMNS,
    TRAJECTORY_COLUMNS,
    ExperimentConfig,
    orbit_modes,
    random_rational,
    run_compare,
    run_hierarchy,
    run_instability,
    run_quasip,
)
from .explicit import ExplicitSolver
from .hankel import build_hankel, reduce
from .hardy import RationalSymbol, default_modes
from .io import coeff_rows, datum_coeffs, encode_datum, parse_input, write_csv, write_metadata

EXIT_OK, EXIT_TOLERANCE, EXIT_INPUT = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _common(p, t_end=None, dt=None, tol=None):
    p.add_argument("--input", help="JSON datum; omitted: random V(3) datum drawn from --seed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--modes", type=int, help="truncation N (default: sized from the datum)")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    if t_end is not None:
        p.add_argument("--t-end", type=float, default=t_end)
    if dt is not None:
        p.add_argument("--dt", type=float, default=dt)
    if tol is not None:
        p.add_argument("--tol", type=float, default=tol)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="szego", description="Cubic Szego equation: explicit formula and numerical checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("evolve-explicit", help="u(t) from the explicit formula")
    _common(p, t_end=1.0, tol=1e-15)
    p.add_argument("--reduced", action="store_true", help="work on the range of H_u")

    p = sub.add_parser("evolve-direct", help="u(t) by RK4; fails if invariants drift")
    _common(p, t_end=1.0, dt=1e-3, tol=1e-8)

    p = sub.add_parser("compare", help="explicit formula versus RK4 on a time grid")
    _common(p, t_end=10.0, dt=1e-3, tol=1e-6)
    p.add_argument("--grid", type=float, default=0.1)

    p = sub.add_parser("instability", help="H^s growth along e^{ix} + eps at t_eps")
    _common(p, tol=1e-8)
    p.add_argument("--epsilons", type=_float_list, default=[2.0**-k for k in range(3, 7)])
    p.add_argument("--sobolev-s", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=400, help="points on each p(t) trajectory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--slope-tol", type=float, default=0.05)

    p = sub.add_parser("quasip", help="boundedness and recurrence of the explicit orbit")
    _common(p)
    p.add_argument("--horizon", type=float, default=1000.0)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--sobolev-s", type=float, default=1.0)

    p = sub.add_parser("hierarchy", help="explicit hierarchy formula versus RK4")
    _common(p, t_end=1.0, dt=1e-3, tol=1e-8)
    p.add_argument("--y", type=_float_list, default=None)
    p.add_argument("--a", type=_float_list, default=None)
    p.add_argument("--grid", type=float, default=0.1)
    return parser


def _datum(args):
    if args.input:
        return parse_input(args.input)
    return random_rational(np.random.default_rng(args.seed), 3)


def _coeffs(datum, modes) -> np.ndarray:
    if isinstance(datum, RationalSymbol) and modes is None:
        modes = default_modes(datum, 1e-16)
    return datum_coeffs(datum, modes).coeffs


def _emit(args, header, rows, summary, extra=None):
    config = {k: v for k, v in vars(args).items()}
    if args.out:
        path = write_csv(args.out, header, rows)
        write_metadata(path, config, summary)
        for suffix, (h, r) in (extra or {}).items():
            write_csv(str(path.with_suffix("")) + suffix, h, r)
    else:
        import csv
        from .io import fmt

        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(row[h]) for h in header])
    json.dump(summary, sys.stderr, default=lambda o: o.tolist() if hasattr(o, "tolist") else str(o))
    sys.stderr.write("\n")


def cmd_evolve_explicit(args):
    datum = _datum(args)
    c0 = _coeffs(datum, None)
    model = build_hankel(c0)
    solver = ExplicitSolver(reduce(model) if args.reduced else model)
    n_out = args.modes or orbit_modes(solver, np.array([args.t_end]), args.tol)
    c = solver.coefficients(args.t_end, n_out).coeffs
    summary = {"t": args.t_end, "modes": n_out, "mass0": float(np.vdot(c0, c0).real),
               "mass": float(np.vdot(c, c).real), "datum": encode_datum(datum)}
    _emit(args, ["n", "re", "im"], coeff_rows(c), summary)
    return EXIT_OK


def cmd_evolve_direct(args):
    datum = _datum(args)
    c0 = _coeffs(datum, args.modes)
    steps = max(1, int(round(args.t_end / args.dt)))
    u, obs = rk4_szego(c0, args.t_end, args.dt, observe_every=max(1, steps // 10))
    drifts = max_drift(obs)
    per_time = {k: v / max(args.t_end, 1.0) for k, v in drifts.items()}
    ok = all(v <= args.tol for v in per_time.values())
    summary = {"t": args.t_end, "modes": c0.size, "drift_per_unit_time": per_time, "pass": ok}
    _emit(args, ["n", "re", "im"], coeff_rows(u.coeffs), summary)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_compare(args):
    datum = _datum(args)
    c0 = _coeffs(datum, None)
    rows, summary = run_compare(c0, args.t_end, args.dt, grid_step=args.grid, modes=args.modes)
    summary["tol"] = args.tol
    summary["pass"] = summary["max_distance"] <= args.tol
    _emit(args, COMPARE_COLUMNS, rows, summary)
    return EXIT_OK if summary["pass"] else EXIT_TOLERANCE


def cmd_instability(args):
    if not args.epsilons or any(e == 0 for e in args.epsilons):
        raise InputError("epsilons must be a non-empty list of nonzero values", "--epsilons")
    try:
        config = ExperimentConfig(epsilons=args.epsilons, s=args.sobolev_s, N=args.modes,
                                  tail_tol=args.tol, trajectory_samples=args.samples, workers=args.workers)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    rows, traj, summary = run_instability(config)
    slope = summary["slope"]
    summary["pass"] = (not summary["refused"] and slope is not None
                       and abs(slope - summary["expected_slope"]) <= args.slope_tol)
    _emit(args, INSTABILITY_COLUMNS, rows, summary,
          extra={".trajectory.csv": (TRAJECTORY_COLUMNS, traj)})
    return EXIT_OK if summary["pass"] else EXIT_TOLERANCE


def cmd_quasip(args):
    datum = _datum(args)
    c0 = _coeffs(datum, args.modes)
    rows, summary = run_quasip(c0, args.horizon, args.delta, s=args.sobolev_s)
    summary["pass"] = summary["no_growth"] and summary["membership_constant"] and summary["recurrence_found"]
    _emit(args, QUASIP_COLUMNS, rows, summary)
    return EXIT_OK if summary["pass"] else EXIT_TOLERANCE


def cmd_hierarchy(args):
    datum = _datum(args)
    c0 = _coeffs(datum, None)
    rng = np.random.default_rng(args.seed)
    y = args.y if args.y is not None else [1.0, 2.0]
    a = args.a if args.a is not None else list(rng.uniform(-1, 1, len(y)))
    if len(a) != len(y):
        raise InputError("--a and --y must have the same length", "--a")
    if any(v <= 0 for v in y) or len(set(y)) != len(y):
        raise InputError("--y must hold distinct positive values", "--y")
    rows, summary = run_hierarchy(c0, a, y, args.t_end, args.dt, grid_step=args.grid, modes=args.modes)
    summary.update(a=a, y=y, tol=args.tol, **{"pass": summary["max_distance"] <= args.tol})
    _emit(args, HIERARCHY_COLUMNS, rows, summary)
    return EXIT_OK if summary["pass"] else EXIT_TOLERANCE


COMMANDS = {
    "evolve-explicit": cmd_evolve_explicit,
    "evolve-direct": cmd_evolve_direct,
    "compare": cmd_compare,
    "instability": cmd_instability,
    "quasip": cmd_quasip,
    "hierarchy": cmd_hierarchy,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("t_end", "dt"):
        if getattr(args, name, 1.0) is not None and not getattr(args, name, 1.0) > 0:
            print(f"szego: error: --{name.replace('_', '-')} must be positive", file=sys.stderr)
            return EXIT_INPUT
    if args.modes is not None and args.modes < 1:
        print("szego: error: --modes must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except (InputError, SymbolError, NotInVdError) as exc:
        print(f"szego: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (IntegrationError, SpectralError, TruncationError) as exc:
        print(f"szego: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
