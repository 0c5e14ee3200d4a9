"""Explicit formula and direct integration for the cubic Szego equation and its hierarchy."""

__version__ = "0.1.0"

from .closed_form import V3ClosedForm, closed_form_v3, t_eps
from .direct import FlowObservation, observe, rk4_hierarchy, rk4_szego
from .explicit import (
    AngleAssignment,
    ExplicitSolver,
    Propagator,
    build_propagator,
    eval_explicit,
    evolve_explicit,
    evolve_hierarchy,
    quasip_phi,
    solve_angle_system,
)
from .hankel import (
    HankelModel,
    ReducedModel,
    SpectralData,
    build_hankel,
    build_toeplitz,
    cayley_resolvent,
    eigh,
    hierarchy_generators,
    j_functional,
    joint_spectrum,
    lax_generators,
    reduce,
    vd_membership,
)
from .hardy import (
    HardyFunction,
    RationalSymbol,
    coeffs_to_rational,
    cubic_szego_rhs,
    inner,
    momentum_density,
    norm_sobolev,
    norm_wiener,
    project_szego,
    rational_to_coeffs,
    shift,
    shift_adjoint,
)
