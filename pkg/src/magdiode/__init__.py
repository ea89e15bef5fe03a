"""Solvers for the coupled potential/magnetic-field boundary value problem
of a space-charge-dominated planar diode.

The package is layered: `model` holds the equations and parameter checks,
`barriers` the explicit sub/supersolution families and their verification,
`scalar_solver` the frozen-field finite-difference and monotone-iteration
solvers, `shooting` the initial-value validation path, `system_solver` the
coupled alternating solver, and `regime` the admissibility classification.
"""

from .barriers import (
    AnodeBounds,
    Barrier,
    BarrierBox,
    BarrierCheck,
    BoundCheck,
    ChainEntry,
    OrderingReport,
    anode_bounds,
    build_box,
    current_ceiling,
    make_lower_a,
    make_lower_phi,
    make_upper_a,
    make_upper_phi,
    solve_delta,
    verify_barrier,
    verify_box,
    verify_ordering_chains,
)
from .errors import MagdiodeError
from .grids import FieldProfile, Mesh, make_mesh
from .model import DiodeParams, check_hypotheses, discriminant
from .regime import RegimeReport, SweepResult, classify, sweep_jx
from .scalar_solver import (
    MonotoneResult,
    ScalarProblem,
    comparison_check,
    monotone_iterate,
    residual_norm,
    solve_scalar_fd,
)
from .shooting import (
    ShootingParams,
    SystemShot,
    Trajectory,
    asymptotic_start,
    integrate_ivp,
    launch_state,
    shoot_scalar_a,
    shoot_system,
    solve_scalar_shoot,
)
from .system_solver import SolutionPair, coupled_residual, solve_system

__version__ = "0.1.0"

__all__ = [
    "AnodeBounds",
    "Barrier",
    "BarrierBox",
    "BarrierCheck",
    "BoundCheck",
    "ChainEntry",
    "DiodeParams",
    "FieldProfile",
    "MagdiodeError",
    "Mesh",
    "MonotoneResult",
    "OrderingReport",
    "RegimeReport",
    "ScalarProblem",
    "ShootingParams",
    "SolutionPair",
    "SweepResult",
    "SystemShot",
    "Trajectory",
    "anode_bounds",
    "asymptotic_start",
    "build_box",
    "check_hypotheses",
    "classify",
    "comparison_check",
    "coupled_residual",
    "current_ceiling",
    "discriminant",
    "integrate_ivp",
    "launch_state",
    "make_lower_a",
    "make_lower_phi",
    "make_mesh",
    "make_upper_a",
    "make_upper_phi",
    "monotone_iterate",
    "residual_norm",
    "shoot_scalar_a",
    "shoot_system",
    "solve_delta",
    "solve_scalar_fd",
    "solve_scalar_shoot",
    "solve_system",
    "sweep_jx",
    "verify_barrier",
    "verify_box",
    "verify_ordering_chains",
    "__version__",
]
