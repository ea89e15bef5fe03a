"""Coupled solver: alternating semitrivial sweeps inside a barrier box.

Each sweep freezes the magnetic field and re-solves the potential equation,
then freezes the updated potential and re-solves the magnetic one. Both
half-steps are exactly the scalar problems of the semitrivial analysis, so
the coupled solver is a Gauss-Seidel loop over machinery that is tested on
its own. Sign symmetry (the equations see the magnetic field only through
its square) lets negative anode data be solved on the mirrored branch and
negated afterwards, bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .barriers import BarrierBox
from .errors import BoxViolation, MeshMismatch, NoConvergence
from .grids import FieldProfile, Mesh, d2_stencil, second_difference
from .model import DiodeParams, rhs_a_arrays, rhs_phi_arrays
from .scalar_solver import ScalarProblem, evaluation_noise_floor, solve_scalar_fd

MAX_SWEEPS = 200
CLIP_TOL = 1e-6


@dataclass(frozen=True)
class SolutionPair:
    """Converged fields of the coupled system with their diagnostics."""

    phi: FieldProfile
    a: FieldProfile
    residual_phi: float
    residual_a: float
    iterations: int
    phi_contained: bool
    a_contained: bool
    info: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class CoupledResidual:
    """Raw sup-norms plus their excess over the rounding-noise floor.

    The excess is what convergence tests compare against tol_residual; the
    raw sups are reported as is.
    """

    residual_phi: float
    residual_a: float
    excess_phi: float
    excess_a: float
    n_singular: int


def coupled_residual(phi: FieldProfile, a: FieldProfile,
                     p: DiodeParams) -> CoupledResidual:
    """Sup-norms of both discretized equations, singular nodes excluded."""
    if not phi.mesh.same_nodes(a.mesh):
        raise MeshMismatch("profiles live on different meshes")
    mesh = phi.mesh
    phi_i, a_i = phi.values[1:-1], a.values[1:-1]
    f_vals, _, f_mask = rhs_phi_arrays(phi_i, a_i, p.j_x)
    g_vals, _, g_mask = rhs_a_arrays(phi_i, a_i, p.j_x)
    mask = f_mask | g_mask
    res_phi = second_difference(mesh, phi.values) - f_vals
    res_a = second_difference(mesh, a.values) - g_vals
    sub, diag, sup = d2_stencil(mesh)
    floor_phi = evaluation_noise_floor(sub, diag, sup, phi.values, f_vals)
    floor_a = evaluation_noise_floor(sub, diag, sup, a.values, g_vals)
    keep = ~mask
    sup_phi = float(np.max(np.abs(res_phi[keep]), initial=0.0))
    sup_a = float(np.max(np.abs(res_a[keep]), initial=0.0))
    exc_phi = float(np.max(np.abs(res_phi[keep]) - floor_phi[keep], initial=0.0))
    exc_a = float(np.max(np.abs(res_a[keep]) - floor_a[keep], initial=0.0))
    return CoupledResidual(residual_phi=sup_phi, residual_a=sup_a,
                           excess_phi=exc_phi, excess_a=exc_a,
                           n_singular=int(mask.sum()))


def _containment(values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> bool:
    slack = 1e-12 * np.maximum(1.0, np.abs(values))
    return bool(np.all(values >= lo - slack) and np.all(values <= hi + slack))


def solve_system(p: DiodeParams, box: BarrierBox, mesh: Mesh,
                 start: SolutionPair | None = None) -> SolutionPair:
    """Solve the coupled system by alternating frozen-field sweeps.

    The box supplies clipping bounds and the containment verdicts; iterates
    escaping it by more than 1e-6 abort with BoxViolation (the usual sign of
    inadmissible anode data). Smaller excursions are clipped only in the
    frozen copies handed to the next half-step, so converged residuals are
    those of the raw profiles. A start pair from a nearby parameter point
    (continuation) replaces the default linear seed.
    """
    mirror = p.a_L < 0.0
    work = p.with_(a_L=abs(p.a_L)) if mirror else p
    nodes = mesh.nodes
    x_int = mesh.interior
    phi_lo, phi_hi = box.phi_lower.value(x_int), box.phi_upper.value(x_int)
    a_lo, a_hi = box.a_lower.value(x_int), box.a_upper.value(x_int)

    if start is not None:
        phi_seed = start.phi.interp(nodes)
        a_seed = np.abs(start.a.interp(nodes)) if mirror else start.a.interp(nodes)
        phi_seed[0] = a_seed[0] = 0.0
        phi_seed[-1], a_seed[-1] = work.phi_L, work.a_L
        phi = FieldProfile.from_values(mesh, phi_seed)
        a = FieldProfile.from_values(mesh, a_seed)
    else:
        phi = FieldProfile.from_values(mesh, work.phi_L * nodes)
        a = FieldProfile.from_values(mesh, work.a_L * nodes)
    max_clip = 0.0

    def clip_for_freeze(prof: FieldProfile, lo: np.ndarray,
                        hi: np.ndarray, name: str) -> FieldProfile:
        nonlocal max_clip
        interior = prof.values[1:-1]
        excess = float(np.max(np.maximum(lo - interior, interior - hi), initial=0.0))
        if excess <= 0.0:
            return prof
        if excess > CLIP_TOL:
            raise BoxViolation(
                f"{name} iterate escapes the box by {excess:.3e}"
            )
        max_clip = max(max_clip, excess)
        clipped = prof.values.copy()
        clipped[1:-1] = np.clip(interior, lo, hi)
        return FieldProfile.from_values(mesh, clipped)

    zero_a = work.a_L == 0.0
    sweeps = 0
    residual = None
    for sweeps in range(1, MAX_SWEEPS + 1):
        cold = sweeps == 1 and start is None
        frozen_a = clip_for_freeze(a, a_lo, a_hi, "magnetic")
        phi_new = solve_scalar_fd(
            ScalarProblem(case="A2", params=work, frozen=frozen_a),
            mesh, start=None if cold else phi, use_ladder=cold,
        )
        frozen_phi = clip_for_freeze(phi_new, phi_lo, phi_hi, "potential")
        if zero_a:
            a_new = FieldProfile.from_values(mesh, np.zeros_like(nodes),
                                             residual=0.0)
        else:
            a_new = solve_scalar_fd(
                ScalarProblem(case="A4", params=work, frozen=frozen_phi),
                mesh, start=None if cold else a, use_ladder=cold,
            )
        change = max(phi_new.sup_diff(phi), a_new.sup_diff(a))
        phi, a = phi_new, a_new
        if change < work.tol_iter:
            residual = coupled_residual(phi, a, work)
            if max(residual.excess_phi, residual.excess_a) < work.tol_residual:
                break
    else:
        raise NoConvergence(f"no coupled convergence in {MAX_SWEEPS} sweeps")
    if residual is None:
        raise NoConvergence(f"no coupled convergence in {MAX_SWEEPS} sweeps")

    if mirror:
        a = FieldProfile.from_values(mesh, -a.values, residual=a.residual,
                                     info=dict(a.info))
        a_lo, a_hi = -a_hi, -a_lo
    phi_ok = _containment(phi.values[1:-1], phi_lo, phi_hi)
    a_ok = _containment(a.values[1:-1], a_lo, a_hi)
    return SolutionPair(
        phi=phi, a=a,
        residual_phi=residual.residual_phi, residual_a=residual.residual_a,
        iterations=sweeps, phi_contained=phi_ok, a_contained=a_ok,
        info={"max_clip": max_clip, "mirrored": mirror,
              "n_singular": residual.n_singular},
    )
