"""Finite-difference solvers for the semitrivial scalar problems.

Freezing one field turns the coupled system into five scalar two-point
problems: the potential equation with the magnetic field at zero, at its
upper, or at its lower barrier (cases A1..A3), and the magnetic equation
with the potential at its upper or lower barrier (A4, A5). These are solved
on graded meshes by damped Newton with continuation in a regularizing shift
of the potential, and independently by the monotone (Picard) iteration that
realizes the maximal solution between a barrier pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .barriers import Barrier, BarrierBox
from .errors import (
    InvalidParameter,
    MaxIterations,
    MeshMismatch,
    MonotonicityViolation,
    NewtonDivergence,
    NoSolution,
    BarrierEscape,
)
from .grids import FieldProfile, Mesh, d2_stencil, second_difference
from .model import DiodeParams, rhs_a_arrays, rhs_phi_arrays

PHI_CASES = ("A1", "A2", "A3")
A_CASES = ("A4", "A5")
EPS_LADDER = tuple(10.0 ** (-k) for k in range(1, 11))
ESCAPE_TOL = 1e-6
MAX_SWEEPS = 500
MACHINE_EPS = float(np.finfo(float).eps)


def evaluation_noise_floor(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray,
                           full: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Per-node bound on the rounding noise of the discrete residual.

    The residual subtracts quantities assembled from terms as large as
    |stencil coefficient| * |value|; on fine graded meshes those reach 1e6
    and two valid evaluation orders of the same iterate can disagree by more
    than 1e-10. No iterate can be certified below this level, so convergence
    tests measure the excess of |residual| over it.
    """
    scale = (np.abs(sub * full[:-2]) + np.abs(diag * full[1:-1])
             + np.abs(sup * full[2:]) + np.abs(rhs))
    return 4.0 * MACHINE_EPS * scale


@dataclass(frozen=True)
class ScalarProblem:
    """One frozen-field scalar case with its boundary data.

    The case tag fixes which equation is solved and what the frozen field
    means: A1 solves the potential with a=0, A2/A3 with a at the supplied
    upper/lower profile, A4/A5 solve the magnetic field with the potential
    at the supplied upper/lower profile.
    """

    case: str
    params: DiodeParams
    frozen: Barrier | FieldProfile | None = None
    box: BarrierBox | None = None

    def __post_init__(self) -> None:
        if self.case not in PHI_CASES + A_CASES:
            raise InvalidParameter(f"unknown case tag {self.case!r}")
        if self.case != "A1" and self.frozen is None:
            raise InvalidParameter(f"case {self.case} needs a frozen opposing field")

    @property
    def field_name(self) -> str:
        return "phi" if self.case in PHI_CASES else "a"

    @property
    def target(self) -> float:
        return self.params.phi_L if self.field_name == "phi" else self.params.a_L

    def frozen_values(self, x: np.ndarray) -> np.ndarray:
        if self.frozen is None:
            return np.zeros_like(np.asarray(x, dtype=float))
        if isinstance(self.frozen, FieldProfile):
            return self.frozen.interp(x)
        return self.frozen.value(x)

    def rhs(self, x: np.ndarray, u: np.ndarray,
            eps: float = 0.0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(values, d/du, singular mask) of the case RHS at nodes x."""
        other = self.frozen_values(x)
        if self.field_name == "phi":
            return rhs_phi_arrays(u, other, self.params.j_x, eps)
        return rhs_a_arrays(other, u, self.params.j_x, eps)


def _box_bounds(prob: ScalarProblem, x: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    if prob.box is None:
        return None
    if prob.field_name == "phi":
        return prob.box.phi_lower.value(x), prob.box.phi_upper.value(x)
    return prob.box.a_lower.value(x), prob.box.a_upper.value(x)


def residual_norm(prob: ScalarProblem, profile: FieldProfile,
                  eps: float = 0.0) -> float:
    """Sup-norm of the discretized equation over interior nodes."""
    d2 = second_difference(profile.mesh, profile.values)
    rhs, _, mask = prob.rhs(profile.mesh.interior, profile.values[1:-1], eps)
    res = np.where(mask, 0.0, d2 - rhs)
    return float(np.max(np.abs(res))) if res.size else 0.0


def _newton_at_eps(prob: ScalarProblem, mesh: Mesh, u: np.ndarray, eps: float,
                   tol: float, max_iter: int = 60) -> tuple[np.ndarray, bool, dict[str, Any]]:
    """Damped Newton on the interior unknowns at one continuation level.

    Returns (iterate, converged, stats). The iterate is the best one seen,
    whether or not the tolerance was met.
    """
    x = mesh.interior
    sub, diag, sup = d2_stencil(mesh)
    bounds = _box_bounds(prob, x)
    clip_events = 0
    max_violation = 0.0

    def clipped(v: np.ndarray) -> np.ndarray:
        nonlocal clip_events, max_violation
        if bounds is None:
            return v
        lo, hi = bounds
        over = np.maximum(lo - v, v - hi)
        worst = float(np.max(over, initial=0.0))
        if worst > ESCAPE_TOL:
            clip_events += 1
            max_violation = max(max_violation, worst)
            return np.clip(v, lo, hi)
        return v

    def residual(v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        full = np.concatenate(([0.0], v, [prob.target]))
        d2 = (sub * full[:-2] + diag * full[1:-1] + sup * full[2:])
        rhs, drhs, mask = prob.rhs(x, v, eps)
        floor = evaluation_noise_floor(sub, diag, sup, full, rhs)
        return np.where(mask, 0.0, d2 - rhs), drhs, mask, floor

    v = u.copy()
    r, drhs, _, floor = residual(v)
    norm = float(np.max(np.abs(r)))
    excess = float(np.max(np.abs(r) - floor))
    iters = 0
    for iters in range(1, max_iter + 1):
        if excess < tol:
            break
        band = np.zeros((3, v.size))
        band[0, 1:] = sup[:-1]
        band[1, :] = diag - drhs
        band[2, :-1] = sub[1:]
        try:
            step = solve_banded((1, 1), band, -r)
        except np.linalg.LinAlgError:
            return v, False, {"iters": iters, "norm": norm, "reason": "singular jacobian"}
        lam = 1.0
        accepted = False
        for _ in range(30):
            trial = clipped(v + lam * step)
            r_t, drhs_t, _, floor_t = residual(trial)
            norm_t = float(np.max(np.abs(r_t)))
            if norm_t < norm:
                v, r, drhs, norm = trial, r_t, drhs_t, norm_t
                excess = float(np.max(np.abs(r_t) - floor_t))
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            return v, False, {"iters": iters, "norm": norm, "reason": "damping underflow"}
    stats = {"iters": iters, "norm": norm, "clip_events": clip_events,
             "max_violation": max_violation}
    return v, excess < tol, stats


def solve_scalar_fd(prob: ScalarProblem, mesh: Mesh,
                    start: FieldProfile | None = None,
                    use_ladder: bool = True) -> FieldProfile:
    """Solve one scalar case on the mesh by continuation in the shift.

    The regularizing shift walks down the decade ladder 1e-1..1e-10 with warm
    starts, then the unshifted equation is polished to the residual tolerance.
    The linear profile target*x seeds the first level; it is already exact
    when j_x = 0. A caller with a good iterate nearby (coupled sweeps, mesh
    refinement) can pass it as start and skip the ladder.
    """
    if mesh.n_interior < 32:
        raise InvalidParameter(f"need >= 32 interior nodes, got {mesh.n_interior}")
    p = prob.params
    if start is not None:
        v = (start.values[1:-1] if start.mesh.same_nodes(mesh)
             else start.interp(mesh.interior))
    else:
        v = prob.target * mesh.interior
    history: list[dict[str, Any]] = []
    any_converged = False
    if use_ladder:
        for eps in EPS_LADDER:
            v_new, ok, stats = _newton_at_eps(prob, mesh, v, eps, p.tol_residual)
            stats["eps"] = eps
            if ok:
                stats["level_change"] = float(np.max(np.abs(v_new - v)))
                any_converged = True
                v = v_new
            history.append(stats)
            # a failed level keeps the previous warm start for the next one
    v_new, ok, stats = _newton_at_eps(prob, mesh, v, 0.0, p.tol_residual)
    stats["eps"] = 0.0
    if ok:
        stats["level_change"] = float(np.max(np.abs(v_new - v)))
    history.append(stats)
    if not ok and not use_ladder:
        # warm start was not good enough; fall back to full continuation
        return solve_scalar_fd(prob, mesh)
    if not ok:
        if not any_converged:
            raise NoSolution(
                f"case {prob.case}: continuation failed at every level "
                f"(last residual {stats['norm']:.3e})"
            )
        raise NewtonDivergence(
            f"case {prob.case}: final polish stalled at residual "
            f"{stats['norm']:.3e} ({stats.get('reason', 'no decrease')})"
        )
    v = v_new
    x = mesh.interior
    bounds = _box_bounds(prob, x)
    if bounds is not None:
        lo, hi = bounds
        worst = float(np.max(np.maximum(lo - v, v - hi), initial=0.0))
        if worst > ESCAPE_TOL:
            raise BarrierEscape(
                f"case {prob.case}: converged profile leaves the box by {worst:.3e}"
            )
    values = np.concatenate(([0.0], v, [prob.target]))
    profile = FieldProfile(
        mesh=mesh, values=values, left=0.0, right=prob.target,
        residual=None,
        info={"case": prob.case, "ladder": history},
    )
    # store the same arithmetic residual_norm reports, so recomputation
    # reproduces it exactly
    return FieldProfile(
        mesh=mesh, values=values, left=0.0, right=prob.target,
        residual=residual_norm(prob, profile), info=profile.info,
    )


# ---------------------------------------------------------------------------
# Monotone iteration


@dataclass(frozen=True)
class MonotoneResult:
    iterates: Sequence[FieldProfile]
    profile: FieldProfile
    sweeps: int
    shift: np.ndarray
    direction: str  # "decreasing" | "increasing" | "flat"


def _rhs_direction(prob: ScalarProblem, mesh: Mesh, lower: Barrier,
                   upper: Barrier, samples: int = 5) -> tuple[str, np.ndarray]:
    """Numerically classify d(RHS)/du on the box and bound it from above.

    Returns the sign verdict and a per-node upper bound of the derivative
    (used as the zero-order shift when the RHS is increasing).
    """
    x = mesh.interior
    lo = lower.value(x)
    hi = upper.value(x)
    dmin = np.full_like(x, np.inf)
    dmax = np.full_like(x, -np.inf)
    for t in np.linspace(0.0, 1.0, samples):
        u = (1.0 - t) * lo + t * hi
        _, du, mask = prob.rhs(x, u)
        du = np.where(mask, 0.0, du)
        dmin = np.minimum(dmin, du)
        dmax = np.maximum(dmax, du)
    tol = 1e-12
    if np.all(dmax <= tol):
        return "decreasing", dmax
    if np.all(dmin >= -tol):
        return "increasing", dmax
    raise MonotonicityViolation(
        "RHS derivative changes sign on the box "
        f"(min {float(dmin.min()):.3e}, max {float(dmax.max()):.3e})"
    )


def monotone_iterate(prob: ScalarProblem, lower: Barrier, upper: Barrier,
                     mesh: Mesh) -> MonotoneResult:
    """Picard iteration from the upper barrier toward the maximal solution.

    With a decreasing RHS the plain frozen-RHS sweep is already monotone;
    with an increasing one the sweep is shifted by a zero-order term c(x)
    bounding d(RHS)/du on the box, which restores monotonicity without
    leaving tridiagonal territory. Both families keep every iterate inside
    [lower, upper]; the audit raises MonotonicityViolation otherwise.
    """
    direction, dbound = _rhs_direction(prob, mesh, lower, upper)
    x = mesh.interior
    sub, diag, sup = d2_stencil(mesh)
    lo_vals = lower.value(x)
    if direction == "increasing":
        shift = 1.1 * np.maximum(dbound, 0.0)
    else:
        shift = np.zeros_like(x)

    v = upper.value(x)
    iterates = [FieldProfile.from_values(
        mesh, np.concatenate(([0.0], v, [prob.target])))]
    audit_tol = 1e-10

    band = np.zeros((3, v.size))
    band[0, 1:] = sup[:-1]
    band[1, :] = diag - shift
    band[2, :-1] = sub[1:]

    sweeps = 0
    for sweeps in range(1, MAX_SWEEPS + 1):
        rhs, _, mask = prob.rhs(x, v)
        rhs = np.where(mask, 0.0, rhs)
        b = rhs - shift * v
        b[-1] -= sup[-1] * prob.target
        v_new = solve_banded((1, 1), band, b)
        change = float(np.max(np.abs(v_new - v)))
        scale = audit_tol * np.maximum(1.0, np.abs(v))
        if np.any(v_new > v + scale):
            worst = float(np.max(v_new - v))
            raise MonotonicityViolation(
                f"sweep {sweeps} increased the iterate by {worst:.3e}"
            )
        if np.any(v_new < lo_vals - scale):
            worst = float(np.max(lo_vals - v_new))
            raise MonotonicityViolation(
                f"sweep {sweeps} undershot the lower barrier by {worst:.3e}"
            )
        v = v_new
        iterates.append(FieldProfile.from_values(
            mesh, np.concatenate(([0.0], v, [prob.target]))))
        if change < prob.params.tol_iter:
            break
    else:
        raise MaxIterations(f"no convergence in {MAX_SWEEPS} sweeps")

    values = np.concatenate(([0.0], v, [prob.target]))
    final = FieldProfile(
        mesh=mesh, values=values, left=0.0, right=prob.target,
        residual=None,
        info={"sweeps": sweeps, "direction": direction},
    )
    return MonotoneResult(iterates=iterates, profile=final, sweeps=sweeps,
                          shift=shift, direction=direction)


# ---------------------------------------------------------------------------
# Comparison principle check


@dataclass(frozen=True)
class ComparisonVerdict:
    """Outcome of the two-sided defect comparison between profiles.

    status is "confirmed" when the defect premise and boundary ordering hold
    and v <= w pointwise follows; "premise_failure" when the premise does not
    hold numerically (the conclusion is then unavailable, not false);
    "violation" when premises hold but the ordering fails anyway.
    """

    status: str
    premise_ok: bool
    boundary_ok: bool
    ordered: bool | None
    max_premise_defect: float
    max_order_violation: float


def comparison_check(prob: ScalarProblem, v: FieldProfile, w: FieldProfile,
                     increasing: bool | None = None,
                     slack: float = 1e-8) -> ComparisonVerdict:
    """Evaluate the cone comparison premise and its conclusion numerically.

    The premise for an increasing RHS is defect(v) >= defect(w) at interior
    nodes with defect(u) = u'' - rhs(u); a decreasing RHS flips the premise
    sign. Boundary ordering v <= w is required at both ends.
    """
    if not v.mesh.same_nodes(w.mesh):
        raise MeshMismatch("comparison profiles are on different meshes")
    if increasing is None:
        increasing = prob.field_name == "a"
    mesh = v.mesh
    x = mesh.interior

    def defect(u: FieldProfile) -> np.ndarray:
        d2 = second_difference(mesh, u.values)
        rhs, _, mask = prob.rhs(x, u.values[1:-1])
        return np.where(mask, 0.0, d2 - rhs)

    dv, dw = defect(v), defect(w)
    gap = dv - dw if increasing else dw - dv
    max_defect = float(np.max(-gap, initial=0.0))
    premise_ok = bool(np.all(gap >= -slack))
    boundary_ok = (v.values[0] <= w.values[0] + slack
                   and v.values[-1] <= w.values[-1] + slack)
    if not (premise_ok and boundary_ok):
        return ComparisonVerdict(
            status="premise_failure", premise_ok=premise_ok,
            boundary_ok=boundary_ok, ordered=None,
            max_premise_defect=max_defect, max_order_violation=0.0,
        )
    overshoot = v.values - w.values
    max_violation = float(np.max(overshoot, initial=0.0))
    ordered = bool(np.all(overshoot <= slack * np.maximum(1.0, np.abs(w.values))))
    return ComparisonVerdict(
        status="confirmed" if ordered else "violation",
        premise_ok=True, boundary_ok=True, ordered=ordered,
        max_premise_defect=max_defect, max_order_violation=max_violation,
    )
