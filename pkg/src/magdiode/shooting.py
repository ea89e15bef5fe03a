"""Initial-value validation path: asymptotic starts and shooting.

The two-point problems are re-solved here as Cauchy problems launched just
off the singular cathode, where the potential follows the space-charge
asymptote k x^(4/3). One-parameter shooting adjusts the magnetic slope for
the frozen-potential scalar case; two-parameter shooting adjusts (slope,
current) jointly to hit both anode values. Everything rides on an embedded
Runge-Kutta integrator with a terminal event at the zero of the discriminant
(1+phi)^2 - 1 - a^2, which is where electron reflection begins and the
equations leave the physical branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    EventAbort,
    InvalidParameter,
    NoBracket,
    NoConvergence,
)
from .grids import FieldProfile, Mesh
from .model import DiodeParams, zero_threshold
from .scalar_solver import ScalarProblem

DEFAULT_ETA = 1e-4
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12

REACHED_1 = "reached_1"
DISCRIMINANT_ZERO = "discriminant_zero"
STEP_UNDERFLOW = "step_underflow"


@dataclass(frozen=True)
class ShootingParams:
    """Knobs of the shooting layer: cathode slopes and the launch abscissa."""

    beta: float = 0.0   # a'(0)
    c: float = 0.0      # scalar magnetic slope for the frozen-potential case
    eta: float = DEFAULT_ETA

    def __post_init__(self) -> None:
        if not (0.0 < self.eta <= 0.1):
            raise InvalidParameter(f"eta must lie in (0, 0.1], got {self.eta}")
        if not (math.isfinite(self.beta) and math.isfinite(self.c)):
            raise InvalidParameter("shooting slopes must be finite")


@dataclass(frozen=True)
class IvpState:
    """Integration state: abscissa, stacked fields (phi, phi', a, a')."""

    x: float
    y: np.ndarray
    step: float | None = None
    discriminant_sign: int = 1

    def __post_init__(self) -> None:
        if not (0.0 <= self.x <= 1.0):
            raise InvalidParameter(f"x must lie in [0,1], got {self.x}")
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))


def asymptotic_start(p: DiodeParams, eta: float) -> tuple[float, float]:
    """Leading-order launch values (phi(eta), phi'(eta)) off the cathode.

    Near x=0 the potential balances phi'' = j/sqrt(2 phi), giving
    phi = k x^(4/3) with k = (9 j / (4 sqrt(2)))^(2/3).
    """
    if eta <= 0.0:
        raise InvalidParameter(f"eta must be > 0, got {eta}")
    k = (9.0 * p.j_x / (4.0 * math.sqrt(2.0))) ** (2.0 / 3.0)
    return k * eta ** (4.0 / 3.0), (4.0 / 3.0) * k * eta ** (1.0 / 3.0)


def launch_state(p: DiodeParams, sp: ShootingParams) -> IvpState:
    """Full 4-component start at eta: potential from the asymptote, magnetic
    field linear with slope beta."""
    phi, dphi = asymptotic_start(p, sp.eta)
    return IvpState(x=sp.eta, y=np.array([phi, dphi, sp.beta * sp.eta, sp.beta]))


@dataclass(frozen=True)
class Trajectory:
    """Dense integration result with its termination reason."""

    x: np.ndarray
    phi: np.ndarray
    phi_prime: np.ndarray
    a: np.ndarray
    a_prime: np.ndarray
    reason: str
    event_x: float | None = None
    dense: Any = None
    info: Mapping[str, Any] = field(default_factory=dict)

    @property
    def discriminant(self) -> np.ndarray:
        return self.phi * (2.0 + self.phi) - self.a**2

    def end_values(self) -> tuple[float, float]:
        return float(self.phi[-1]), float(self.a[-1])

    def resample(self, mesh: Mesh, p: DiodeParams, beta: float) -> tuple[FieldProfile, FieldProfile]:
        """Profiles on mesh nodes; below the launch point the asymptote fills in."""
        if self.dense is None:
            raise InvalidParameter("trajectory carries no dense output")
        x0 = float(self.x[0])
        nodes = mesh.nodes
        k = (9.0 * p.j_x / (4.0 * math.sqrt(2.0))) ** (2.0 / 3.0)
        phi = np.where(nodes < x0, k * nodes ** (4.0 / 3.0), 0.0)
        a = np.where(nodes < x0, beta * nodes, 0.0)
        inside = nodes >= x0
        if np.any(inside):
            vals = self.dense(np.clip(nodes[inside], x0, float(self.x[-1])))
            phi[inside] = vals[0]
            a[inside] = vals[2]
        phi[0], a[0] = 0.0, 0.0
        return (FieldProfile.from_values(mesh, phi),
                FieldProfile.from_values(mesh, a))


def _system_rhs(j_x: float) -> Callable[[float, np.ndarray], np.ndarray]:
    def rhs(x: float, y: np.ndarray) -> np.ndarray:
        phi, dphi, a, da = y
        r = phi * (2.0 + phi) - a * a
        if abs(r) < zero_threshold(phi):
            curv_phi, curv_a = 0.0, 0.0
        else:
            root = math.sqrt(abs(r))
            curv_phi = j_x * (1.0 + phi) / root
            curv_a = j_x * a / root
        return np.array([dphi, curv_phi, da, curv_a])
    return rhs


def _discriminant_event(x: float, y: np.ndarray) -> float:
    phi, _, a, _ = y
    return phi * (2.0 + phi) - a * a - zero_threshold(phi)


_discriminant_event.terminal = True  # type: ignore[attr-defined]
_discriminant_event.direction = -1.0  # type: ignore[attr-defined]


def integrate_ivp(start: IvpState, p: DiodeParams, rtol: float = DEFAULT_RTOL,
                  atol: float = DEFAULT_ATOL) -> Trajectory:
    """Integrate the coupled system from start to x=1 or the reflection event."""
    if start.x <= 0.0:
        phi0, _, a0, _ = start.y
        if phi0 * (2.0 + phi0) - a0 * a0 <= 0.0:
            raise InvalidParameter(
                "start at x=0 needs a strictly positive discriminant"
            )
    sol = solve_ivp(
        _system_rhs(p.j_x), (start.x, 1.0), start.y, method="RK45",
        rtol=rtol, atol=atol, dense_output=True, events=[_discriminant_event],
    )
    if sol.status == 1:
        reason = DISCRIMINANT_ZERO
        event_x = float(sol.t_events[0][0])
    elif sol.status == 0:
        reason = REACHED_1
        event_x = None
    else:
        reason = STEP_UNDERFLOW
        event_x = None
    return Trajectory(
        x=sol.t, phi=sol.y[0], phi_prime=sol.y[1], a=sol.y[2], a_prime=sol.y[3],
        reason=reason, event_x=event_x, dense=sol.sol,
        info={"n_steps": sol.t.size, "rtol": rtol, "atol": atol},
    )


def richardson_start_check(p: DiodeParams, beta: float,
                           eta: float = DEFAULT_ETA, probe_x: float = 0.1) -> float:
    """Sensitivity of the trajectory to the launch abscissa.

    Integrates from eta and eta/2 and returns the potential difference at
    probe_x; the asymptotic start is trustworthy when this is < 1e-8.
    """
    diffs = []
    for e in (eta, 0.5 * eta):
        sp = ShootingParams(beta=beta, eta=e)
        traj = integrate_ivp(launch_state(p, sp), p)
        if traj.reason != REACHED_1:
            raise EventAbort(f"probe integration terminated: {traj.reason}")
        diffs.append(float(traj.dense(probe_x)[0]))
    return abs(diffs[0] - diffs[1])


# ---------------------------------------------------------------------------
# One-parameter shooting for the frozen-potential case


def _frozen_callable(prob: ScalarProblem) -> Callable[[float], float]:
    frozen = prob.frozen
    if frozen is None:
        return lambda x: 0.0
    if hasattr(frozen, "value"):
        # barrier or bare form
        return lambda x: float(frozen.value(np.asarray(x)))
    return lambda x: float(np.interp(x, frozen.mesh.nodes, frozen.values))


def _integrate_scalar_a(prob: ScalarProblem, c: float,
                        rtol: float = DEFAULT_RTOL,
                        atol: float = DEFAULT_ATOL) -> Any:
    phi_at = _frozen_callable(prob)
    j = prob.params.j_x

    def rhs(x: float, y: np.ndarray) -> np.ndarray:
        a, da = y
        phi = phi_at(x)
        r = phi * (2.0 + phi) - a * a
        if abs(r) < zero_threshold(phi):
            curv = 0.0
        else:
            curv = j * a / math.sqrt(abs(r))
        return np.array([da, curv])

    def event(x: float, y: np.ndarray) -> float:
        phi = phi_at(x)
        return phi * (2.0 + phi) - y[0] ** 2 - zero_threshold(phi)

    event.terminal = True  # type: ignore[attr-defined]
    event.direction = -1.0  # type: ignore[attr-defined]
    return solve_ivp(rhs, (0.0, 1.0), [0.0, c], method="RK45", rtol=rtol,
                     atol=atol, dense_output=True, events=[event])


@dataclass(frozen=True)
class ScalarShot:
    c: float
    residual: float  # a(1) - a_L, +inf when the trajectory terminated early
    reason: str
    sol: Any = None


def shoot_scalar_a(prob: ScalarProblem, c: float) -> ScalarShot:
    """One magnetic trajectory with frozen potential and slope c at the cathode."""
    if prob.case not in ("A4", "A5"):
        raise InvalidParameter(f"scalar shooting applies to A4/A5, got {prob.case}")
    if c < 0.0:
        raise InvalidParameter(f"slope must be >= 0, got {c}")
    sol = _integrate_scalar_a(prob, c)
    if sol.status == 1:
        return ScalarShot(c=c, residual=math.inf, reason=DISCRIMINANT_ZERO, sol=sol)
    if sol.status != 0:
        return ScalarShot(c=c, residual=math.inf, reason=STEP_UNDERFLOW, sol=sol)
    return ScalarShot(c=c, residual=float(sol.y[0, -1]) - prob.params.a_L,
                      reason=REACHED_1, sol=sol)


def solve_scalar_shoot(prob: ScalarProblem, mesh: Mesh,
                       residual_tol: float = 1e-9) -> tuple[float, FieldProfile]:
    """Find the cathode slope whose trajectory hits a(1) = a_L.

    The endpoint map c -> a(1) is increasing while the trajectory survives to
    x=1, so expanding bisection suffices; trajectories that terminate early
    count as overshoots. When even the surviving trajectories top out below
    a_L the target exceeds the admissible anode bound and NoBracket reports
    that.
    """
    a_L = prob.params.a_L
    if a_L < 0.0:
        raise InvalidParameter("scalar shooting solves the nonnegative branch")
    if a_L == 0.0:
        values = np.zeros(mesh.n_nodes)
        return 0.0, FieldProfile.from_values(mesh, values, residual=0.0,
                                             info={"c": 0.0})
    lo, r_lo = 0.0, -a_L
    best: ScalarShot | None = None

    def consider(shot: ScalarShot) -> None:
        nonlocal best
        if math.isfinite(shot.residual) and (
                best is None or abs(shot.residual) < abs(best.residual)):
            best = shot

    hi = max(1.0, 2.0 * a_L)
    for _ in range(60):
        shot = shoot_scalar_a(prob, hi)
        consider(shot)
        if shot.residual >= 0.0:
            break
        lo, r_lo = hi, shot.residual
        hi *= 2.0
    else:
        raise NoBracket(f"no overshoot up to c={hi:g}")
    for _ in range(200):
        if hi - lo < 1e-13 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        shot = shoot_scalar_a(prob, mid)
        consider(shot)
        if shot.residual >= 0.0:
            hi = mid
        else:
            lo, r_lo = mid, shot.residual
    if best is None or abs(best.residual) > residual_tol:
        raise NoBracket(
            f"endpoint map tops out {abs(r_lo):.3e} below a_L={a_L:g}; "
            "target exceeds the admissible anode bound"
        )
    vals = best.sol.sol(mesh.nodes)[0]
    vals[0] = 0.0
    profile = FieldProfile.from_values(mesh, vals, info={"c": best.c})
    return best.c, profile


# ---------------------------------------------------------------------------
# Two-parameter shooting for the full system


@dataclass(frozen=True)
class SystemShot:
    beta: float
    j_x: float
    trajectory: Trajectory
    phi: FieldProfile
    a: FieldProfile
    iterations: int
    method: str


def _endpoint_map(p: DiodeParams, eta: float):
    def evaluate(beta: float, j_x: float) -> tuple[float, float] | None:
        trial = p.with_(j_x=j_x, j_x_max=max(j_x, p.j_x_max))
        sp = ShootingParams(beta=beta, eta=eta)
        traj = integrate_ivp(launch_state(trial, sp), trial)
        if traj.reason != REACHED_1:
            return None
        return traj.end_values()
    return evaluate


def shoot_system(p: DiodeParams, beta0: float | None = None,
                 j0: float | None = None, mesh: Mesh | None = None,
                 eta: float = DEFAULT_ETA, tol: float = 1e-10,
                 max_iter: int = 100, max_evals: int = 1500) -> SystemShot:
    """Adjust (a'(0), j_x) so the trajectory hits both anode values.

    Damped Newton on the 2x2 endpoint map with a forward-difference Jacobian;
    when Newton stalls, a nested bisection takes over (outer in the current,
    inner in the slope), exploiting that phi(1) grows with j_x and a(1) grows
    with the slope. Negative a_L is solved on the mirrored branch.
    """
    if p.phi_L <= 0.0:
        raise InvalidParameter("two-parameter shooting needs phi_L > 0")
    mirror = p.a_L < 0.0
    work = p.with_(a_L=abs(p.a_L)) if mirror else p
    raw_evaluate = _endpoint_map(work, eta)
    evals = 0

    def evaluate(beta: float, j_x: float) -> tuple[float, float] | None:
        # unreachable anode targets would otherwise grind through unbounded
        # numbers of near-singular integrations; fail in bounded work instead
        nonlocal evals
        evals += 1
        if evals > max_evals:
            raise NoConvergence(
                f"endpoint budget exhausted ({max_evals} integrations) "
                "without matching the anode values"
            )
        return raw_evaluate(beta, j_x)
    beta = work.a_L if beta0 is None else abs(beta0)
    j = work.j_x if j0 is None else j0
    if j <= 0.0:
        raise InvalidParameter("initial current guess must be > 0")

    def residual(z: np.ndarray) -> np.ndarray | None:
        if z[1] <= 0.0 or z[0] < 0.0:
            return None
        ends = evaluate(z[0], z[1])
        if ends is None:
            return None
        return np.array([ends[0] - work.phi_L, ends[1] - work.a_L])

    z = np.array([beta, j])
    r = residual(z)
    attempts = 0
    while r is None and attempts < 20:
        z = np.array([0.5 * z[0], 0.75 * z[1]])
        r = residual(z)
        attempts += 1
    if r is None:
        raise EventAbort("every trial trajectory terminated before x=1")

    method = "newton"
    iters = 0
    stalled = False
    for iters in range(1, max_iter + 1):
        norm = float(np.max(np.abs(r)))
        if norm < tol:
            break
        jac = np.empty((2, 2))
        ok = True
        for col in range(2):
            step = 1e-7 * max(1.0, abs(z[col]))
            z_p = z.copy()
            z_p[col] += step
            r_p = residual(z_p)
            if r_p is None:
                ok = False
                break
            jac[:, col] = (r_p - r) / step
        if ok:
            try:
                dz = np.linalg.solve(jac, -r)
            except np.linalg.LinAlgError:
                ok = False
        if not ok:
            stalled = True
            break
        lam = 1.0
        accepted = False
        for _ in range(30):
            z_t = z + lam * dz
            r_t = residual(z_t)
            if r_t is not None and float(np.max(np.abs(r_t))) < norm:
                z, r = z_t, r_t
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            stalled = True
            break
    else:
        stalled = True

    if stalled:
        z, iters2 = _nested_bisection(work, evaluate, tol)
        method = "bisection"
        iters += iters2
        r = residual(z)
        if r is None or float(np.max(np.abs(r))) > 100.0 * tol:
            raise NoConvergence(
                "neither Newton nor nested bisection matched the anode values"
            )

    beta_star, j_star = float(z[0]), float(z[1])
    final = work.with_(j_x=j_star, j_x_max=max(j_star, work.j_x_max))
    traj = integrate_ivp(launch_state(final, ShootingParams(beta=beta_star, eta=eta)), final)
    out_mesh = mesh if mesh is not None else _default_mesh()
    phi_prof, a_prof = traj.resample(out_mesh, final, beta_star)
    if mirror:
        a_prof = FieldProfile.from_values(out_mesh, -a_prof.values, info=dict(a_prof.info))
        beta_star = -beta_star
    return SystemShot(beta=beta_star, j_x=j_star, trajectory=traj,
                      phi=phi_prof, a=a_prof, iterations=iters, method=method)


def _default_mesh() -> Mesh:
    from .grids import make_mesh

    return make_mesh(129, grading="graded")


def _nested_bisection(p: DiodeParams, evaluate, tol: float,
                      max_outer: int = 200) -> tuple[np.ndarray, int]:
    """Outer bisection in j_x, inner in beta; both endpoint maps monotone."""
    count = 0
    width = max(1e-14, 0.01 * tol)

    def beta_for(j: float) -> float | None:
        nonlocal count
        lo, hi = 0.0, max(1.0, 2.0 * p.a_L)
        ends = evaluate(lo, j)
        count += 1
        if ends is None:
            return None
        if ends[1] > p.a_L:
            return None  # even beta=0 overshoots; no admissible slope
        for _ in range(60):
            ends = evaluate(hi, j)
            count += 1
            if ends is None or ends[1] >= p.a_L:
                break
            lo = hi
            hi *= 2.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            ends = evaluate(mid, j)
            count += 1
            if ends is None or ends[1] >= p.a_L:
                hi = mid
            else:
                lo = mid
            if hi - lo < width * max(1.0, hi):
                break
        return 0.5 * (lo + hi)

    from .barriers import current_ceiling

    j_lo, j_hi = 1e-10, max(current_ceiling(p.phi_L), 2.0 * p.j_x)
    raise_count = 0
    while raise_count < 10:
        b = beta_for(j_hi)
        ends = evaluate(b, j_hi) if b is not None else None
        if ends is not None and ends[0] >= p.phi_L:
            break
        j_hi *= 2.0
        raise_count += 1
    for _ in range(max_outer):
        mid = 0.5 * (j_lo + j_hi)
        b = beta_for(mid)
        ends = evaluate(b, mid) if b is not None else None
        if ends is None or ends[0] >= p.phi_L:
            j_hi = mid
        else:
            j_lo = mid
        if j_hi - j_lo < width * max(1.0, j_hi):
            break
    j_star = 0.5 * (j_lo + j_hi)
    b = beta_for(j_star)
    if b is None:
        raise NoConvergence("nested bisection found no admissible slope")
    return np.array([b, j_star]), count
