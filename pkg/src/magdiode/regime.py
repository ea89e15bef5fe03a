"""Admissibility bounds, regime classification, and current sweeps.

The theory certifies solutions only inside an explicit parameter region:
the current below the ceiling set by the anode potential, the magnetic
anode value below both the geometric bound of the upper barrier and half
the current. Points outside are either beyond the theory's reach (the
barrier family cannot bracket them) or suspected of magnetic insulation
(the discriminant would vanish before the anode). The classifier walks
those checks in order and, near the fence, fires one shooting probe to see
whether the trajectory actually survives to x=1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .barriers import BarrierBox, BoundCheck, anode_bounds, build_box
from .errors import InvalidParameter, MagdiodeError
from .grids import Mesh, make_mesh
from .model import DiodeParams
from .system_solver import SolutionPair, solve_system

NONINSULATED = "Noninsulated"
INSULATION_SUSPECTED = "InsulationSuspected"
OUTSIDE_THEORY = "OutsideTheory"

BORDERLINE_FRACTION = 0.05


@dataclass(frozen=True)
class RegimeReport:
    bound_17: BoundCheck
    bound_18: BoundCheck
    bound_23: BoundCheck
    classification: str
    provenance: Mapping[str, Any] = field(default_factory=dict)


def _is_borderline(check: BoundCheck) -> bool:
    if check.bound <= 0.0:
        return False
    return abs(check.value - check.bound) < BORDERLINE_FRACTION * check.bound


def classify(p: DiodeParams, box: BarrierBox, probe: bool = True) -> RegimeReport:
    """Classify the diode regime from the admissibility bounds.

    The order encodes severity: a potential below the barrier floor or a
    current above the ceiling puts the parameters outside the theory; a
    magnetic anode value too large for the current or the upper barrier
    flags suspected insulation. Bounds all passing but within 5% of
    equality trigger a single shooting probe, since the discriminant can
    still vanish inside the borderline band.
    """
    phi_up_1 = float(box.phi_upper.value(np.asarray(1.0)))
    delta = box.delta
    bounds = anode_bounds(p, phi_up_1, delta)
    provenance: dict[str, Any] = {
        "delta": delta,
        "phi_upper_at_1": phi_up_1,
        "ceiling": bounds.current.bound,
        "probe_ran": False,
    }

    def report(label: str) -> RegimeReport:
        return RegimeReport(
            bound_17=bounds.current, bound_18=bounds.magnetic_top,
            bound_23=bounds.magnetic_half, classification=label,
            provenance=provenance,
        )

    if p.phi_L < delta**2 * (1.0 - 1e-9):
        provenance["reason"] = "phi_L below delta**2"
        return report(OUTSIDE_THEORY)
    if not bounds.magnetic_half.satisfied:
        provenance["reason"] = "a_L above j_x/2"
        return report(INSULATION_SUSPECTED)
    if not bounds.current.satisfied:
        provenance["reason"] = "current above ceiling"
        return report(OUTSIDE_THEORY)
    if not bounds.magnetic_top.satisfied:
        provenance["reason"] = "a_L above upper-barrier bound"
        return report(INSULATION_SUSPECTED)

    borderline = any(_is_borderline(c) for c in
                     (bounds.current, bounds.magnetic_top, bounds.magnetic_half))
    if probe and borderline and p.phi_L > 0.0 and p.j_x > 0.0:
        provenance["probe_ran"] = True
        from .shooting import shoot_system

        try:
            shot = shoot_system(p, mesh=make_mesh(65, "graded"),
                                tol=1e-8, max_iter=40)
        except MagdiodeError as err:
            provenance["probe_outcome"] = type(err).__name__
            return report(INSULATION_SUSPECTED)
        provenance["probe_outcome"] = shot.trajectory.reason
        if shot.trajectory.reason != "reached_1":
            return report(INSULATION_SUSPECTED)
    return report(NONINSULATED)


# ---------------------------------------------------------------------------
# Continuation in the current


@dataclass(frozen=True)
class SweepRow:
    j_x: float
    converged: bool
    classification: str
    phi_mid: float | None = None
    a_mid: float | None = None
    residual_phi: float | None = None
    residual_a: float | None = None
    error: str | None = None


@dataclass(frozen=True)
class SweepResult:
    rows: Sequence[SweepRow]
    max_converged_jx: float | None


def sweep_jx(p: DiodeParams, j_values: Sequence[float],
             mesh: Mesh | None = None, probe: bool = False) -> SweepResult:
    """Solve the system along ascending currents with warm starts.

    Each converged solution seeds the next row's iteration. Rows whose
    parameters fall outside the admissible region, or whose solve fails,
    carry the error text; the sweep always completes.
    """
    js = sorted(float(j) for j in j_values)
    if js and js[0] <= 0.0:
        raise InvalidParameter("sweep currents must be positive")
    if mesh is None:
        mesh = make_mesh(257, "graded")
    rows: list[SweepRow] = []
    previous: SolutionPair | None = None
    max_ok: float | None = None
    for j in js:
        # box sized to the row's own current: a row is admissible exactly
        # when delta(j)^2 <= phi_L, independent of the template's j_x_max
        p_row = p.with_(j_x=j, j_x_max=j)
        try:
            box = build_box(p_row)
        except InvalidParameter as err:
            rows.append(SweepRow(j_x=j, converged=False,
                                 classification=OUTSIDE_THEORY, error=str(err)))
            continue
        label = classify(p_row, box, probe=probe).classification
        try:
            pair = solve_system(p_row, box, mesh, start=previous)
        except MagdiodeError as err:
            rows.append(SweepRow(j_x=j, converged=False, classification=label,
                                 error=f"{type(err).__name__}: {err}"))
            continue
        previous = pair
        max_ok = j
        rows.append(SweepRow(
            j_x=j, converged=True, classification=label,
            phi_mid=float(pair.phi.interp(np.asarray(0.5))),
            a_mid=float(pair.a.interp(np.asarray(0.5))),
            residual_phi=pair.residual_phi, residual_a=pair.residual_a,
        ))
    return SweepResult(rows=rows, max_converged_jx=max_ok)
