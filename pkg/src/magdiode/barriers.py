"""Explicit lower/upper solution families and their verification.

The existence theory brackets solutions between closed-form barriers: a
power-law lower bound delta^2 x^(4/3) for the electrostatic potential (the
space-charge-limited growth rate), an affine upper bound alpha + beta x, the
zero lower bound for the magnetic potential, and the same affine function as
its upper bound. The coefficient delta is the root of

    g(delta) = 4 delta^3 sqrt(2 + delta^2) - 9 j_max (1 + delta^2) = 0,

which encodes that the power law curves fast enough to stay under the true
potential for every current up to j_max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import BracketFailure, InvalidParameter, MeshMismatch
from .grids import FieldProfile, Mesh
from .model import DiodeParams, rhs_a_arrays, rhs_phi_arrays

STRICT_CHAIN_SLACK = 1e-12

# ---------------------------------------------------------------------------
# Closed forms


@dataclass(frozen=True)
class PowerLaw:
    """delta^2 x^(4/3); second derivative (4/9) delta^2 x^(-2/3) for x>0."""

    delta: float

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.delta**2 * np.asarray(x, dtype=float) ** (4.0 / 3.0)

    def second_derivative(self, x: np.ndarray) -> np.ndarray:
        return (4.0 / 9.0) * self.delta**2 * np.asarray(x, dtype=float) ** (-2.0 / 3.0)


@dataclass(frozen=True)
class Affine:
    """alpha + beta x with alpha, beta >= 0."""

    alpha: float
    beta: float

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.alpha + self.beta * np.asarray(x, dtype=float)

    def second_derivative(self, x: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Zero:
    """Identically zero."""

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))

    def second_derivative(self, x: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Const:
    """Constant value (useful as a frozen comparison field)."""

    value_const: float

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.full_like(np.asarray(x, dtype=float), self.value_const)

    def second_derivative(self, x: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))


BarrierForm = PowerLaw | Affine | Zero | Const


@dataclass(frozen=True)
class Barrier:
    """A closed-form sub- or supersolution candidate for one field."""

    field_name: str  # "phi" | "a"
    kind: str        # "lower" | "upper"
    form: BarrierForm
    constraint: str | None = None  # admissibility note recorded at construction

    def __post_init__(self) -> None:
        if self.field_name not in ("phi", "a"):
            raise InvalidParameter(f"barrier field must be phi or a, got {self.field_name!r}")
        if self.kind not in ("lower", "upper"):
            raise InvalidParameter(f"barrier kind must be lower or upper, got {self.kind!r}")

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.form.value(x)

    def second_derivative(self, x: np.ndarray) -> np.ndarray:
        return self.form.second_derivative(x)

    def sample(self, mesh: Mesh) -> FieldProfile:
        return FieldProfile.from_values(mesh, self.value(mesh.nodes))


def make_lower_phi(delta: float) -> Barrier:
    if delta < 0.0 or not math.isfinite(delta):
        raise InvalidParameter(f"delta must be >= 0, got {delta}")
    return Barrier(
        field_name="phi", kind="lower", form=PowerLaw(delta),
        constraint=f"phi_L >= delta**2 = {delta**2:.17g}",
    )


def make_upper_phi(alpha: float, beta: float) -> Barrier:
    if alpha <= 0.0 or beta <= 0.0:
        raise InvalidParameter(f"alpha, beta must be > 0, got {alpha}, {beta}")
    return Barrier(
        field_name="phi", kind="upper", form=Affine(alpha, beta),
        constraint=f"phi_L <= alpha + beta = {alpha + beta:.17g}",
    )


def make_lower_a() -> Barrier:
    return Barrier(field_name="a", kind="lower", form=Zero())


def make_upper_a(phi_upper: Barrier) -> Barrier:
    """The magnetic upper barrier reuses the affine electrostatic one."""
    if phi_upper.field_name != "phi" or phi_upper.kind != "upper":
        raise InvalidParameter("make_upper_a expects the phi upper barrier")
    top = float(phi_upper.value(np.asarray(1.0)))
    return Barrier(
        field_name="a", kind="upper", form=phi_upper.form,
        constraint=f"a_L <= sqrt(top*(2+top)) = {math.sqrt(top * (2.0 + top)):.17g}",
    )


# ---------------------------------------------------------------------------
# delta root and anode bounds


def _g_delta(delta: float, j_max: float) -> float:
    return 4.0 * delta**3 * math.sqrt(2.0 + delta**2) - 9.0 * j_max * (1.0 + delta**2)


def solve_delta(j_x_max: float) -> float:
    """Smallest delta > 0 with 4 d^3 sqrt(2+d^2) = 9 j_max (1+d^2), by bisection.

    The left side over the right is strictly increasing in delta, so the root
    is unique; the returned endpoint keeps g(delta) >= 0 so the power-law
    barrier stays admissible for every j_x <= j_x_max.
    """
    if j_x_max <= 0.0 or not math.isfinite(j_x_max):
        raise InvalidParameter(f"j_x_max must be > 0, got {j_x_max}")
    lo, hi = 1e-8, 1e8
    g_lo, g_hi = _g_delta(lo, j_x_max), _g_delta(hi, j_x_max)
    if g_lo > 0.0 or g_hi < 0.0:
        raise BracketFailure(
            f"no sign change of g on [{lo:g}, {hi:g}] for j_x_max={j_x_max:g}"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < 1e-13 * max(1.0, mid):
            break
        if _g_delta(mid, j_x_max) >= 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def current_ceiling(phi_L: float) -> float:
    """Largest admissible current for anode potential phi_L.

    Equality case of the delta condition with delta^2 = phi_L:
    4 d^3 sqrt(2+d^2) / (9 (1+d^2)).
    """
    if phi_L < 0.0:
        raise InvalidParameter(f"phi_L must be >= 0, got {phi_L}")
    d = math.sqrt(phi_L)
    return 4.0 * d**3 * math.sqrt(2.0 + d**2) / (9.0 * (1.0 + d**2))


@dataclass(frozen=True)
class BoundCheck:
    value: float
    bound: float
    satisfied: bool


@dataclass(frozen=True)
class AnodeBounds:
    """The three admissibility bounds evaluated for one parameter set."""

    current: BoundCheck       # j_x <= ceiling(phi_L)
    magnetic_top: BoundCheck  # |a_L| <= sqrt(phi_up(1) (2 + phi_up(1)))
    magnetic_half: BoundCheck  # |a_L| <= j_x / 2
    delta: float


def anode_bounds(p: DiodeParams, phi_upper_at_1: float, delta: float) -> AnodeBounds:
    """Evaluate the admissibility bounds at the anode.

    a_L enters through its magnitude (the system is symmetric under a -> -a).
    """
    if phi_upper_at_1 <= 0.0:
        raise InvalidParameter("phi_upper_at_1 must be positive")
    ceiling = current_ceiling(p.phi_L)
    top = math.sqrt(phi_upper_at_1 * (2.0 + phi_upper_at_1))
    a_mag = abs(p.a_L)
    return AnodeBounds(
        current=BoundCheck(p.j_x, ceiling, p.j_x <= ceiling),
        magnetic_top=BoundCheck(a_mag, top, a_mag <= top),
        magnetic_half=BoundCheck(a_mag, 0.5 * p.j_x, a_mag <= 0.5 * p.j_x),
        delta=delta,
    )


# ---------------------------------------------------------------------------
# Barrier boxes


@dataclass(frozen=True)
class BarrierBox:
    """Order interval [(phi_lower, a_lower), (phi_upper, a_upper)]."""

    phi_lower: Barrier
    phi_upper: Barrier
    a_lower: Barrier
    a_upper: Barrier

    def __post_init__(self) -> None:
        pairs = (
            (self.phi_lower, "phi", "lower"), (self.phi_upper, "phi", "upper"),
            (self.a_lower, "a", "lower"), (self.a_upper, "a", "upper"),
        )
        for barrier, fname, kind in pairs:
            if barrier.field_name != fname or barrier.kind != kind:
                raise InvalidParameter(f"box slot {fname}/{kind} holds a mismatched barrier")
        # Sufficient pointwise-ordering condition for the explicit family:
        # delta^2 x^(4/3) < alpha + beta x on (0,1] when alpha, beta >= delta^2.
        if isinstance(self.phi_lower.form, PowerLaw) and isinstance(self.phi_upper.form, Affine):
            d2 = self.phi_lower.form.delta**2
            if self.phi_upper.form.alpha < d2 or self.phi_upper.form.beta < d2:
                raise InvalidParameter(
                    "affine upper barrier needs alpha, beta >= delta**2 "
                    f"(delta**2={d2:.6g})"
                )

    @property
    def delta(self) -> float:
        form = self.phi_lower.form
        return form.delta if isinstance(form, PowerLaw) else 0.0

    def ordered_on(self, mesh: Mesh) -> bool:
        x = mesh.nodes[1:]
        return bool(
            np.all(self.phi_lower.value(x) <= self.phi_upper.value(x))
            and np.all(self.a_lower.value(x) <= self.a_upper.value(x))
        )

    def boundary_ok(self, p: DiodeParams) -> bool:
        one = np.asarray(1.0)
        a_mag = abs(p.a_L)
        return bool(
            self.phi_lower.value(one) <= p.phi_L <= self.phi_upper.value(one)
            and self.a_lower.value(one) <= a_mag <= self.a_upper.value(one)
        )


def build_box(p: DiodeParams, alpha: float | None = None,
              beta: float | None = None, delta: float | None = None) -> BarrierBox:
    """Assemble the explicit barrier box for a parameter set.

    delta defaults to the root for p.j_x_max (0 when j_x_max=0, degenerating
    the lower barrier to zero). alpha and beta default to
    max(1, delta^2, phi_L), which covers the boundary inequalities. The
    magnetic upper barrier is the zero form when a_L=0 (tight for the
    decoupled case) and the affine one otherwise.
    """
    if delta is None:
        delta = solve_delta(p.j_x_max) if p.j_x_max > 0.0 else 0.0
    if p.phi_L < delta**2 * (1.0 - 1e-9):
        raise InvalidParameter(
            f"phi_L={p.phi_L:.6g} below delta**2={delta**2:.6g}; "
            "lower barrier would exceed the anode value"
        )
    default_cf = max(1.0, delta**2, p.phi_L)
    alpha = default_cf if alpha is None else alpha
    beta = default_cf if beta is None else beta
    phi_lo = make_lower_phi(delta)
    phi_up = make_upper_phi(alpha, beta)
    a_lo = make_lower_a()
    if p.a_L == 0.0:
        a_up = Barrier(field_name="a", kind="upper", form=Zero())
    else:
        a_up = make_upper_a(phi_up)
    box = BarrierBox(phi_lower=phi_lo, phi_upper=phi_up, a_lower=a_lo, a_upper=a_up)
    if not box.boundary_ok(p):
        raise InvalidParameter(
            f"boundary data (phi_L={p.phi_L:.6g}, a_L={p.a_L:.6g}) "
            "falls outside the barrier box at x=1"
        )
    return box


# ---------------------------------------------------------------------------
# Differential-inequality verification


@dataclass(frozen=True)
class BarrierCheck:
    """Per-node margins of one barrier's differential inequality.

    margin = frozen RHS - barrier''. A lower barrier passes when all valid
    margins are <= 0 (it curves at least as fast as the equation demands), an
    upper one when they are >= 0. Nodes whose radicand falls under the zero
    threshold are indeterminate and excluded from the verdict.
    """

    field_name: str
    kind: str
    x: np.ndarray
    margins: np.ndarray
    indeterminate: np.ndarray
    passed: bool
    frozen_at: str

    @property
    def n_indeterminate(self) -> int:
        return int(self.indeterminate.sum())

    @property
    def n_violations(self) -> int:
        ok = ~self.indeterminate
        if self.kind == "lower":
            bad = self.margins[ok] > self._tol()[ok]
        else:
            bad = self.margins[ok] < -self._tol()[ok]
        return int(np.count_nonzero(bad))

    def _tol(self) -> np.ndarray:
        return STRICT_CHAIN_SLACK * np.maximum(1.0, np.abs(self.margins))


def verify_barrier(b: Barrier, box: BarrierBox, p: DiodeParams,
                   mesh: Mesh) -> BarrierCheck:
    """Check b's differential inequality with the opposing field frozen.

    The RHS is monotone in the opposing field on the physical branch, so the
    sup (for lower barriers) / inf (for upper barriers) over the box is
    attained at a box endpoint; both endpoints are evaluated and the worse one
    is used node by node.
    """
    x = mesh.interior
    bvals = b.value(x)
    d2 = b.second_derivative(x)
    if b.field_name == "phi":
        frozen_lo, frozen_hi = box.a_lower.value(x), box.a_upper.value(x)
        rhs_lo, _, mask_lo = rhs_phi_arrays(bvals, frozen_lo, p.j_x)
        rhs_hi, _, mask_hi = rhs_phi_arrays(bvals, frozen_hi, p.j_x)
        frozen_desc = "a in {a_lower, a_upper}"
    else:
        frozen_lo, frozen_hi = box.phi_lower.value(x), box.phi_upper.value(x)
        rhs_lo, _, mask_lo = rhs_a_arrays(frozen_lo, bvals, p.j_x)
        rhs_hi, _, mask_hi = rhs_a_arrays(frozen_hi, bvals, p.j_x)
        frozen_desc = "phi in {phi_lower, phi_upper}"
    indeterminate = mask_lo | mask_hi
    if b.kind == "lower":
        rhs = np.maximum(rhs_lo, rhs_hi)
    else:
        rhs = np.minimum(rhs_lo, rhs_hi)
    margins = rhs - d2
    tol = STRICT_CHAIN_SLACK * np.maximum(1.0, np.abs(margins))
    valid = ~indeterminate
    if b.kind == "lower":
        passed = bool(np.all(margins[valid] <= tol[valid]))
    else:
        passed = bool(np.all(margins[valid] >= -tol[valid]))
    return BarrierCheck(
        field_name=b.field_name, kind=b.kind, x=x, margins=margins,
        indeterminate=indeterminate, passed=passed, frozen_at=frozen_desc,
    )


def verify_box(box: BarrierBox, p: DiodeParams, mesh: Mesh) -> dict[str, BarrierCheck]:
    """Run verify_barrier for all four box slots."""
    return {
        "phi_lower": verify_barrier(box.phi_lower, box, p, mesh),
        "phi_upper": verify_barrier(box.phi_upper, box, p, mesh),
        "a_lower": verify_barrier(box.a_lower, box, p, mesh),
        "a_upper": verify_barrier(box.a_upper, box, p, mesh),
    }


# ---------------------------------------------------------------------------
# Ordering chains


@dataclass(frozen=True)
class ChainEntry:
    """A semitrivial profile tagged by field, kind, and frozen indicator.

    Indicators name which field was frozen where when the profile was
    produced: a1 (a=0), a2 (a at its upper barrier), a3 (a at its lower
    barrier) for phi-profiles; phi1 (phi at its upper barrier), phi2 (phi at
    its lower barrier) for a-profiles.
    """

    profile: FieldProfile
    field_name: str
    kind: str
    indicator: str


# Expected pointwise strict orderings, innermost chains first.
PHI_CHAIN: tuple[tuple[str, str], ...] = (
    ("lower", "a1"), ("lower", "a2"), ("lower", "a3"), ("upper", "a2"), ("upper", "a1"),
)
A_CHAIN: tuple[tuple[str, str], ...] = (
    ("lower", "phi1"), ("lower", "phi2"), ("upper", "phi2"), ("upper", "phi1"),
)


@dataclass(frozen=True)
class OrderingReport:
    ok: bool
    checked_pairs: int
    first_violation: Mapping[str, Any] | None = field(default=None)


def verify_ordering_chains(entries: Sequence[ChainEntry]) -> OrderingReport:
    """Check the strict pointwise ordering chains among supplied profiles.

    Slots missing from the input are skipped; present consecutive slots must
    be strictly ordered at every interior node (relative slack 1e-12). The
    first violating node is reported.
    """
    if not entries:
        return OrderingReport(ok=True, checked_pairs=0)
    mesh = entries[0].profile.mesh
    for e in entries:
        if not e.profile.mesh.same_nodes(mesh):
            raise MeshMismatch("chain profiles are on different meshes")

    def find(fname: str, kind: str, indicator: str) -> ChainEntry | None:
        for e in entries:
            if (e.field_name, e.kind, e.indicator) == (fname, kind, indicator):
                return e
        return None

    checked = 0
    for fname, template in (("phi", PHI_CHAIN), ("a", A_CHAIN)):
        present = [e for slot in template
                   if (e := find(fname, slot[0], slot[1])) is not None]
        for lo, hi in zip(present, present[1:]):
            u = lo.profile.values[1:-1]
            v = hi.profile.values[1:-1]
            slack = STRICT_CHAIN_SLACK * np.maximum(
                1.0, np.maximum(np.abs(u), np.abs(v))
            )
            bad = v - u <= slack
            checked += 1
            if np.any(bad):
                i = int(np.argmax(bad)) + 1
                return OrderingReport(
                    ok=False, checked_pairs=checked,
                    first_violation={
                        "chain": fname,
                        "pair": (f"{lo.kind}@{lo.indicator}", f"{hi.kind}@{hi.indicator}"),
                        "node": i,
                        "x": float(mesh.nodes[i]),
                        "values": (float(lo.profile.values[i]), float(hi.profile.values[i])),
                    },
                )
    return OrderingReport(ok=True, checked_pairs=checked)
