"""Field equations of the planar crossed-field diode on the positive branch.

The stationary flow is described by two coupled potentials on [0,1]: the
electrostatic potential phi and the magnetic potential a, obeying

    phi'' = j (1 + phi) / sqrt(|(1+phi)^2 - 1 - a^2|),
    a''   = j a / sqrt(|(1+phi)^2 - 1 - a^2|),

with j the current density. The radicand (1+phi)^2 - 1 - a^2 is the
discriminant of the flow: its zero set marks electron reflection, and the
right-hand sides are evaluated through the modulus so both branches stay
computable while the sign is reported alongside.

A regularized variant shifts the potential by eps > 0 to remove the cathode
singularity (phi(0)=0 makes the radicand vanish at x=0 when a(0)=0):

    F_eps = j (1 + phi + eps) / sqrt(|(1+phi+eps)^2 - 1 - a^2|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Mapping

import numpy as np

from .errors import InvalidParameter, QuadratureFailure, SingularPoint
from .grids import FieldProfile

if TYPE_CHECKING:  # pragma: no cover - annotation only, avoids an import cycle
    from .barriers import BarrierBox

# |radicand| below this scale counts as a singular point.
ZERO_THRESHOLD_SCALE = 1e-14


@dataclass(frozen=True)
class DiodeParams:
    """Physical and numerical parameters of one diode configuration.

    j_x=0 is admitted as the degenerate zero-current case (the system turns
    linear and the solvers return the straight-line pair exactly).
    """

    j_x: float
    phi_L: float
    a_L: float
    j_x_max: float | None = None
    epsilon: float = 0.0
    tol_residual: float = 1e-10
    tol_iter: float = 1e-10

    def __post_init__(self) -> None:
        if self.j_x_max is None:
            object.__setattr__(self, "j_x_max", self.j_x)
        if not math.isfinite(self.j_x) or self.j_x < 0.0:
            raise InvalidParameter(f"j_x must be >= 0, got {self.j_x}")
        if self.j_x_max < self.j_x:
            raise InvalidParameter(
                f"j_x_max={self.j_x_max} must be >= j_x={self.j_x}"
            )
        if not math.isfinite(self.phi_L) or self.phi_L < 0.0:
            raise InvalidParameter(f"phi_L must be >= 0, got {self.phi_L}")
        if not math.isfinite(self.a_L):
            raise InvalidParameter("a_L must be finite")
        if self.epsilon < 0.0:
            raise InvalidParameter(f"epsilon must be >= 0, got {self.epsilon}")
        if self.tol_residual <= 0.0 or self.tol_iter <= 0.0:
            raise InvalidParameter("tolerances must be positive")

    def with_(self, **kw: Any) -> "DiodeParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class Discriminant:
    """Radicand value with its thresholded sign (-1, 0, +1)."""

    value: float
    sign: int


def zero_threshold(phi: float) -> float:
    return ZERO_THRESHOLD_SCALE * max(1.0, (1.0 + phi) ** 2)


def discriminant(phi: float, a: float) -> Discriminant:
    """Classify the radicand (1+phi)^2 - 1 - a^2 against the zero threshold."""
    # phi(2+phi) == (1+phi)^2 - 1 exactly; the expanded form avoids the
    # catastrophic cancellation of subtracting 1 when phi is tiny.
    value = phi * (2.0 + phi) - a * a
    thr = zero_threshold(phi)
    if abs(value) < thr:
        sign = 0
    else:
        sign = 1 if value > 0.0 else -1
    return Discriminant(value=value, sign=sign)


def _checked_root(phi: float, a: float, shift: float) -> float:
    """sqrt(|radicand|) of the shifted potential, or SingularPoint."""
    s = phi + shift
    base = 1.0 + s
    value = s * (2.0 + s) - a * a
    if abs(value) < ZERO_THRESHOLD_SCALE * max(1.0, base * base):
        raise SingularPoint(phi, a, value)
    return math.sqrt(abs(value))


def eval_F(phi: float, a: float, p: DiodeParams) -> float:
    """Electrostatic right-hand side j (1+phi)/sqrt(|(1+phi)^2-1-a^2|)."""
    return p.j_x * (1.0 + phi) / _checked_root(phi, a, 0.0)


def eval_G(phi: float, a: float, p: DiodeParams) -> float:
    """Magnetic right-hand side j a/sqrt(|(1+phi)^2-1-a^2|)."""
    return p.j_x * a / _checked_root(phi, a, 0.0)


def eval_F_eps(phi: float, a: float, p: DiodeParams) -> float:
    """Regularized electrostatic right-hand side with the eps shift.

    eps=0 reduces to eval_F exactly (same code path).
    """
    return p.j_x * (1.0 + phi + p.epsilon) / _checked_root(phi, a, p.epsilon)


def eval_G_eps(phi: float, a: float, p: DiodeParams) -> float:
    """Magnetic right-hand side with the frozen potential shifted by eps."""
    return p.j_x * a / _checked_root(phi, a, p.epsilon)


# ---------------------------------------------------------------------------
# Vectorized forms used by the grid solvers. These never raise on singular
# nodes; they return a mask so callers can exclude or report them.

def radicand_arrays(phi: np.ndarray, a: np.ndarray,
                    eps: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """(radicand, singular_mask) of the shifted potential, elementwise."""
    s = np.asarray(phi, dtype=float) + eps
    base = 1.0 + s
    value = s * (2.0 + s) - np.asarray(a, dtype=float) ** 2
    mask = np.abs(value) < ZERO_THRESHOLD_SCALE * np.maximum(1.0, base * base)
    return value, mask


def rhs_phi_arrays(phi: np.ndarray, a: np.ndarray, j_x: float,
                   eps: float = 0.0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(F_eps values, dF/dphi, singular_mask) elementwise; F on masked nodes is 0.

    On the negative branch d|r|/dphi flips sign, so the derivative is
    (|r| - sign(r) (1+phi+eps)^2)/|r|^(3/2) times j; on the positive branch
    this is the strictly negative -j (1+a^2)/r^(3/2).
    """
    base = 1.0 + np.asarray(phi, dtype=float) + eps
    a = np.asarray(a, dtype=float)
    r, mask = radicand_arrays(phi, a, eps)
    absr = np.abs(r)
    safe = np.where(mask, 1.0, absr)
    root = np.sqrt(safe)
    f = j_x * base / root
    df = j_x * (absr - np.sign(r) * base * base) / (safe * root)
    f = np.where(mask, 0.0, f)
    df = np.where(mask, 0.0, df)
    return f, df, mask


def rhs_a_arrays(phi: np.ndarray, a: np.ndarray, j_x: float,
                 eps: float = 0.0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(G_eps values, dG/da, singular_mask) elementwise; G on masked nodes is 0."""
    a = np.asarray(a, dtype=float)
    r, mask = radicand_arrays(phi, a, eps)
    absr = np.abs(r)
    safe = np.where(mask, 1.0, absr)
    root = np.sqrt(safe)
    g = j_x * a / root
    dg = j_x * (absr + np.sign(r) * a * a) / (safe * root)
    g = np.where(mask, 0.0, g)
    dg = np.where(mask, 0.0, dg)
    return g, dg, mask


def to_transformed(profile: FieldProfile) -> FieldProfile:
    """Map phi to u = -phi (the sign-flipped formulation); an involution."""
    return FieldProfile.from_values(
        profile.mesh, -profile.values, residual=profile.residual,
        info=dict(profile.info),
    )


# ---------------------------------------------------------------------------
# Structural-hypothesis checks. The existence theory assumes the right-hand
# side f(x, u) is continuous off the boundary, majorized by an integrable
# power near u=0, and monotone in u; the last assumption is checked (not
# assumed) because the actual F is strictly decreasing in phi on a=0.

@dataclass(frozen=True)
class HypothesisCheckConfig:
    quad_nodes: int = 512
    max_doublings: int = 18
    quad_rel_change: float = 1e-6
    fd_step_scale: float = 1e-6
    gamma_samples: int = 25
    alpha: float = 0.5


@dataclass(frozen=True)
class HypothesisReport:
    continuous_on_box: bool
    singular_samples: int
    weighted_integral: float
    integral_nodes: int
    integral_finite: bool
    dF_dphi_samples: tuple[tuple[float, float], ...]
    rhs_nondecreasing_in_phi: bool
    majorant_gamma_fit: float
    majorant_alpha: float
    majorant_holds: bool
    notes: Mapping[str, Any] = field(default_factory=dict)


def _doubling_quadrature(f, n0: int, max_doublings: int, rel_change: float,
                         label: str) -> tuple[float, int]:
    """Composite Simpson on [0,1] with node doubling until stabilization."""
    n = max(8, n0)
    if n % 2:
        n += 1
    prev = None
    for _ in range(max_doublings + 1):
        t = np.linspace(0.0, 1.0, n + 1)
        y = f(t)
        h = 1.0 / n
        est = h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())
        if prev is not None and abs(est - prev) <= rel_change * max(abs(est), 1e-300):
            return float(est), n + 1
        prev = est
        n *= 2
    raise QuadratureFailure(
        f"{label}: estimate did not stabilize to {rel_change:g} within "
        f"{max_doublings} doublings (last {prev:.6e})"
    )


def check_hypotheses(p: DiodeParams, box: "BarrierBox",
                     cfg: HypothesisCheckConfig | None = None) -> HypothesisReport:
    """Probe the structural hypotheses of the existence theory on a box.

    Reports: continuity spot checks of both right-hand sides inside the box;
    the weighted integral of s(1-s)F along the lower phi barrier (finite iff
    the singular endpoint is integrable); the observed finite-difference sign
    of dF/dphi along a=0 (expected negative, i.e. the nondecreasing variant
    fails); and the power majorant |F| <= gamma (1 + s^-alpha) on samples.
    """
    cfg = cfg or HypothesisCheckConfig()

    # Continuity spot checks on an interior sample grid of the box.
    xs = np.linspace(0.05, 0.95, 13)
    singular = 0
    total = 0
    for frac in (0.25, 0.5, 0.75):
        phis = box.phi_lower.value(xs) * (1 - frac) + box.phi_upper.value(xs) * frac
        avals = box.a_lower.value(xs) * (1 - frac) + box.a_upper.value(xs) * frac
        fvals, _, fmask = rhs_phi_arrays(phis, avals, p.j_x)
        gvals, _, gmask = rhs_a_arrays(phis, avals, p.j_x)
        total += 2 * xs.size
        singular += int(fmask.sum()) + int(gmask.sum())
        if not (np.all(np.isfinite(fvals)) and np.all(np.isfinite(gvals))):
            singular += 1
    continuous = singular == 0

    # Weighted integrability along the lower barrier: substitute s = t^3 to
    # flatten the s^(-2/3) endpoint growth, then Simpson with doubling.
    def weighted(t: np.ndarray) -> np.ndarray:
        s = t**3
        inner = s[1:-1] if s.size > 2 else s
        phi0 = box.phi_lower.value(inner)
        a0 = box.a_lower.value(inner)
        f, _, mask = rhs_phi_arrays(phi0, a0, p.j_x)
        vals = np.zeros_like(s)
        vals[1:-1] = np.where(mask, 0.0, inner * (1.0 - inner) * f)
        return vals * 3.0 * t**2

    integral, nodes_used = _doubling_quadrature(
        weighted, cfg.quad_nodes, cfg.max_doublings, cfg.quad_rel_change,
        "weighted integral of s(1-s)F",
    )
    finite = math.isfinite(integral)

    # Monotonicity scan of F in phi along a=0 by central differences.
    samples = []
    signs = []
    for phi in (0.5, 1.0, 2.0, 4.0):
        h = cfg.fd_step_scale * max(1.0, abs(phi))
        d = (eval_F(phi + h, 0.0, p) - eval_F(phi - h, 0.0, p)) / (2.0 * h) \
            if p.j_x > 0.0 else 0.0
        samples.append((phi, d))
        signs.append(d)
    nondecreasing = all(d >= 0.0 for d in signs)

    # Power majorant |F(s)| <= gamma (1 + s^-alpha) along a=0; report the
    # smallest gamma seen on a log-spaced sample of s.
    svals = np.logspace(-8, 1, cfg.gamma_samples)
    fvals, _, mask = rhs_phi_arrays(svals, np.zeros_like(svals), p.j_x)
    ratios = np.abs(fvals[~mask]) / (1.0 + svals[~mask] ** (-cfg.alpha))
    gamma_fit = float(ratios.max()) if ratios.size else 0.0
    majorant_holds = bool(np.all(np.isfinite(ratios)))

    return HypothesisReport(
        continuous_on_box=continuous,
        singular_samples=singular,
        weighted_integral=integral,
        integral_nodes=nodes_used,
        integral_finite=finite,
        dF_dphi_samples=tuple(samples),
        rhs_nondecreasing_in_phi=nondecreasing,
        majorant_gamma_fit=gamma_fit,
        majorant_alpha=cfg.alpha,
        majorant_holds=majorant_holds,
        notes={"sampled_points": total},
    )
