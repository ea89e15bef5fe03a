"""Exception types shared across the solver suite.

Every failure mode that callers may want to catch individually gets its own
class; all of them derive from MagdiodeError so the CLI can map the whole
family onto one exit code.
"""

from __future__ import annotations


class MagdiodeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameter(MagdiodeError):
    """A parameter bundle violates its admissibility constraints."""


class SingularPoint(MagdiodeError):
    """The discriminant vanished (within threshold) where a finite value was needed."""

    def __init__(self, phi: float, a: float, radicand: float):
        self.phi = phi
        self.a = a
        self.radicand = radicand
        super().__init__(
            f"discriminant {radicand:.3e} below zero threshold at phi={phi:.6g}, a={a:.6g}"
        )


class MeshMismatch(MagdiodeError):
    """Profiles defined on different meshes were combined."""


class QuadratureFailure(MagdiodeError):
    """Adaptive quadrature did not stabilize under node doubling."""


class BracketFailure(MagdiodeError):
    """A bisection bracket does not enclose a sign change."""


class NewtonDivergence(MagdiodeError):
    """Damped Newton exhausted its step halvings without reducing the residual."""


class JacobianSingular(MagdiodeError):
    """A Newton Jacobian was singular to working precision."""


class NoSolution(MagdiodeError):
    """The continuation ladder ran out of parameter space without converging."""


class BarrierEscape(MagdiodeError):
    """A converged iterate left its barrier box by more than the tolerance."""


class MonotonicityViolation(MagdiodeError):
    """A monotone iteration produced an out-of-order sweep."""


class MaxIterations(MagdiodeError):
    """An iteration hit its sweep cap before meeting its tolerance."""


class PremiseFailure(MagdiodeError):
    """A comparison-principle premise failed; the conclusion is unavailable."""


class StepUnderflow(MagdiodeError):
    """An adaptive integrator needed steps below the representable floor."""


class NoBracket(MagdiodeError):
    """Bracket expansion exhausted its range without enclosing a root."""


class EventAbort(MagdiodeError):
    """Every trial trajectory terminated on the discriminant-zero event."""


class NoConvergence(MagdiodeError):
    """An outer iteration (sweeps or shooting Newton) hit its cap."""


class BoxViolation(MagdiodeError):
    """Coupled sweeps required clipping beyond the admissible tolerance."""


class ConfigError(MagdiodeError):
    """A run configuration failed validation."""


class IoError(MagdiodeError):
    """An output path could not be written or an input path read."""
