"""Exception hierarchy.

Every failure raised by the toolkit derives from :class:`UnivalentError` and
belongs to exactly one family.  The CLI maps families to exit codes.
"""


class UnivalentError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class PreconditionError(UnivalentError, ValueError):
    """An input violates a documented precondition."""

    exit_code = 4


class NumericalError(UnivalentError, ArithmeticError):
    """A numerical procedure failed to reach its certified tolerance."""

    exit_code = 3


class ConfigError(UnivalentError):
    """Malformed or invalid experiment configuration."""

    exit_code = 2


# -- geometry / quadrature ---------------------------------------------------

class NonFiniteValue(PreconditionError):
    pass


class PointOnContour(PreconditionError):
    pass


class EmptyRegion(PreconditionError):
    pass


class QuadratureInconclusive(NumericalError):
    pass


# -- rational calculus -------------------------------------------------------

class ConstantFunction(PreconditionError):
    pass


class BoundaryDegeneracy(PreconditionError):
    pass


class NoConvergence(NumericalError):
    pass


# -- Runge engine ------------------------------------------------------------

class IllConditioned(NumericalError):
    pass


class TargetNonFinite(PreconditionError):
    pass


class InsufficientSamples(PreconditionError):
    pass


class ZeroOnCompact(PreconditionError):
    pass


class PoleOnCompact(PreconditionError):
    pass


class WindingMismatch(PreconditionError):
    pass


class DegreeCapExceeded(NumericalError):
    def __init__(self, message, best_error=float("nan")):
        super().__init__(message)
        self.best_error = best_error


class SingularJacobian(NumericalError):
    pass


class NotLocallyUnivalent(PreconditionError):
    pass


class OverlappingPieces(PreconditionError):
    pass


class UnsupportedDomain(PreconditionError):
    pass


# -- Schwarzian ODE ----------------------------------------------------------

class StepUnderflow(NumericalError):
    pass


class PathMismatch(PreconditionError):
    pass


class DegenerateFrame(PreconditionError):
    pass


class ComplementNotConnected(PreconditionError):
    pass


class PoleOnContour(PreconditionError):
    pass


# -- conformal metrics -------------------------------------------------------

class OutsideDisk(PreconditionError):
    pass


class InsufficientInterior(PreconditionError):
    pass


class RangeEscape(PreconditionError):
    pass


class CriticalPoint(PreconditionError):
    pass


class NonPositiveTarget(PreconditionError):
    pass


class Overlap(PreconditionError):
    pass


# -- universality lab --------------------------------------------------------

class ProbeOnBoundary(PreconditionError):
    pass


class StagesNotSeparable(PreconditionError):
    pass
