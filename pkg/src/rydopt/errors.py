"""Exception types shared across the package."""


class RydoptError(Exception):
    """Base class for all package-specific errors."""


class InvalidPulseError(RydoptError):
    """A pulse profile violates its structural invariants."""


class IntegrationFailureError(RydoptError):
    """Numerical integration produced non-finite or inconsistent results."""


class UnsupportedVariantError(RydoptError):
    """The requested equation variant is not supported."""


class SingularEvaluationError(RydoptError):
    """A coefficient field was evaluated at a singular latitude."""


class DegenerateDirectionError(RydoptError):
    """The drive direction sum |A| is numerically zero."""


class InconsistentStartError(RydoptError):
    """A regularized start point failed to land on the constraint surface."""


class UnreachableTargetError(RydoptError):
    """A composite-pulse construction cannot reach the requested target."""


class NoSolutionError(RydoptError):
    """The characteristic search found no trajectory hitting the target."""
