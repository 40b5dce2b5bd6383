"""Exception and warning types raised by the library."""


class NonintegrabilityError(Exception):
    """Base class for all errors raised by this package."""


class EvaluationFailure(NonintegrabilityError):
    pass


class DimensionMismatch(NonintegrabilityError):
    pass


class InvalidParams(NonintegrabilityError, ValueError):
    pass


class NotAnEquilibrium(NonintegrabilityError):
    pass


class IntegrationError(NonintegrabilityError):
    """Raised when time integration cannot be completed."""


class StepSizeUnderflow(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


class MatchFailure(NonintegrabilityError):
    """The two half-solutions of the bounded adjoint solution do not line up at t = 0."""


class EigenvectorAmbiguity(NonintegrabilityError):
    pass


class QuadratureFailure(NonintegrabilityError):
    pass


class InvalidHarmonic(NonintegrabilityError, ValueError):
    pass


class ConjugacyViolation(NonintegrabilityError):
    pass


class ConfigError(NonintegrabilityError):
    pass


class AssumptionViolation(UserWarning):
    """Emitted when a numerically checkable assumption fails at a sample point."""


class DecayMismatch(UserWarning):
    """Emitted when fitted orbit decay disagrees with the eigenvalue prediction."""
