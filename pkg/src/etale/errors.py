"""Exception hierarchy.  Each class maps onto one CLI exit code."""


class EtaleError(Exception):
    exit_code = 1


class SpecError(EtaleError):
    """Malformed groupoid spec, clopen expression or serialized document."""

    exit_code = 2


class UsageError(SpecError, ValueError):
    """Objects from different unit spaces / groupoids were mixed."""


class ValidationError(SpecError, ValueError):
    """An input value violates the contract of the operation."""


class PreconditionError(EtaleError):
    exit_code = 3


class DomainError(PreconditionError, ValueError):
    """A point lies outside the domain of a partial map."""


class GenerationError(PreconditionError):
    """An arrow is not reachable from the generating set."""


class EstimationError(PreconditionError):
    pass


class SearchExhausted(PreconditionError):
    """A finite search ran off the end of its table; extend the table and retry."""


class InvariantViolation(EtaleError, AssertionError):
    """An identity that must hold by construction failed: this is a bug."""

    exit_code = 4

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state or {}


class NumericError(InvariantViolation):
    pass


class ResourceError(EtaleError):
    exit_code = 5
