"""Exception types shared across the package."""


class DistributionError(ValueError):
    """Input is not a valid finite probability distribution."""


class ParameterError(ValueError):
    """A numeric parameter lies outside its admissible range."""


class ResourceCapError(RuntimeError):
    """An exact computation would exceed a configured size cap."""


class PreconditionError(ValueError):
    """A construction was requested outside the regime where it is defined."""


class BoundViolation(AssertionError):
    """A one-shot inequality failed on a concrete object; the message carries the numbers."""
