"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when user-supplied data or options violate a precondition."""


class DegenerateEstimateError(ValueError):
    """Raised when a null-proportion estimate is undefined (division by zero).

    Callers that can fall back to a conservative answer (zero rejections)
    should catch this instead of letting it propagate.
    """


class InternalInvariantError(RuntimeError):
    """Raised when an internal self-check fails; indicates a bug, not bad input."""
