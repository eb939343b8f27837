"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid argument or precondition violation."""


class ResourceError(RuntimeError):
    """Requested computation exceeds the configured memory budget."""


class DegeneracyError(RuntimeError):
    """Moment matrix too close to singular (near-concentration on a hyperplane)."""


class NumericError(ArithmeticError):
    """Non-finite value encountered where a finite one is required."""
