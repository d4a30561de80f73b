"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """A series or quadrature failed to reach the requested accuracy."""


class IntegerConditionError(ValueError):
    """Closed-form path requested for a channel whose fading/pointing
    parameters do not satisfy the integer conditions it needs."""


class DegenerateFitError(ValueError):
    """Mixture construction produced non-finite or non-positive terms."""
