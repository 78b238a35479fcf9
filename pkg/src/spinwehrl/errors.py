"""Exception types shared by all modules."""


class InvalidArgumentError(ValueError):
    """An argument violates the documented domain of an operation."""


class PreconditionError(ValueError):
    """An input object does not satisfy the invariant an operation relies on
    (for instance an unnormalized state passed to an entropy)."""


class NumericDomainError(ArithmeticError):
    """An integrand or pointwise formula produced a non-finite value.

    Attributes
    ----------
    index : int or None
        Position of the offending quadrature node, if any.
    point : complex or None
        Stereographic coordinate of the offending point.
    """

    def __init__(self, message, index=None, point=None):
        super().__init__(message)
        self.index = index
        self.point = point


class IntegrationFailure(RuntimeError):
    """The ODE integrator could not continue (step-size collapse)."""

    def __init__(self, message, theta_reached):
        super().__init__(message)
        self.theta_reached = theta_reached
