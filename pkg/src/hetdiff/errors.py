"""Exception types shared across the package."""


class InvalidPointError(ValueError):
    """A pointwise quantity was requested at the interface ``x == 0``."""


class AccuracyError(ArithmeticError):
    """A quadrature or refinement loop did not reach its tolerance.

    The best achieved error estimate is kept on ``achieved``.
    """

    def __init__(self, message, achieved=float("nan")):
        super().__init__(f"{message} (achieved {achieved:.3e})")
        self.achieved = achieved


class DomainError(ValueError):
    """Input outside the domain of a transformation, e.g. the log of a nonpositive value."""
