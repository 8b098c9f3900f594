"""Exception types raised by mtspec."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class NumericError(ArithmeticError):
    """A numerical routine failed (e.g. an eigen-solver did not converge)."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
