"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Array shapes of a model, data set or operator argument disagree."""


class ValidationError(ValueError):
    """An input violates a documented invariant (bad response, negative threshold, ...)."""


class DivergenceError(ArithmeticError):
    """The objective became non-finite during an iterative fit."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class ParseError(ValueError):
    """A data or configuration file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
