"""Exception types shared across the package."""


class KnotforgeError(Exception):
    pass


class ValidationError(KnotforgeError, ValueError):
    """Input violates a structural invariant (bad polygon, bad file, bad config).

    ``index`` names the offending vertex when there is one.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConvergenceError(KnotforgeError, RuntimeError):
    """An iterative numerical procedure did not reach its tolerance."""


class ParseError(ValidationError):
    """A file could not be parsed; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
