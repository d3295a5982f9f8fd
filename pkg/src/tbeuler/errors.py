"""Exception types shared across the package."""


class ModelError(ValueError):
    """Malformed or invalid polynomial DDE model."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NotTBCandidate(ValueError):
    """The linear part does not have the Takens-Bogdanov structure."""


class StructureViolation(RuntimeError):
    """A projected normal form has support outside the expected monomials."""


class ConvergenceError(RuntimeError):
    pass


class NoSignChange(RuntimeError):
    """Both bracket endpoints fall in the same class."""


class SizeCapExceeded(ValueError):
    pass
