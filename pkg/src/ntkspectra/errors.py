"""Shared exception types."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge or lost positivity."""


class DivergenceError(NumericalError):
    """Gradient descent diverged; carries diagnostics for post-mortem."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
