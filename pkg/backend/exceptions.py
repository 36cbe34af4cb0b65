from typing import Optional


class DimensionError(ValueError):
    """Raised when two arrays disagree on a dimension."""


class InsufficientDataError(ValueError):
    def __init__(self, what: str, required: int, available: int):
        self.required = required
        self.available = available
        super().__init__(f"{what}: need at least {required}, got {available}")


class ExcitationError(ValueError):
    """The input does not excite the system enough to identify it."""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class RealizationError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass
