class InputError(ValueError):
    """Invalid arguments: violated preconditions, ill-formed data."""


class DiagnosticError(RuntimeError):
    """A numerical self-check failed (defect too large, spectrum out of range)."""

    def __init__(self, message: str, stage: str | None = None):
        super().__init__(message if stage is None else f"[{stage}] {message}")
        self.stage = stage
