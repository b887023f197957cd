"""Error hierarchy shared by every layer."""


class DeblurError(Exception):
    """Root of all errors raised by mimo_deblur."""


class ConfigurationError(DeblurError, ValueError):
    """Invalid hyperparameter, layer configuration or settings value."""


class UsageError(DeblurError, ValueError):
    """An API was called in a way its contract does not allow."""


class InputError(DeblurError, ValueError):
    """Input data (image sizes, frame counts, files) is unusable."""


class CheckpointError(DeblurError):
    """A checkpoint file cannot be read or does not match the model."""


class NonFiniteLossError(DeblurError, ArithmeticError):
    """Training produced a NaN or infinite loss."""

    def __init__(self, message: str, diagnostics: dict | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ValidationError(DeblurError):
    """One or more records failed validation.

    Attributes:
        problems: One human-readable line per failed record.
    """

    def __init__(self, message: str, problems: list[str]) -> None:
        super().__init__(message)
        self.problems = problems
