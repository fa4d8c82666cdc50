"""Exception types shared across the package.

The CLI maps each class to an exit code, so library code should raise the
narrowest one that fits.
"""


class RwkError(Exception):
    """Base class for all errors raised by rwkplus."""


class DomainError(RwkError, ValueError):
    """Input is well formed but outside the operation's domain."""


class ValidationError(RwkError, ValueError):
    """A document or object failed schema/invariant validation.

    ``path`` names the offending field, e.g. ``graphs[3].adjacency[0][1]``.
    """

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ResourceError(RwkError, RuntimeError):
    """A configured size or cost guard would be exceeded."""


class TrainingError(RwkError, ArithmeticError):
    """Numeric failure during training (NaN/inf loss or gradient)."""

    def __init__(self, message: str, epoch: int | None = None):
        self.epoch = epoch
        super().__init__(f"epoch {epoch}: {message}" if epoch is not None else message)
