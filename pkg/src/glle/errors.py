"""Error types shared across the package."""


class SingularMatrixError(ValueError):
    """A matrix that must be invertible (or positive definite) is numerically singular."""


class NumericalError(RuntimeError):
    """An iterative computation produced a non-finite value."""


class CsvError(ValueError):
    """A CSV file could not be parsed; the message names the offending line."""
