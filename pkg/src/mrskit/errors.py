"""Exception hierarchy shared across the toolkit."""


class MrsError(Exception):
    """Base class for all mrskit errors."""


class ValidationError(MrsError, ValueError):
    """Invalid argument, shape, or configuration."""


class ParseError(MrsError):
    """Malformed input document."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SerializationError(MrsError):
    """Data cannot be written in the requested format."""


class SelectionError(MrsError):
    """Basis auto-selection found zero or multiple candidates."""

    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = list(candidates)


class DegenerateDataError(MrsError):
    """Input is degenerate for the requested computation (e.g. zero variance)."""


class DecompositionError(MrsError):
    """Matrix decomposition failed on the given input."""


class RankDeficiencyError(MrsError):
    """Linear design is rank deficient."""

    def __init__(self, message, collinear=()):
        super().__init__(message)
        self.collinear = list(collinear)


class StageError(MrsError):
    """Failure inside a staged-quantification stage, tagged with its stage."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class DegeneracyWarning(UserWarning):
    """Uncertainty estimate is unreliable (singular information matrix)."""


class FitConvergenceWarning(UserWarning):
    """Fit stopped at the iteration cap without meeting the tolerance."""


class StoreError(MrsError):
    """Persistent store failure."""


class NotFoundError(StoreError):
    """Requested entity does not exist."""


class AuthError(StoreError):
    """Authentication or authorization failure."""


class QuotaExceededError(StoreError):
    """Upload would exceed the per-user storage quota."""
