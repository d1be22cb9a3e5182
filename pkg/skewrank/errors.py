"""Exception and warning types raised by skewrank."""

from typing import Optional


class SkewRankError(Exception):
    """Base class for skewrank errors."""


class RatingsParseError(SkewRankError, ValueError):
    """A ratings file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DomainError(SkewRankError, ValueError):
    """An input lies outside the domain of an operation."""


class ConfigurationError(SkewRankError, ValueError):
    """Invalid solver, experiment or application configuration."""


class EmptySampleSetError(SkewRankError):
    """Filtering left no constraints for the solver."""

    def __init__(self, min_support: int) -> None:
        self.min_support = min_support
        super().__init__(
            f"No pairwise entries have support >= {min_support}; "
            "lower --min-support"
        )


class SkewSymmetryError(SkewRankError, AssertionError):
    """A solver iterate lost skew-symmetry (debug check)."""


class EmptySampleSetWarning(UserWarning):
    """filter_support produced an empty sample set."""
