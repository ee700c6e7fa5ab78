"""Exception types shared across the package."""

from __future__ import annotations


class PushSumRateError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(PushSumRateError, ValueError):
    """Invalid user input: graph content, parameters, or configuration.

    ``violations`` lists the individual named constraint failures when the
    error aggregates several of them.
    """

    def __init__(self, message: str, violations: tuple[str, ...] = ()):
        super().__init__(message)
        self.violations = violations


class InputFormatError(ValidationError):
    """Malformed text input; carries the 1-based offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SeparationError(PushSumRateError):
    """Root-to-pole separation too small for a well-conditioned derivative."""


class InternalInvariantError(PushSumRateError):
    """A should-be-impossible internal state; indicates a bug, not bad input."""
