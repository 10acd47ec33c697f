"""Exception types shared across the package.

Every error raised on a contract violation derives from AdwynnError so
callers (CLI, HTTP service) can map failures to exit codes and status
codes without string matching.
"""

from __future__ import annotations


class AdwynnError(Exception):
    """Base class for all package errors."""


class DomainError(AdwynnError, ValueError):
    """A numeric argument lies outside its mathematical domain."""


class ResponseDomainError(DomainError):
    """An observed response is outside the family's support."""


class SpecError(AdwynnError, ValueError):
    """A model specification violates a structural precondition."""


class ConfigError(AdwynnError, ValueError):
    """A configuration document is malformed or inconsistent."""


class DesignError(AdwynnError, ValueError):
    """A design measure violates its invariants."""


class SingularInformationError(AdwynnError):
    """An information matrix is numerically singular.

    Carries the offending smallest eigenvalue so callers can report it.
    """

    def __init__(self, message: str, lambda_min: float):
        super().__init__(message)
        self.lambda_min = float(lambda_min)


class EstimationError(AdwynnError):
    """The likelihood solver could not complete under its contract."""


class SequencingError(AdwynnError):
    """An adaptive-loop call arrived out of order."""


class StaleSuggestionError(SequencingError):
    """An observation referenced a suggestion that is no longer current."""


class UnknownSessionError(AdwynnError, KeyError):
    """No session with the requested id exists."""


class SessionIntegrityError(AdwynnError):
    """A persisted session log fails replay verification."""


class InsufficientSampleError(AdwynnError):
    """Too few usable replicates for the requested diagnostic."""
