"""Exception hierarchy shared by the library, the service, and the CLI.

The three concrete error kinds map onto the CLI exit codes (config -> 1,
data -> 2, numeric -> 3) and onto the ``kind`` field of service error
responses.
"""

from __future__ import annotations


class TrifolioError(Exception):
    """Base class for all domain errors raised by this package."""

    kind = "error"
    exit_code = 1


class ConfigError(TrifolioError):
    """A run configuration is unparseable or violates its invariants."""

    kind = "config"
    exit_code = 1


class DataError(TrifolioError):
    """Input data is malformed, inconsistent, or insufficient."""

    kind = "data"
    exit_code = 2


class NumericError(TrifolioError):
    """A numeric precondition failed (zero variance, invalid covariance, ...)."""

    kind = "numeric"
    exit_code = 3


class StageError(TrifolioError):
    """Wraps an error with the pipeline stage it occurred in.

    ``kind`` and ``exit_code`` are inherited from the wrapped cause so the
    CLI can still map the failure to the right exit code.
    """

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        if isinstance(cause, TrifolioError):
            self.kind = cause.kind
            self.exit_code = cause.exit_code
        else:
            self.kind = NumericError.kind
            self.exit_code = NumericError.exit_code
        super().__init__(f"stage '{stage}': {cause}")
