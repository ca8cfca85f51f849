"""Exception types shared across the pipeline.

All of these derive from ValueError so callers that only care about
"bad input" can catch one base class; the CLI maps each type to a
distinct exit code.
"""


class QrngError(ValueError):
    """Base class for all qrng-specific errors."""


class InvalidParameterError(QrngError):
    """An argument is outside its documented domain."""


class ConfigurationError(QrngError):
    """A configuration is internally inconsistent (cross-field check failed)."""


class InsufficientDataError(QrngError):
    """Not enough samples/bits for the requested estimate."""


class DegenerateInputError(QrngError):
    """Input is structurally unusable (e.g. constant sequence, support off-grid)."""


class CertificationFailure(QrngError):
    """The leftover-hash sizing check rejected the configured (n, m)."""


class IngestError(QrngError):
    """A trace file failed to parse; carries a line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
