"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: data problems exit 2, numerical
conditioning problems exit 3.
"""


class JhgpError(Exception):
    """Base class for all package-specific errors."""


class DataFormatError(JhgpError):
    """Malformed or inconsistent input data (CSV rows, grids, schemas)."""


class DomainError(JhgpError, ValueError):
    """Argument outside its mathematical domain (hyperparameters, probabilities)."""


class ConditioningError(JhgpError):
    """A matrix stayed numerically indefinite after maximum jitter escalation."""


class SchemaError(JhgpError):
    """Persisted file has an incompatible or corrupted schema."""
