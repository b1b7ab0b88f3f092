"""Exception hierarchy shared by every module."""


class WcrtError(Exception):
    """Base class for all package errors."""


class DomainError(WcrtError, ValueError):
    """An argument lies outside the domain of a formula."""


class DegenerateInputError(WcrtError, ValueError):
    """Data has no variance (or otherwise carries no information) where some is required."""


class DataError(WcrtError):
    """Malformed or out-of-range input data."""

    def __init__(self, message, row=None, column=None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column!r}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


class ConfigError(WcrtError, ValueError):
    """Invalid scale or run configuration."""
