"""Exception types shared across the toolkit."""


class QdkitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(QdkitError):
    """Invalid configuration value (bounds, dimensions, step sizes, ...)."""


class EvaluationError(QdkitError):
    """A solution produced non-finite objective or measure values."""


class EmptyArchiveError(QdkitError):
    """An operation that needs elites was called on an empty archive."""


class UsageError(QdkitError):
    """An API was called out of protocol (e.g. tell without a matching ask)."""


class DegenerateStateError(QdkitError):
    """A CMA-ES state can no longer produce valid samples."""


# File exports raise the interpreter's native I/O errors.
IoError = OSError
