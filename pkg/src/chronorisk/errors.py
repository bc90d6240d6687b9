"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An operation received data that violates its contract."""


class ConfigurationError(ValueError):
    """A config object or file is unusable (bad rates, degenerate cohort, ...)."""


class CapacityError(RuntimeError):
    """A hard resource cap would be exceeded (coalition count, queue depth)."""


class NotFoundError(LookupError):
    """A requested entity does not exist in the store."""


class ReferentialError(ValueError):
    """A write refers to an entity that does not exist."""


class StorageError(OSError):
    """A durable write or read could not be completed or verified."""


class CohortFormatError(ValueError):
    """A cohort file line could not be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number


class VersionError(ValueError):
    """A persisted artifact carries an unsupported format version."""


class StateError(RuntimeError):
    """An operation was attempted in a state that forbids it."""
