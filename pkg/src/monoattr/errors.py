"""Exception hierarchy shared across the package."""


class MonoAttrError(Exception):
    """Base class for all package errors."""


class BoundsError(MonoAttrError, ValueError):
    """A point falls outside its feature space."""

    def __init__(self, message, index=None, name=None, value=None):
        super().__init__(message)
        self.index = index
        self.name = name
        self.value = value


class ParameterError(MonoAttrError, ValueError):
    pass


class ConfigurationError(MonoAttrError, ValueError):
    pass


class CapacityError(MonoAttrError, ValueError):
    pass


class PreconditionError(MonoAttrError, ValueError):
    pass


class OracleUnavailableError(MonoAttrError, LookupError):
    pass


class SchemaError(MonoAttrError, ValueError):
    pass


class TrainingError(MonoAttrError, RuntimeError):
    pass


class IngestionError(MonoAttrError, ValueError):
    """Raised for unreadable or empty inputs and malformed rows.

    ``line`` holds the 1-based file line number when the failure is row-level.
    """

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class UndefinedMetricError(MonoAttrError, ValueError):
    pass
