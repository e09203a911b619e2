"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class EventcastError(Exception):
    exit_code = 4


class ConfigError(EventcastError):
    exit_code = 2


class DataError(EventcastError):
    exit_code = 3


class SchemaError(DataError):
    pass


class ModelFormatError(DataError):
    """Model bundle is truncated, corrupted, or from an unsupported format version."""


class InvariantError(EventcastError):
    exit_code = 4
