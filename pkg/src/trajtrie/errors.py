class TrajTrieError(Exception):
    """Base class for all errors raised by this package."""


class InputError(TrajTrieError, ValueError):
    """Malformed or unusable input data."""


class ConfigurationError(TrajTrieError, ValueError):
    """Invalid build or query parameters."""


class FormatError(TrajTrieError):
    """A serialized index or payload failed validation."""

    def __init__(self, message, section=None, offset=None):
        self.section = section
        self.offset = offset
        where = []
        if section is not None:
            where.append(f"section {section}")
        if offset is not None:
            where.append(f"offset {offset}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
