class PDHPError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(PDHPError, ValueError):
    pass


class DomainError(PDHPError, ValueError):
    pass


class OrderingError(DomainError):
    """Documents or events supplied out of timestamp order."""


class DataError(PDHPError, ValueError):
    """Malformed input files."""
