"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: bad dimensions, unknown ids, incompatible options."""


class UsageError(RuntimeError):
    """API called out of contract, e.g. stepping a finished episode."""


class DataError(ValueError):
    """Malformed runtime data, e.g. non-finite observations."""
