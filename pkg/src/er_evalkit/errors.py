"""Exception types shared across the toolkit."""


class EvalKitError(Exception):
    """Base class for all toolkit errors."""


class IngestError(EvalKitError):
    """An input file could not be read or failed validation."""


class ConfigError(EvalKitError):
    """A configuration value violates its constraints."""
