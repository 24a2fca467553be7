"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An operation was called with inputs violating its stated preconditions."""


class ConfigError(ValueError):
    """A run configuration (CLI flags or config file) is invalid."""
