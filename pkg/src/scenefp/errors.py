"""Exception types shared across the package."""


class InputError(Exception):
    """Bad recording data or an out-of-range query (CLI exit code 1)."""


class SchemaError(InputError):
    """Input file does not match the selected column schema."""


class ConfigError(Exception):
    """Invalid configuration value or config file (CLI exit code 2)."""
