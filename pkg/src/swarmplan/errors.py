"""Shared exception types."""


class ConfigError(ValueError):
    """Invalid configuration values."""


class ShapeError(ValueError):
    """Array dimensions do not agree."""


class SchemaError(ValueError):
    """A file does not conform to its versioned schema."""


class ValidationError(ValueError):
    """A scenario or candidate violates its invariants."""


class GenerationError(RuntimeError):
    """Random generation could not satisfy placement constraints."""


class SetupError(RuntimeError):
    """Solver setup failed (e.g. singular KKT system)."""


class UsageError(ValueError):
    """An operation was called with inconsistent inputs."""
