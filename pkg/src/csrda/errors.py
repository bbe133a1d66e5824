"""Exception types shared across the package."""


class CsrdaError(Exception):
    """Base class for all package-specific errors."""


class DataError(CsrdaError):
    """Dataset layout, pairing, or value-range problems."""


class ShapeError(CsrdaError):
    """Array shape disagreement between paired inputs."""


class ConfigError(CsrdaError):
    """Invalid or inconsistent configuration."""


class NumericsError(CsrdaError):
    """Non-finite values where finite ones are required."""
