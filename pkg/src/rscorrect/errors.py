"""Exception types shared by all toolkit modules."""


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(ToolkitError):
    """Operands have incompatible or unsupported shapes."""


class RangeError(ToolkitError):
    """An index, time, or parameter is outside its documented range."""


class CoverageError(ToolkitError):
    """A requested scan time is not covered by the available frames."""


class ConfigError(ToolkitError):
    """Two scan configurations that must agree do not."""


class ParameterError(ToolkitError):
    """A numeric parameter violates its constraints."""


class UsageError(ToolkitError):
    """Command-line arguments are malformed or inconsistent."""
