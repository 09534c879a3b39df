"""Exception hierarchy shared across the package."""


class CodedGradError(Exception):
    """Base class for all package errors."""


class DimensionError(CodedGradError, ValueError):
    """Invalid or mismatched dimensions (block count, workers, load, score vectors)."""


class InfeasibleError(CodedGradError, ValueError):
    """The requested construction cannot ever recover the full gradient."""


class UnsupportedConfiguration(CodedGradError, ValueError):
    """No construction is implemented for the requested parameters."""


class ParameterError(CodedGradError, ValueError):
    """A scalar parameter is out of its admissible range."""


class EnumerationBudgetExceeded(CodedGradError, RuntimeError):
    """Exhaustive enumeration would be too large; use the Monte Carlo engine instead."""


class ConfigError(CodedGradError, ValueError):
    """Bad configuration file or override."""
