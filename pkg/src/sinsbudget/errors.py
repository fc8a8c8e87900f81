"""Exception types raised across the package."""


class SinsBudgetError(Exception):
    """Base class for all package errors."""


class DimensionError(SinsBudgetError, ValueError):
    """Array shapes do not agree with the declared dimensions."""


class NumericError(SinsBudgetError, ArithmeticError):
    """Non-finite values or a numerically invalid matrix (e.g. not PSD)."""


class PartitionError(SinsBudgetError, ValueError):
    """Source partition is inconsistent with the data it is applied to."""


class UnsupportedInputError(SinsBudgetError, ValueError):
    """Input is well-formed but outside what the method supports."""


class SingularityError(SinsBudgetError, ArithmeticError):
    """Model is singular at the requested point (e.g. polar latitude)."""


class ScenarioError(SinsBudgetError, ValueError):
    """Scenario file is malformed; message names the offending key or line."""


class TrajectoryError(SinsBudgetError, ValueError):
    """Trajectory file could not be parsed or is out of time order."""
