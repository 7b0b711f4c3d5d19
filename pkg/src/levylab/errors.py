"""Exception types shared across the package."""


class LevyLabError(Exception):
    """Base class for all package errors."""


class ParameterError(LevyLabError, ValueError):
    """A numeric parameter is outside its admissible range."""


class DimensionMismatchError(LevyLabError, ValueError):
    """A point does not match the dimension of the domain or process."""


class GridAlignmentError(LevyLabError, ValueError):
    """Requested times are not on the simulation grid."""


class InsufficientDataError(LevyLabError, ValueError):
    """Not enough usable data points for a fit or estimate."""


class ConvergenceError(LevyLabError, RuntimeError):
    """An iterative solver failed to reach its tolerance."""


class HypothesisViolationError(LevyLabError, ValueError):
    """Inputs violate a hypothesis of the statement being checked."""


class ConfigError(LevyLabError, ValueError):
    """An experiment configuration is malformed or incomplete."""
