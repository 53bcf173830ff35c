"""Exception types shared across the package."""


class BlppError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BlppError):
    """Invalid grid, triple, config file or constant set."""


class PreconditionError(BlppError):
    """An operation was called outside its documented domain."""


class CapacityError(BlppError):
    """An exhaustive oracle was asked for an instance it cannot enumerate."""


class CoverageError(BlppError):
    """A requested coordinate or window is not covered by the environment grid."""


class NoRewardError(BlppError):
    """The initial condition is unrewarded everywhere on the search window."""


class EstimationError(BlppError):
    """Too few usable data points for a statistical fit."""


class NumericError(BlppError):
    """A numerical routine failed to converge."""


class InputError(BlppError):
    """Empty or malformed input to an estimator."""
