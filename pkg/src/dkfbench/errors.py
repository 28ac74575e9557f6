"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 1, data problems with 2, numeric failures with 3.
"""


class ConfigError(ValueError):
    """Bad configuration: unknown key, malformed value, missing baseline."""


class DataError(ValueError):
    """Bad input data."""


class ParseError(DataError):
    """A data file could not be parsed; message includes the line number."""


class ValidationError(DataError):
    """Parsed data violates a format invariant (ordering, grid uniformity)."""


class AlignmentError(DataError):
    """Paired series do not cover commensurate time spans."""


class InsufficientDataError(DataError):
    """Trial is too short for benchmark use."""

    def __init__(self, needed: int, actual: int):
        super().__init__(f"trial has {actual} samples, need at least {needed}")
        self.needed = needed
        self.actual = actual


class DegenerateInputError(DataError):
    """Input data is degenerate (e.g. all points identical)."""


class UndefinedMetricError(ValueError):
    """A metric is undefined for the given inputs (e.g. all-zero truth)."""


class NumericError(RuntimeError):
    """Numeric failure inside a fit or filter."""


class NotPositiveDefiniteError(NumericError):
    """A matrix required to be positive definite is not."""


class RankError(NumericError):
    """A least-squares system is rank deficient."""


class UnstableSystemError(NumericError):
    """Transition matrix has spectral radius >= 1."""


class FitDivergedError(NumericError):
    """Training loss became non-finite."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged at epoch {epoch}")
        self.epoch = epoch


class FilterNumericError(NumericError):
    """A filter recursion produced a non-finite or non-PD intermediate."""

    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step
