"""Exception types raised across the toolkit."""

import numpy as np


class InvalidSizeError(ValueError):
    """A length, count or width argument is out of its allowed range."""


class AliasingError(ValueError):
    """Sample rate too low for the requested complex baseband bandwidth."""


class DomainError(ValueError):
    """A scalar argument lies outside the function's domain."""


class UndefinedRatioError(ValueError):
    """A dB ratio would divide by zero (e.g. zero mainlobe response)."""


class SingularSystemError(np.linalg.LinAlgError):
    """Linear system is singular or too badly conditioned to trust.

    Attributes
    ----------
    condition : float
        Estimated 2-norm condition number of the system matrix (``inf`` when
        the factorization itself failed).
    """

    def __init__(self, message, condition=np.inf):
        super().__init__(f"{message} (condition ~ {condition:.3e})")
        self.condition = condition


class DivergenceError(FloatingPointError):
    """An iterative update produced non-finite values.

    Attributes
    ----------
    iteration : int
        Iteration index at which the non-finite value appeared.
    partial : object or None
        Whatever partial result the caller had accumulated (e.g. an ISL trace).
    """

    def __init__(self, message, iteration, partial=None):
        super().__init__(f"{message} at iteration {iteration}")
        self.iteration = iteration
        self.partial = partial
