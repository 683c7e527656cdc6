"""Exception and warning classes shared across the package."""


class QuadHedgeError(Exception):
    """Base class for package errors."""


class StripError(QuadHedgeError, ValueError):
    """A transform argument lies outside the strip of analyticity."""

    def __init__(self, what, interval, offending=None):
        lo, hi = interval
        msg = f"{what}: Re(w) must lie in ({lo:g}, {hi:g})"
        if offending is not None:
            msg += f", got Re(w)={offending:g}"
        super().__init__(msg)
        self.interval = interval


class MomentDivergenceError(QuadHedgeError, ValueError):
    """A Levy-measure moment needed downstream is infinite."""


class MeasurePositivityError(QuadHedgeError, ValueError):
    """The transformed jump measure would not be a positive measure."""


class GridError(QuadHedgeError, ValueError):
    """Fourier grid is invalid for the model or does not cover a request."""


class InsufficientDataError(QuadHedgeError, ValueError):
    """Not enough observations to evaluate a strategy."""


class DensityError(QuadHedgeError, ArithmeticError):
    """A simulated density factor became non-positive."""


class ConfigError(QuadHedgeError, ValueError):
    """Malformed run configuration or input file."""


class ConvergenceWarning(RuntimeWarning):
    """Doubling the Fourier truncation moved a value by more than the tolerance."""


class DegenerateExponentialWarning(RuntimeWarning):
    """The discretised stochastic exponential changed sign on an observed move."""
