"""Exception hierarchy shared by the numerical modules."""


class StbcAberError(Exception):
    """Base class for all library errors."""


class DomainError(StbcAberError, ValueError):
    """An argument lies outside the supported mathematical domain."""


class ConvergenceError(StbcAberError, ArithmeticError):
    """An iterative evaluation did not reach its tolerance."""


class IntegrationError(ConvergenceError):
    """Adaptive quadrature exhausted its subdivision budget.

    Attributes
    ----------
    value : float
        Best estimate of the integral at the point of failure.
    abserr : float
        Achieved absolute error estimate.
    """

    def __init__(self, msg, value=float("nan"), abserr=float("inf")):
        super().__init__(msg)
        self.value = value
        self.abserr = abserr


class DegenerateChannelError(DomainError):
    """The eta-mu compact form is singular (eta == 1 or lambda == 0)."""


class FitNotFoundError(StbcAberError, KeyError):
    """No tabulated exponential fit exists for the requested noise shape."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class FitError(ConvergenceError):
    """Least-squares refitting failed; ``best`` holds the best iterate found."""

    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


class SweepPointError(StbcAberError):
    """A sweep grid point failed; ``snr_db`` identifies it."""

    def __init__(self, snr_db, cause):
        super().__init__(f"evaluation failed at {snr_db:g} dB: {cause}")
        self.snr_db = snr_db
        self.cause = cause
