"""Exception hierarchy shared across the package.

Every error carries an ``exit_code`` so the command-line front end can map
failures onto its documented status codes without a lookup table.
"""


class DbregError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class InvalidInput(DbregError, ValueError):
    """Malformed, non-finite or dimensionally inconsistent input."""

    exit_code = 2


class InvalidCorrelation(InvalidInput):
    """A correlation or covariance matrix is not positive definite."""


class NumericalError(DbregError, ArithmeticError):
    """A numerical routine could not produce a trustworthy answer."""


class NotPSD(NumericalError):
    pass


class SingularDesign(NumericalError):
    pass


class SingularCovariance(NumericalError):
    pass


class DegenerateResidual(NumericalError):
    pass


class DegenerateSpectrum(NumericalError):
    pass


class InvalidCumulants(NumericalError):
    pass


class GammaFitFailed(NumericalError):
    """The generalized-gamma moment system did not converge."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
