"""Exception hierarchy shared across the package.

Every error raised on purpose derives from :class:`EvtganError`, so callers
(and the command line front end, which maps these onto exit codes) can
distinguish bad inputs from numerical failures.
"""


class EvtganError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(EvtganError, ValueError):
    """A distribution or model parameter violates its constraints."""


class DataError(EvtganError, ValueError):
    """Input data is unusable: wrong shape, empty, degenerate, out of domain."""


class DegenerateDataError(DataError):
    """Sample has (near-)zero variance and cannot support a fit."""


class UndefinedEstimateError(DataError):
    """An empirical estimator has no exceedances to condition on."""


class ConvergenceError(EvtganError, RuntimeError):
    """An iterative procedure failed to converge or diverged."""


class StateError(EvtganError, RuntimeError):
    """An object was used before it reached the required state."""
