"""Univariate generalized extreme value (GEV) distribution.

Evaluation, inversion, negative log-likelihood, maximum-likelihood fitting
and return-level extrapolation for the three-parameter GEV law

    G(z) = exp[ -{1 + xi (z - mu) / sigma}_+ ^ (-1/xi) ],

with the Gumbel limit exp(-exp(-(z - mu)/sigma)) at xi = 0.  The shape xi
controls the tail: xi > 0 heavy-tailed (finite lower endpoint), xi < 0
bounded above, xi = 0 light-tailed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import DataError, DegenerateDataError, ParameterError

__all__ = [
    "GevParams",
    "FitReport",
    "gev_cdf",
    "gev_quantile",
    "gev_neg_log_likelihood",
    "fit_gev_mle",
    "return_level",
]

# |xi| below this routes through the Gumbel formulas; (1 + xi*t)**(-1/xi)
# loses all precision well before xi reaches the underflow region.
GUMBEL_TOL = 1e-7

# Finite stand-in for +inf when data falls outside the support, plus a
# boundary-distance term so a simplex can find its way back.
PENALTY_BASE = 1e10
PENALTY_SLOPE = 1e6

EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class GevParams:
    """Location / scale / shape triple of one margin's GEV law."""

    mu: float
    sigma: float
    xi: float

    def __post_init__(self):
        if not np.isfinite(self.mu) or not np.isfinite(self.sigma) or not np.isfinite(self.xi):
            raise ParameterError(f"GEV parameters must be finite, got {self}")
        if self.sigma <= 0:
            raise ParameterError(f"GEV scale must be positive, got sigma={self.sigma}")

    def support(self) -> tuple[float, float]:
        """Return (lower, upper) endpoints; infinite where the tail is unbounded."""
        if self.xi > GUMBEL_TOL:
            return (self.mu - self.sigma / self.xi, math.inf)
        if self.xi < -GUMBEL_TOL:
            return (-math.inf, self.mu - self.sigma / self.xi)
        return (-math.inf, math.inf)


@dataclass(frozen=True)
class FitReport:
    """Outcome of one maximum-likelihood fit."""

    params: GevParams
    nll: float
    iterations: int
    converged: bool

    def __post_init__(self):
        if self.converged and not np.isfinite(self.nll):
            raise ParameterError("a converged fit must report a finite nll")


def _as_params(p) -> GevParams:
    return p if isinstance(p, GevParams) else GevParams(*p)


def gev_cdf(z, p) -> np.ndarray | float:
    """GEV cumulative distribution function.

    Parameters
    ----------
    z : float or array_like
        Evaluation points, physical units.
    p : GevParams or (mu, sigma, xi) triple

    Returns
    -------
    Probability in [0, 1], same shape as `z`.  Returns 0 below a finite
    lower endpoint and 1 above a finite upper endpoint.
    """
    p = _as_params(p)
    z = np.asarray(z, dtype=float)
    y = (z - p.mu) / p.sigma
    if abs(p.xi) < GUMBEL_TOL:
        out = np.exp(-np.exp(-y))
    else:
        t = 1.0 + p.xi * y
        inside = t > 0
        out = np.empty_like(y)
        # outside the support: 0 below a lower endpoint (xi > 0),
        # 1 above an upper endpoint (xi < 0)
        out[~inside] = 0.0 if p.xi > 0 else 1.0
        out[inside] = np.exp(-t[inside] ** (-1.0 / p.xi))
    return float(out) if out.ndim == 0 else out


def gev_quantile(q, p) -> np.ndarray | float:
    """Inverse of :func:`gev_cdf`.

    `q` must lie strictly inside (0, 1) elementwise.
    """
    p = _as_params(p)
    q = np.asarray(q, dtype=float)
    if np.any(q <= 0.0) or np.any(q >= 1.0):
        raise DataError("quantile level must lie strictly in (0, 1)")
    w = -np.log(q)
    if abs(p.xi) < GUMBEL_TOL:
        out = p.mu - p.sigma * np.log(w)
    else:
        out = p.mu + p.sigma * (w ** (-p.xi) - 1.0) / p.xi
    return float(out) if out.ndim == 0 else out


def return_level(T, p) -> np.ndarray | float:
    """Size of the T-"year" event: the (1 - 1/T)-quantile of the fitted law.

    The block length behind the fit sets the unit of T.
    """
    p = _as_params(p)
    T = np.asarray(T, dtype=float)
    if np.any(T <= 1.0):
        raise DataError("return period must exceed 1 block")
    return gev_quantile(1.0 - 1.0 / T, p)


def gev_neg_log_likelihood(data, p) -> float:
    """Negative log-likelihood of `data` under GEV(`p`).

    Out-of-support samples do not yield +inf but a large finite penalty
    (PENALTY_BASE plus a term growing with the boundary violation), so
    derivative-free optimizers can recover from infeasible iterates.
    """
    p = _as_params(p)
    data = np.asarray(data, dtype=float).ravel()
    if data.size == 0:
        raise DataError("cannot evaluate a likelihood on empty data")
    n = data.size
    y = (data - p.mu) / p.sigma
    if abs(p.xi) < GUMBEL_TOL:
        return float(n * math.log(p.sigma) + np.sum(y) + np.sum(np.exp(-y)))
    t = 1.0 + p.xi * y
    if np.any(t <= 0.0):
        violation = float(np.sum(np.maximum(0.0, -t)))
        return PENALTY_BASE + PENALTY_SLOPE * violation
    log_t = np.log(t)
    return float(
        n * math.log(p.sigma)
        + (1.0 + 1.0 / p.xi) * np.sum(log_t)
        + np.sum(np.exp(-log_t / p.xi))
    )


def _unpack(theta: np.ndarray) -> GevParams:
    mu, log_sigma, eta = theta
    return GevParams(mu, math.exp(log_sigma), math.tanh(eta))


def fit_gev_mle(data: Sequence[float], min_distinct: int = 10) -> FitReport:
    """Fit a GEV by maximum likelihood.

    Nelder-Mead on (mu, log sigma, eta) with xi = tanh(eta), which keeps the
    scale positive and the shape inside (-1, 1) where the MLE is regular.
    Start values are the Gumbel moment estimates.  Deterministic: identical
    data gives an identical report.

    Parameters
    ----------
    data : sequence of float
        Block maxima of one margin.
    min_distinct : int
        Minimum number of distinct values required (default 10).

    Raises
    ------
    DegenerateDataError
        If the sample standard deviation is (numerically) zero.
    DataError
        If fewer than `min_distinct` distinct values are supplied.
    """
    data = np.asarray(data, dtype=float).ravel()
    if data.size == 0:
        raise DataError("cannot fit a GEV to empty data")
    if not np.all(np.isfinite(data)):
        raise DataError("cannot fit a GEV to non-finite data")
    mean = float(np.mean(data))
    sd = float(np.std(data, ddof=1)) if data.size > 1 else 0.0
    if sd <= 1e-10 * max(1.0, abs(mean)):
        raise DegenerateDataError(
            f"sample standard deviation {sd:.3e} is below tolerance; data is (near-)constant"
        )
    if np.unique(data).size < min_distinct:
        raise DataError(
            f"need at least {min_distinct} distinct values, got {np.unique(data).size}"
        )

    sigma0 = math.sqrt(6.0) / math.pi * sd
    mu0 = mean - EULER_GAMMA * sigma0
    theta0 = np.array([mu0, math.log(sigma0), math.atanh(0.1)])

    def objective(theta):
        return gev_neg_log_likelihood(data, _unpack(theta))

    res = minimize(
        objective,
        theta0,
        method="Nelder-Mead",
        options=dict(maxiter=500, xatol=1e-10, fatol=1e-10),
    )
    params = _unpack(res.x)
    nll = float(res.fun)
    converged = bool(res.success) and np.isfinite(nll) and nll < PENALTY_BASE
    return FitReport(params=params, nll=nll, iterations=int(res.nit), converged=converged)
