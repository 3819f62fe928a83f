"""Single-regime GARCH(1,1) with Gaussian quasi-likelihood.

Estimation is two-step: the mean is the window average and stays fixed
while the variance parameters are maximized.  The optimizer works in an
unconstrained space (log omega, stick-breaking logits for alpha and beta)
so the stationarity constraint alpha + beta < 1 always holds and the
unconditional variance is well defined.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ContractError, FitFailureError, NonstationaryError
from .estimation import (OptimizerConfig, nelder_mead, numerical_std_errors)

_PERSISTENCE_CAP = 1.0 - 1e-6
PARAM_NAMES = ("omega", "alpha", "beta")


@dataclass(frozen=True)
class GarchParams:
    omega: float
    alpha: float
    beta: float
    mu: float = 0.0

    def __post_init__(self):
        if not self.omega > 0.0:
            raise ContractError("omega must be positive")
        if self.alpha < 0.0 or self.beta < 0.0:
            raise ContractError("alpha and beta must be nonnegative")
        if not self.alpha + self.beta < 1.0:
            raise NonstationaryError("alpha + beta must be below 1")

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.alpha - self.beta)

    def to_dict(self) -> dict:
        return {"omega": self.omega, "alpha": self.alpha, "beta": self.beta,
                "mu": self.mu}


@dataclass(frozen=True)
class GarchFit:
    params: GarchParams
    loglike: float
    h_path: np.ndarray
    std_errors: np.ndarray

    def to_dict(self) -> dict:
        errs = {name: (None if math.isnan(e) else e)
                for name, e in zip(PARAM_NAMES, self.std_errors)}
        return {**self.params.to_dict(), "loglike": self.loglike,
                "std_errors": errs}


def garch_filter(y: np.ndarray, params: GarchParams,
                 h1: float | None = None) -> tuple[np.ndarray, float]:
    """Conditional-variance path and log likelihood of a series.

    h1 defaults to the unbiased sample variance of y.  The likelihood
    conditions on the first observation and sums Gaussian log densities
    from the second one.
    """
    y = np.ascontiguousarray(y, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise ContractError("series must be 1-d with at least 2 points")
    if not np.all(np.isfinite(y)):
        raise ContractError("series contains non-finite values")
    if h1 is None:
        h1 = float(y.var(ddof=1))
    if not h1 > 0.0:
        raise ContractError("initial variance must be positive")
    h = np.empty(y.size)
    ll = _kernels.garch_recursion(y, params.mu, params.omega, params.alpha,
                                  params.beta, h1, h)
    if math.isnan(ll):
        raise ContractError("variance recursion left the positive domain")
    return h, float(ll)


def _logistic(v: float) -> float:
    if v >= 0.0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


def _unpack(theta: np.ndarray) -> tuple[float, float, float]:
    omega = math.exp(min(theta[0], 700.0))
    alpha = _PERSISTENCE_CAP * _logistic(theta[1])
    beta = (_PERSISTENCE_CAP - alpha) * _logistic(theta[2])
    return omega, alpha, beta


def _pack(omega: float, alpha: float, beta: float) -> np.ndarray:
    alpha = min(max(alpha, 1e-8), _PERSISTENCE_CAP - 1e-8)
    a_frac = alpha / _PERSISTENCE_CAP
    b_frac = min(max(beta / (_PERSISTENCE_CAP - alpha), 1e-8), 1.0 - 1e-8)
    return np.array([math.log(omega),
                     math.log(a_frac / (1.0 - a_frac)),
                     math.log(b_frac / (1.0 - b_frac))])


def garch_fit(y: np.ndarray, config: OptimizerConfig | None = None) -> GarchFit:
    """Fit by quasi-maximum likelihood from the standard starting point
    (alpha 0.05, beta 0.90, variance-targeted omega)."""
    y = np.ascontiguousarray(y, dtype=float)
    if y.ndim != 1 or y.size < 4:
        raise ContractError("series must be 1-d with at least 4 points")
    if not np.all(np.isfinite(y)):
        raise ContractError("series contains non-finite values")
    var = float(y.var(ddof=1))
    if not var > 0.0:
        raise ContractError("series is constant")
    if config is None:
        config = OptimizerConfig(max_evals=2000, tol_f=1e-9, tol_x=1e-7)
    mu = float(y.mean())
    h_buf = np.empty(y.size)

    def negloglike(theta):
        omega, alpha, beta = _unpack(theta)
        ll = _kernels.garch_recursion(y, mu, omega, alpha, beta, var, h_buf)
        return math.inf if math.isnan(ll) else -ll

    start = _pack(0.05 * var, 0.05, 0.90)
    res = nelder_mead(negloglike, start, config)
    res2 = nelder_mead(negloglike, res.x, config)
    if res2.fun <= res.fun:
        res = res2
    if not res.converged:
        omega, alpha, beta = _unpack(res.x)
        best = GarchParams(omega, alpha, beta, mu)
        raise FitFailureError("optimizer did not converge", best=best)

    omega, alpha, beta = _unpack(res.x)
    params = GarchParams(omega, alpha, beta, mu)
    h_path, loglike = garch_filter(y, params, h1=var)

    def natural_nll(p):
        if p[0] <= 0.0 or p[1] < 0.0 or p[2] < 0.0 or p[1] + p[2] >= 1.0:
            return math.nan
        ll = _kernels.garch_recursion(y, mu, p[0], p[1], p[2], var, h_buf)
        return math.nan if math.isnan(ll) else -ll

    errs = numerical_std_errors(natural_nll, np.array([omega, alpha, beta]))
    return GarchFit(params, loglike, h_path, errs)


def garch_forecast(params: GarchParams, last_eps_sq: float, last_h: float,
                   tau: int, paper_literal_horizon: bool = False) -> np.ndarray:
    """Variance forecasts for horizons 1..tau.

    The first step is omega + alpha*eps_T^2 + beta*h_T; later steps decay
    geometrically toward the unconditional variance, anchored at the
    one-step forecast.  paper_literal_horizon anchors the decay at h_T
    instead, applying one extra decay factor at every horizon.
    """
    if tau < 1:
        raise ContractError("tau must be at least 1")
    if not (last_h > 0.0 and last_eps_sq >= 0.0):
        raise ContractError("need last_h > 0 and last_eps_sq >= 0")
    persist = params.alpha + params.beta
    if persist >= 1.0:
        raise NonstationaryError("alpha + beta must be below 1 to forecast")
    hbar = params.unconditional_variance
    out = np.empty(tau)
    # iterate the mean-reversion recursion literally so the identity
    # h[s+1] - hbar == persist * (h[s] - hbar) holds to the last bit
    if paper_literal_horizon:
        h_cur = hbar + persist * (last_h - hbar)
    else:
        h_cur = params.omega + params.alpha * last_eps_sq + params.beta * last_h
    for s in range(tau):
        out[s] = h_cur
        h_cur = hbar + persist * (h_cur - hbar)
    return out


def garch_forecast_from_fit(fit: GarchFit, y: np.ndarray, tau: int,
                            paper_literal_horizon: bool = False) -> np.ndarray:
    """Convenience wrapper pulling the forecast anchors from a fitted path."""
    eps_last = float(y[-1]) - fit.params.mu
    return garch_forecast(fit.params, eps_last * eps_last,
                          float(fit.h_path[-1]), tau, paper_literal_horizon)
