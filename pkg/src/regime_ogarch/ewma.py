"""Exponentially weighted moving-average covariance baseline.

The recursion puts the decay factor on the innovation term,
Sigma_t = (1 - lam) Sigma_{t-1} + lam (r - mu)(r - mu)', so lam = 0.06 is
the counterpart of the usual 0.94 weight on the lag term.  Forecasts are
flat across the horizon.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .pca import CovarianceForecast

DEFAULT_LAMBDA = 0.06


@dataclass(frozen=True)
class EwmaState:
    sigma: np.ndarray
    lam: float
    mu: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=float)
        m = np.asarray(self.mu, dtype=float)
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "mu", m)
        n = m.size
        if s.shape != (n, n):
            raise ContractError("sigma must be square and match mu")
        if np.max(np.abs(s - s.T)) > 1e-12:
            raise ContractError("sigma must be symmetric")
        if not (0.0 < self.lam < 1.0):
            raise ContractError("lambda must lie in (0, 1)")


def ewma_update(state: EwmaState, r: np.ndarray) -> EwmaState:
    """One recursion step with the return vector r."""
    r = np.asarray(r, dtype=float)
    if r.shape != state.mu.shape:
        raise ContractError("return vector dimension mismatch")
    d = r - state.mu
    sigma = (1.0 - state.lam) * state.sigma + state.lam * np.outer(d, d)
    return EwmaState(sigma, state.lam, state.mu)


def ewma_forecast(state: EwmaState, tau: int) -> CovarianceForecast:
    """Flat tau-day forecast.  The state must already include the final
    observation; its sigma IS the one-day-ahead forecast."""
    if tau < 1:
        raise ContractError("tau must be at least 1")
    mats = np.repeat(state.sigma[None, :, :], tau, axis=0)
    return CovarianceForecast(tau, mats)


def ewma_run(returns: np.ndarray, lam: float = DEFAULT_LAMBDA) -> EwmaState:
    """Run the recursion over a window of returns.

    The mean is the window mean and the starting matrix the window sample
    covariance, so the state is scale-correct from the first step.
    """
    r = np.asarray(returns, dtype=float)
    if r.ndim != 2 or r.shape[0] < 2:
        raise ContractError("need a T x I window with T >= 2")
    mu = r.mean(axis=0)
    sigma0 = np.cov(r, rowvar=False, ddof=1)
    if sigma0.ndim == 0:
        sigma0 = sigma0.reshape(1, 1)
    state = EwmaState(sigma0, lam, mu)
    for t in range(r.shape[0]):
        state = ewma_update(state, r[t])
    return state
