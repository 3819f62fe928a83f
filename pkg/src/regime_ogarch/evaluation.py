"""Volatility-forecast loss functions and the Diebold-Mariano test."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DegenerateSeriesError

_R2LOG_FLOOR = 1e-12
LOSS_NAMES = ("mse1", "mse2", "mad1", "mad2", "r2log")


@dataclass(frozen=True)
class LossReport:
    mse1: float
    mse2: float
    mad1: float
    mad2: float
    r2log: float

    def __post_init__(self):
        for name in LOSS_NAMES:
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0:
                raise ContractError(f"{name} must be finite and nonnegative")

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in LOSS_NAMES}

    def to_text(self, label: str = "loss") -> str:
        lines = [f"{'':<8}{label:>14}"]
        for name in LOSS_NAMES:
            lines.append(f"{name.upper():<8}{getattr(self, name):>14.6e}")
        return "\n".join(lines)


@dataclass(frozen=True)
class DmTestResult:
    statistic: float
    p_value: float
    mean_d: float
    horizon: int
    variance_fallback: bool = False

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "p_value": self.p_value,
                "mean_d": self.mean_d, "horizon": self.horizon,
                "variance_fallback": self.variance_fallback}


def loss_functions(x: np.ndarray, h: np.ndarray) -> LossReport:
    """Five losses of a variance forecast h against a realized-vol proxy x.

    x is a volatility-scale proxy (absolute portfolio return), h a variance
    forecast.  The logarithmic loss floors x^2 at 1e-12 so zero realized
    returns stay finite.
    """
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    if x.shape != h.shape or x.ndim != 1 or x.size == 0:
        raise ContractError("x and h must be equal-length vectors")
    if np.any(h <= 0.0):
        raise ContractError("variance forecasts must be positive")
    if np.any(x < 0.0):
        raise ContractError("the realized proxy must be nonnegative")
    root_h = np.sqrt(h)
    x2 = x * x
    mse1 = float(np.mean((x - root_h) ** 2))
    mse2 = float(np.mean((x2 - h) ** 2))
    mad1 = float(np.mean(np.abs(x - root_h)))
    mad2 = float(np.mean(np.abs(x2 - h)))
    r2log = float(np.mean(np.log(np.maximum(x2, _R2LOG_FLOOR) / h) ** 2))
    return LossReport(mse1, mse2, mad1, mad2, r2log)


def loss_series(x: np.ndarray, h: np.ndarray) -> dict:
    """Per-period loss series for each of the five losses (DM test input)."""
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    root_h = np.sqrt(h)
    x2 = x * x
    return {
        "mse1": (x - root_h) ** 2,
        "mse2": (x2 - h) ** 2,
        "mad1": np.abs(x - root_h),
        "mad2": np.abs(x2 - h),
        "r2log": np.log(np.maximum(x2, _R2LOG_FLOOR) / h) ** 2,
    }


def dm_test(loss_a: np.ndarray, loss_b: np.ndarray, tau: int) -> DmTestResult:
    """Diebold-Mariano test of equal predictive accuracy.

    The long-run variance of the loss differential uses autocovariances up
    to lag tau - 1; if that bracket turns negative (possible beyond one
    step) the lag-0 term alone is used and the result is flagged.  Two-sided
    normal p-value.
    """
    a = np.asarray(loss_a, dtype=float)
    b = np.asarray(loss_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError("loss series must be equal-length vectors")
    n = a.size
    if n < 10:
        raise ContractError("need at least 10 observations")
    if tau < 1:
        raise ContractError("tau must be at least 1")
    d = a - b
    if np.all(d == d[0]):
        raise DegenerateSeriesError("loss differential is constant")
    mean_d = float(d.mean())
    centered = d - mean_d
    gamma0 = float(centered @ centered) / n
    bracket = gamma0
    for k in range(1, tau):
        gk = float(centered[k:] @ centered[:-k]) / n
        bracket += 2.0 * gk
    fallback = False
    if bracket <= 0.0:
        bracket = gamma0
        fallback = True
    if bracket <= 0.0:
        raise DegenerateSeriesError("long-run variance estimate is zero")
    stat = mean_d / math.sqrt(bracket / n)
    p = math.erfc(abs(stat) / math.sqrt(2.0))
    return DmTestResult(float(stat), float(p), mean_d, tau, fallback)


def autocovariance(d: np.ndarray, k: int) -> float:
    """Biased (1/n) autocovariance at lag k."""
    d = np.asarray(d, dtype=float)
    n = d.size
    k = abs(k)
    if k >= n:
        raise ContractError("lag must be below the series length")
    c = d - d.mean()
    if k == 0:
        return float(c @ c) / n
    return float(c[k:] @ c[:-k]) / n


def realized_proxy(returns: np.ndarray, weights: np.ndarray,
                   period: int = 1) -> np.ndarray:
    """Absolute portfolio return per holding period.

    Daily log returns are summed inside each period before weighting, so a
    5-day period uses the 5-day cumulative asset returns.
    """
    r = np.asarray(returns, dtype=float)
    w = np.asarray(weights, dtype=float)
    if r.ndim != 2 or r.shape[1] != w.size:
        raise ContractError("returns must be T x I matching the weights")
    if abs(w.sum() - 1.0) > 1e-10:
        raise ContractError("weights must sum to 1")
    if period < 1:
        raise ContractError("period must be at least 1")
    n = r.shape[0] // period
    if n == 0:
        raise ContractError("series shorter than one period")
    chunks = r[:n * period].reshape(n, period, r.shape[1]).sum(axis=1)
    return np.abs(chunks @ w)
