"""Long-only global minimum-variance portfolios and performance statistics.

The GMVP solver enumerates support sets and solves each equality-constrained
problem in closed form, so it is exact for the small asset counts targeted
here (hard limit 15 assets; the enumeration is 2^I).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .pca import CovarianceForecast

_MAX_ASSETS = 15
_NEG_TOL = -1e-12


@dataclass(frozen=True)
class PortfolioWeights:
    weights: np.ndarray
    as_of: str = ""
    horizon: int = 1
    ridge_applied: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1:
            raise ContractError("weights must be a vector")
        if np.min(w) < _NEG_TOL:
            raise ContractError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-10:
            raise ContractError("weights must sum to 1")


@dataclass(frozen=True)
class PerformanceReport:
    mean_pa: float
    std_pa: float
    q05: float
    worst: float
    max_drawdown: float
    sharpe: float

    def __post_init__(self):
        if self.max_drawdown > 1e-15:
            raise ContractError("max_drawdown must be nonpositive")
        if self.worst > self.q05 + 1e-12:
            raise ContractError("worst return cannot exceed the 5% quantile")

    def to_dict(self) -> dict:
        return {"mean_pa": self.mean_pa, "std_pa": self.std_pa,
                "q05": self.q05, "worst": self.worst,
                "max_drawdown": self.max_drawdown,
                "sharpe": None if math.isnan(self.sharpe) else self.sharpe}

    def to_text_row(self, label: str) -> str:
        cells = [f"{self.mean_pa * 100:.4f}%", f"{self.std_pa * 100:.4f}%",
                 f"{self.q05 * 100:.4f}%", f"{self.worst * 100:.4f}%",
                 f"{self.max_drawdown * 100:.4f}%",
                 "n/a" if math.isnan(self.sharpe) else f"{self.sharpe:.4f}"]
        return f"{label:<12}" + "".join(f"{c:>14}" for c in cells)


PERFORMANCE_HEADER = (f"{'':<12}" + "".join(
    f"{c:>14}" for c in ("MeanRet.P.a.", "Std.Dev.P.a", "5%Quantile",
                         "WorstCase", "MaxDrawDown", "SharpeRatio")))


def gmvp(sigma: np.ndarray, as_of: str = "", horizon: int = 1) -> PortfolioWeights:
    """Minimize w' Sigma w over the simplex (full investment, no shorting).

    Every nonempty support set is solved in closed form; the feasible
    candidate with the smallest variance is the exact optimum.  Singular
    support submatrices get a 1e-10 ridge and the result is flagged.
    """
    s = np.asarray(sigma, dtype=float)
    n = s.shape[0]
    if s.ndim != 2 or s.shape != (n, n):
        raise ContractError("sigma must be square")
    if n < 1:
        raise ContractError("need at least one asset")
    if n > _MAX_ASSETS:
        raise ContractError(f"asset count {n} above the enumeration limit {_MAX_ASSETS}")
    if np.max(np.abs(s - s.T)) > 1e-8:
        raise ContractError("sigma must be symmetric")
    if np.min(np.linalg.eigvalsh(0.5 * (s + s.T))) < -1e-8:
        raise ContractError("sigma must be positive semidefinite")

    best_w = None
    best_var = math.inf
    best_ridged = False
    ones_cache = [np.ones(k) for k in range(n + 1)]
    for mask in range(1, 1 << n):
        idx = [i for i in range(n) if mask >> i & 1]
        k = len(idx)
        sub = s[np.ix_(idx, idx)]
        ridged = False
        try:
            raw = np.linalg.solve(sub, ones_cache[k])
        except np.linalg.LinAlgError:
            raw = np.linalg.solve(sub + 1e-10 * np.eye(k), ones_cache[k])
            ridged = True
        total = raw.sum()
        if total == 0.0 or not np.all(np.isfinite(raw)):
            continue
        w_sub = raw / total
        if np.min(w_sub) < _NEG_TOL:
            continue
        w = np.zeros(n)
        w[idx] = w_sub
        var = float(w @ s @ w)
        if var < best_var:
            best_var = var
            best_w = w
            best_ridged = ridged
    if best_w is None:
        raise ContractError("no feasible support set found")
    best_w = np.clip(best_w, 0.0, None)
    best_w /= best_w.sum()
    return PortfolioWeights(best_w, as_of, horizon, best_ridged)


def gmvp_kkt_residual(sigma: np.ndarray, weights: np.ndarray) -> float:
    """Worst violation of the simplex KKT conditions at `weights`:
    marginal variances equal on the support, no smaller off it."""
    s = np.asarray(sigma, dtype=float)
    w = np.asarray(weights, dtype=float)
    grad = s @ w
    active = w > 1e-12
    if not np.any(active):
        return math.inf
    lam = float(grad[active].mean())
    res = 0.0
    for i in range(w.size):
        if active[i]:
            res = max(res, abs(grad[i] - lam))
        else:
            res = max(res, max(lam - grad[i], 0.0))
    return res


def horizon_covariance(forecast: CovarianceForecast) -> np.ndarray:
    """Covariance of the horizon-summed return: elementwise sum of the
    daily forecast matrices."""
    if forecast.matrices.shape[0] < 1:
        raise ContractError("forecast is empty")
    return forecast.matrices.sum(axis=0)


def performance_stats(period_returns: np.ndarray,
                      periods_per_year: float) -> PerformanceReport:
    """Summary statistics of a realized return series.

    Drawdown is peak-to-trough of the simple cumulative sum, consistent
    with additive log-return accounting.  A zero-variance series gets a
    NaN Sharpe marker.
    """
    r = np.asarray(period_returns, dtype=float)
    if r.ndim != 1 or r.size < 2:
        raise ContractError("need at least 2 period returns")
    if periods_per_year <= 0.0:
        raise ContractError("periods_per_year must be positive")
    mean_pa = float(r.mean() * periods_per_year)
    std = float(r.std(ddof=1))
    std_pa = std * math.sqrt(periods_per_year)
    q05 = float(np.quantile(r, 0.05))
    worst = float(r.min())
    cum = np.cumsum(r)
    peak = np.maximum.accumulate(np.concatenate(([0.0], cum)))[1:]
    max_dd = float(np.min(cum - peak))
    sharpe = mean_pa / std_pa if std_pa > 0.0 else math.nan
    return PerformanceReport(mean_pa, std_pa, q05, worst, min(max_dd, 0.0), sharpe)
