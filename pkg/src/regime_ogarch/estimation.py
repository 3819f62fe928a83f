"""Shared estimation machinery: derivative-free optimizer, numerical
standard errors and likelihood-ratio testing.

The optimizer is a plain Nelder-Mead with the textbook coefficients
(reflection 1, expansion 2, contraction 0.5, shrink 0.5).  It is fully
deterministic: identical inputs give bitwise-identical output, which the
backtest reproducibility guarantees rely on.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError


@dataclass(frozen=True)
class OptimizerConfig:
    max_evals: int = 4000
    tol_f: float = 1e-12
    tol_x: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.max_evals < 100:
            raise ContractError("max_evals must be at least 100")
        if not (self.tol_f > 0.0 and self.tol_x > 0.0):
            raise ContractError("tolerances must be positive")


@dataclass(frozen=True)
class NelderMeadResult:
    x: np.ndarray
    fun: float
    n_evals: int
    converged: bool


@dataclass(frozen=True)
class LrTestResult:
    statistic: float
    df: int
    p_value: float
    nesting_violation: bool = False


def nelder_mead(objective, start, config: OptimizerConfig | None = None) -> NelderMeadResult:
    """Minimize `objective` from `start`.

    The initial simplex perturbs each coordinate by 0.05 * (1 + |start_i|).
    Stops when the max-norm simplex diameter falls below tol_x or the
    function spread below tol_f, or after max_evals evaluations.  Non-finite
    objective values are treated as +inf (worst), but the start itself must
    be finite.
    """
    if config is None:
        config = OptimizerConfig()
    x0 = np.asarray(start, dtype=float)
    n = x0.size
    if n == 0:
        raise ContractError("start must be a non-empty vector")

    def safe_eval(x):
        v = objective(x)
        if not math.isfinite(v):
            return math.inf
        return float(v)

    f0 = safe_eval(x0)
    if not math.isfinite(f0):
        raise ContractError("objective is not finite at the start point")

    verts = np.tile(x0, (n + 1, 1))
    for i in range(n):
        verts[i + 1, i] += 0.05 * (1.0 + abs(x0[i]))
    fvals = np.empty(n + 1)
    fvals[0] = f0
    for i in range(1, n + 1):
        fvals[i] = safe_eval(verts[i])
    n_evals = n + 1
    converged = False

    while n_evals < config.max_evals:
        order = np.argsort(fvals, kind="stable")
        verts = verts[order]
        fvals = fvals[order]

        diameter = np.max(np.abs(verts[1:] - verts[0]))
        spread = fvals[-1] - fvals[0]
        if diameter < config.tol_x or (math.isfinite(spread) and spread < config.tol_f):
            converged = True
            break

        centroid = verts[:-1].mean(axis=0)
        worst = verts[-1]
        xr = centroid + (centroid - worst)
        fr = safe_eval(xr)
        n_evals += 1

        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = safe_eval(xe)
            n_evals += 1
            if fe < fr:
                verts[-1], fvals[-1] = xe, fe
            else:
                verts[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-2]:
            verts[-1], fvals[-1] = xr, fr
            continue

        if fr < fvals[-1]:
            xc = centroid + 0.5 * (xr - centroid)
        else:
            xc = centroid - 0.5 * (centroid - worst)
        fc = safe_eval(xc)
        n_evals += 1
        if fc < min(fr, fvals[-1]):
            verts[-1], fvals[-1] = xc, fc
            continue

        # shrink toward the best vertex
        for i in range(1, n + 1):
            verts[i] = verts[0] + 0.5 * (verts[i] - verts[0])
            fvals[i] = safe_eval(verts[i])
        n_evals += n

    best = int(np.argmin(fvals))
    return NelderMeadResult(verts[best].copy(), float(fvals[best]), n_evals, converged)


def numerical_std_errors(negloglike, theta_hat) -> np.ndarray:
    """Standard errors from the central-difference Hessian of `negloglike`.

    Step per coordinate is 1e-4 * (1 + |theta_i|).  Parameters whose Hessian
    rows are non-finite (typically constraint boundaries) get NaN markers,
    as do parameters with non-positive inverse-Hessian diagonal; the rest
    are still reported.
    """
    theta = np.asarray(theta_hat, dtype=float)
    n = theta.size
    steps = 1e-4 * (1.0 + np.abs(theta))

    def ev(x):
        try:
            v = float(negloglike(x))
        except (ValueError, ArithmeticError, FloatingPointError):
            return math.nan
        return v if math.isfinite(v) else math.nan

    f0 = ev(theta)
    hess = np.full((n, n), math.nan)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = steps[i]
        fp = ev(theta + ei)
        fm = ev(theta - ei)
        hess[i, i] = (fp - 2.0 * f0 + fm) / (steps[i] * steps[i])
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = steps[j]
            fpp = ev(theta + ei + ej)
            fpm = ev(theta + ei - ej)
            fmp = ev(theta - ei + ej)
            fmm = ev(theta - ei - ej)
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * steps[i] * steps[j])

    # keep the largest principal submatrix with all-finite entries: greedily
    # drop the parameter with the most non-finite cross terms (a boundary
    # parameter poisons its whole row, but not its neighbours' diagonals)
    keep = list(range(n))
    while keep:
        sub = hess[np.ix_(keep, keep)]
        bad_counts = (~np.isfinite(sub)).sum(axis=1)
        if bad_counts.max() == 0:
            break
        keep.pop(int(np.argmax(bad_counts)))

    out = np.full(n, math.nan)
    if keep:
        sub = hess[np.ix_(keep, keep)]
        try:
            inv = np.linalg.inv(sub)
            diag = np.diag(inv)
            for pos, i in enumerate(keep):
                if diag[pos] > 0.0:
                    out[i] = math.sqrt(diag[pos])
        except np.linalg.LinAlgError:
            pass
    return out


def lr_test(loglike_restricted: float, loglike_full: float, df: int) -> LrTestResult:
    """Likelihood-ratio test of nested models."""
    if df < 1:
        raise ContractError("df must be at least 1")
    delta = loglike_full - loglike_restricted
    violation = delta < -1e-6
    statistic = max(2.0 * delta, 0.0)
    return LrTestResult(statistic, df, chi2_sf(statistic, df), violation)


def chi2_sf(x: float, df: int) -> float:
    """Upper tail P(X > x) of the chi-square distribution with df degrees
    of freedom, via the regularized upper incomplete gamma function."""
    if df < 1:
        raise ContractError("df must be at least 1")
    if x <= 0.0:
        return 1.0
    return _gammainc_upper(0.5 * df, 0.5 * x)


def _gammainc_upper(s: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(s, x), series / continued
    fraction split at x = s + 1 (the classic numerics-textbook scheme)."""
    if x < s + 1.0:
        return 1.0 - _gammainc_lower_series(s, x)
    return _gammainc_upper_cf(s, x)


def _gammainc_lower_series(s: float, x: float) -> float:
    lg = math.lgamma(s)
    term = 1.0 / s
    total = term
    a = s
    for _ in range(500):
        a += 1.0
        term *= x / a
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + s * math.log(x) - lg)


def _gammainc_upper_cf(s: float, x: float) -> float:
    # modified Lentz continued fraction
    lg = math.lgamma(s)
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    f = d
    for i in range(1, 500):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x + s * math.log(x) - lg) * f
