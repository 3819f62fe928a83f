"""Two-state Markov regime-switching GARCH with the Klaassen lagged-variance
aggregation: forward filter, maximum likelihood and multi-horizon forecasts.

Regime indexing: regime 1 (index 0) is the low-variance state, regime 2
(index 1) the high-variance state; p = P(switch 1 -> 2), q = P(switch
2 -> 1).  Fits are returned with that ordering enforced (label swaps leave
the likelihood unchanged, so the constraint just picks the representative).

The ARCH innovation entering each regime's variance is demeaned by the
same conditional regime-mean mixture used in the lagged-variance
aggregation, which collapses to the plain demeaned innovation when the
regime means coincide.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (ContractError, FilterDegeneracyError, FitFailureError)
from .estimation import OptimizerConfig, nelder_mead, numerical_std_errors
from .garch import GarchFit, garch_fit

_FLOOR = 1e-12
_PROB_EPS = 1e-6
PARAM_NAMES = ("omega_1", "omega_2", "alpha_1", "alpha_2", "beta_1",
               "beta_2", "mu_1", "mu_2", "p", "q")


@dataclass(frozen=True)
class MrsGarchParams:
    omega: tuple
    alpha: tuple
    beta: tuple
    mu: tuple
    p: float
    q: float

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(float(v) for v in self.omega))
        object.__setattr__(self, "alpha", tuple(float(v) for v in self.alpha))
        object.__setattr__(self, "beta", tuple(float(v) for v in self.beta))
        object.__setattr__(self, "mu", tuple(float(v) for v in self.mu))
        for name in ("omega", "alpha", "beta", "mu"):
            if len(getattr(self, name)) != 2:
                raise ContractError(f"{name} must be a pair")
        for i in range(2):
            if self.omega[i] < 0.0 or self.alpha[i] < 0.0 or self.beta[i] < 0.0:
                raise ContractError("omega, alpha, beta must be nonnegative")
            if self.omega[i] == 0.0 and self.alpha[i] == 0.0 and self.beta[i] == 0.0:
                raise ContractError(f"regime {i + 1} variance is identically zero")
        if not (0.0 < self.p < 1.0 and 0.0 < self.q < 1.0):
            raise ContractError("p and q must lie strictly inside (0, 1)")

    def unconditional_variance(self, regime: int) -> float:
        persist = self.alpha[regime] + self.beta[regime]
        if persist >= 1.0:
            return math.inf
        return self.omega[regime] / (1.0 - persist)

    @property
    def is_identified(self) -> bool:
        return self.unconditional_variance(0) <= self.unconditional_variance(1)

    def swapped(self) -> "MrsGarchParams":
        return MrsGarchParams(self.omega[::-1], self.alpha[::-1],
                              self.beta[::-1], self.mu[::-1], self.q, self.p)

    def to_dict(self) -> dict:
        return {"omega": list(self.omega), "alpha": list(self.alpha),
                "beta": list(self.beta), "mu": list(self.mu),
                "p": self.p, "q": self.q}


@dataclass(frozen=True)
class RegimeFilterState:
    """Filter snapshot at time t: updated and ex-ante regime probabilities
    plus the per-regime conditional variances of the time-t observation."""

    prob_filtered: tuple
    prob_exante: tuple
    h_regime: tuple
    t: int

    def __post_init__(self):
        for name in ("prob_filtered", "prob_exante"):
            pair = tuple(float(v) for v in getattr(self, name))
            object.__setattr__(self, name, pair)
            if abs(pair[0] + pair[1] - 1.0) > 1e-12:
                raise ContractError(f"{name} must sum to 1")
            if min(pair) < -1e-15 or max(pair) > 1.0 + 1e-15:
                raise ContractError(f"{name} entries must lie in [0, 1]")
        hr = tuple(float(v) for v in self.h_regime)
        object.__setattr__(self, "h_regime", hr)
        if not (hr[0] > 0.0 and hr[1] > 0.0):
            raise ContractError("per-regime variances must be positive")


@dataclass(frozen=True)
class MrsGarchFit:
    params: MrsGarchParams
    loglike: float
    filter_path: tuple
    std_errors: np.ndarray
    last_obs: float

    def to_dict(self) -> dict:
        errs = {}
        for name, e in zip(PARAM_NAMES, self.std_errors):
            errs[name] = None if math.isnan(e) else float(e)
        return {**self.params.to_dict(), "loglike": self.loglike,
                "std_errors": errs}


def stationary_distribution(p: float, q: float) -> tuple[float, float]:
    """Fixed point of the two-state transition matrix."""
    if not (0.0 < p < 1.0 and 0.0 < q < 1.0):
        raise ContractError("p and q must lie strictly inside (0, 1)")
    return q / (p + q), p / (p + q)


def _transition(params: MrsGarchParams) -> np.ndarray:
    return np.array([[1.0 - params.p, params.p],
                     [params.q, 1.0 - params.q]])


def _mixture_weights(state: RegimeFilterState, params: MrsGarchParams,
                     target: int) -> tuple[float, float, float]:
    """(weight regime 1, weight regime 2, ex-ante prob of target regime)
    for the Klaassen aggregation conditioned on next regime = target."""
    pi = _transition(params)
    pf = state.prob_filtered
    pe = pf[0] * pi[0, target] + pf[1] * pi[1, target]
    if pe <= 0.0:
        raise FilterDegeneracyError("ex-ante probability vanished")
    return pi[0, target] * pf[0] / pe, pi[1, target] * pf[1] / pe, pe


def aggregate_lagged_variance(state: RegimeFilterState,
                              params: MrsGarchParams, target_regime: int) -> float:
    """Expected lagged conditional variance given the target regime: the
    mixture second moment across the previous regimes minus the squared
    mixture mean."""
    if target_regime not in (0, 1):
        raise ContractError("target_regime must be 0 or 1")
    w0, w1, _ = _mixture_weights(state, params, target_regime)
    mu = params.mu
    h = state.h_regime
    mean = w0 * mu[0] + w1 * mu[1]
    second = w0 * (mu[0] * mu[0] + h[0]) + w1 * (mu[1] * mu[1] + h[1])
    return second - mean * mean


def filter_step(state: RegimeFilterState, y_prev: float, y_t: float,
                params: MrsGarchParams) -> tuple[RegimeFilterState, float]:
    """Advance the filter by one observation.

    Returns the new state and the log-likelihood increment
    log sum_i f(y_t | S_t = i) P(S_t = i | info).
    """
    h_new = []
    pe = []
    log_joint = []
    for i in (0, 1):
        w0, w1, pe_i = _mixture_weights(state, params, i)
        mean = w0 * params.mu[0] + w1 * params.mu[1]
        agg = (w0 * (params.mu[0] ** 2 + state.h_regime[0])
               + w1 * (params.mu[1] ** 2 + state.h_regime[1]) - mean * mean)
        eps = y_prev - mean
        h_i = params.omega[i] + params.alpha[i] * eps * eps + params.beta[i] * agg
        if not h_i > 0.0 or not math.isfinite(h_i):
            raise FilterDegeneracyError("regime variance left the positive domain")
        d = y_t - params.mu[i]
        log_f = -0.5 * (math.log(2.0 * math.pi) + math.log(h_i) + d * d / h_i)
        h_new.append(h_i)
        pe.append(pe_i)
        log_joint.append(log_f + math.log(pe_i))
    mx = max(log_joint)
    w = [math.exp(v - mx) for v in log_joint]
    total = w[0] + w[1]
    increment = mx + math.log(total)
    pf = (w[0] / total, w[1] / total)
    new_state = RegimeFilterState(pf, tuple(pe), tuple(h_new), state.t + 1)
    return new_state, increment


def initial_state(params: MrsGarchParams, h_init: float) -> RegimeFilterState:
    """Time-1 state: stationary regime probabilities, shared variance seed."""
    if not h_init > 0.0:
        raise ContractError("h_init must be positive")
    pi_inf = stationary_distribution(params.p, params.q)
    return RegimeFilterState(pi_inf, pi_inf, (h_init, h_init), 1)


def mrs_filter(y: np.ndarray, params: MrsGarchParams,
               h_init: float | None = None):
    """Run the forward filter over a series.

    Returns (loglike, prob_filtered, prob_exante, h_regime) with one row per
    observation; row 0 holds the stationary start.  The likelihood sums
    increments from the second observation.
    """
    y = np.ascontiguousarray(y, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise ContractError("series must be 1-d with at least 2 points")
    if not np.all(np.isfinite(y)):
        raise ContractError("series contains non-finite values")
    if h_init is None:
        h_init = float(y.var(ddof=1))
    if not h_init > 0.0:
        raise ContractError("h_init must be positive")
    n = y.size
    pf = np.empty((n, 2))
    pe = np.empty((n, 2))
    hr = np.empty((n, 2))
    ll = _kernels.mrs_recursion(y, np.asarray(params.omega),
                                np.asarray(params.alpha),
                                np.asarray(params.beta),
                                np.asarray(params.mu), params.p, params.q,
                                h_init, pf, pe, hr)
    if math.isnan(ll):
        raise FilterDegeneracyError("filter hit a degenerate probability or variance")
    return float(ll), pf, pe, hr


def filter_states(pf: np.ndarray, pe: np.ndarray, hr: np.ndarray) -> tuple:
    """Package raw filter paths as RegimeFilterState snapshots."""
    return tuple(
        RegimeFilterState(tuple(pf[t]), tuple(pe[t]), tuple(hr[t]), t + 1)
        for t in range(pf.shape[0]))


# ---------------------------------------------------------------------------
# estimation


def _unpack_theta(theta: np.ndarray, zero_means: bool) -> MrsGarchParams:
    def softplus(v):
        return math.log1p(math.exp(-abs(v))) + max(v, 0.0)

    def logistic(v):
        if v >= 0.0:
            return 1.0 / (1.0 + math.exp(-v))
        e = math.exp(v)
        return e / (1.0 + e)

    omega = (max(softplus(theta[0]), _FLOOR), max(softplus(theta[1]), _FLOOR))
    alpha = (max(softplus(theta[2]), _FLOOR), max(softplus(theta[3]), _FLOOR))
    beta = (max(softplus(theta[4]), _FLOOR), max(softplus(theta[5]), _FLOOR))
    if zero_means:
        mu = (0.0, 0.0)
        p = min(max(logistic(theta[6]), _PROB_EPS), 1.0 - _PROB_EPS)
        q = min(max(logistic(theta[7]), _PROB_EPS), 1.0 - _PROB_EPS)
    else:
        mu = (theta[6], theta[7])
        p = min(max(logistic(theta[8]), _PROB_EPS), 1.0 - _PROB_EPS)
        q = min(max(logistic(theta[9]), _PROB_EPS), 1.0 - _PROB_EPS)
    return MrsGarchParams(omega, alpha, beta, mu, p, q)


def _pack_theta(params: MrsGarchParams, zero_means: bool) -> np.ndarray:
    def softplus_inv(v):
        v = max(v, 1e-10)
        if v > 30.0:
            return v
        return math.log(math.expm1(v))

    def logit(v):
        v = min(max(v, _PROB_EPS), 1.0 - _PROB_EPS)
        return math.log(v / (1.0 - v))

    base = [softplus_inv(params.omega[0]), softplus_inv(params.omega[1]),
            softplus_inv(params.alpha[0]), softplus_inv(params.alpha[1]),
            softplus_inv(params.beta[0]), softplus_inv(params.beta[1])]
    if not zero_means:
        base += [params.mu[0], params.mu[1]]
    base += [logit(params.p), logit(params.q)]
    return np.array(base)


def _identify(params: MrsGarchParams) -> MrsGarchParams:
    """Order the labels so regime 2 carries the larger unconditional
    variance; a nonstationary regime counts as infinite."""
    v0 = params.unconditional_variance(0)
    v1 = params.unconditional_variance(1)
    if math.isinf(v0) and math.isinf(v1):
        return params if params.omega[0] <= params.omega[1] else params.swapped()
    return params if v0 <= v1 else params.swapped()


def _multistart_points(gfit: GarchFit, zero_means: bool) -> list[MrsGarchParams]:
    """Five starting points: the regime-degenerate GARCH point plus omega
    splits by 1/4 and 4 at staying probabilities 0.9 and 0.98.  The split
    starts use mild ARCH coefficients so the pure-switching basin (low
    per-regime persistence, variance differences carried by the chain) is
    reachable; the degenerate point keeps the exact GARCH values."""
    om, al, be = gfit.params.omega, gfit.params.alpha, gfit.params.beta
    mu = (0.0, 0.0) if zero_means else (gfit.params.mu, gfit.params.mu)
    points = [MrsGarchParams((om, om), (max(al, 1e-4), max(al, 1e-4)),
                             (max(be, 1e-4), max(be, 1e-4)), mu, 0.1, 0.1)]
    uncond = gfit.params.unconditional_variance
    mild_a, mild_b = 0.05, 0.10
    base = uncond * (1.0 - mild_a - mild_b)
    for stay in (0.9, 0.98):
        switch = 1.0 - stay
        for lo, hi in ((0.25, 4.0), (4.0, 0.25)):
            points.append(MrsGarchParams(
                (base * lo, base * hi), (mild_a, mild_a), (mild_b, mild_b),
                mu, switch, switch))
    return points


def mrs_fit(y: np.ndarray, config: OptimizerConfig | None = None,
            zero_means: bool = False,
            garch_start: GarchFit | None = None,
            extra_starts: tuple = ()) -> MrsGarchFit:
    """Maximum-likelihood fit with a five-point multistart.

    The starts are the regime-degenerate point matching the single-regime
    GARCH fit (which guarantees the fitted likelihood is at least the GARCH
    one) plus four perturbations splitting omega by factors 1/4 and 4 with
    staying probabilities 0.9 and 0.98.  Pass a precomputed GARCH fit to
    skip refitting it; `extra_starts` adds caller-supplied parameter points
    (rolling refits warm-start from the previous window's solution).
    """
    y = np.ascontiguousarray(y, dtype=float)
    if y.ndim != 1 or y.size < 10:
        raise ContractError("series must be 1-d with at least 10 points")
    var = float(y.var(ddof=1))
    if not var > 0.0:
        raise ContractError("series is constant")
    if config is None:
        config = OptimizerConfig(max_evals=6000, tol_f=1e-7, tol_x=1e-6)

    if garch_start is not None:
        gfit = garch_start
    else:
        try:
            gfit = garch_fit(y)
        except FitFailureError as exc:
            if exc.best is None:
                raise
            gfit = GarchFit(exc.best, -math.inf, np.empty(0), np.full(3, math.nan))

    n = y.size
    pf = np.empty((n, 2))
    pe = np.empty((n, 2))
    hr = np.empty((n, 2))
    oy = np.empty(2)
    oa = np.empty(2)
    ob = np.empty(2)
    om_ = np.empty(2)

    def negloglike_theta(theta):
        pars = _unpack_theta(theta, zero_means)
        oy[:] = pars.omega
        oa[:] = pars.alpha
        ob[:] = pars.beta
        om_[:] = pars.mu
        ll = _kernels.mrs_recursion(y, oy, oa, ob, om_, pars.p, pars.q, var,
                                    pf, pe, hr)
        return math.inf if math.isnan(ll) else -ll

    best = None
    any_converged = False
    starts = _multistart_points(gfit, zero_means) + list(extra_starts)
    for start_params in starts:
        theta0 = _pack_theta(start_params, zero_means)
        if not math.isfinite(negloglike_theta(theta0)):
            continue
        res = nelder_mead(negloglike_theta, theta0, config)
        any_converged = any_converged or res.converged
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise FitFailureError("no feasible starting point", best=None)
    refined = nelder_mead(negloglike_theta, best.x, config)
    if refined.fun <= best.fun:
        any_converged = any_converged or refined.converged
        best = refined
    params = _identify(_unpack_theta(best.x, zero_means))
    if not any_converged:
        raise FitFailureError("no multistart converged", best=params)

    loglike, pf_r, pe_r, hr_r = mrs_filter(y, params, h_init=var)

    def natural_nll(vec):
        try:
            pars = MrsGarchParams((vec[0], vec[1]), (vec[2], vec[3]),
                                  (vec[4], vec[5]), (vec[6], vec[7]),
                                  vec[8], vec[9])
        except ContractError:
            return math.nan
        oy[:] = pars.omega
        oa[:] = pars.alpha
        ob[:] = pars.beta
        om_[:] = pars.mu
        ll = _kernels.mrs_recursion(y, oy, oa, ob, om_, pars.p, pars.q, var,
                                    pf, pe, hr)
        return math.nan if math.isnan(ll) else -ll

    vec_hat = np.array([*params.omega, *params.alpha, *params.beta,
                        *params.mu, params.p, params.q])
    errs = numerical_std_errors(natural_nll, vec_hat)
    if zero_means:
        errs[6] = math.nan
        errs[7] = math.nan
    states = filter_states(pf_r, pe_r, hr_r)
    return MrsGarchFit(params, loglike, states, errs, float(y[-1]))


# ---------------------------------------------------------------------------
# forecasting


def _mixture_variance(probs, mu, variances) -> float:
    mean = probs[0] * mu[0] + probs[1] * mu[1]
    second = (probs[0] * (mu[0] * mu[0] + variances[0])
              + probs[1] * (mu[1] * mu[1] + variances[1]))
    return second - mean * mean


def mrs_forecast_from_state(params: MrsGarchParams, state: RegimeFilterState,
                            y_last: float, tau: int) -> np.ndarray:
    """Variance forecasts for horizons 1..tau from a terminal filter state.

    Step one applies the filter's variance update at T+1; further steps
    iterate the per-regime persistence on regime-aggregated expectations.
    Each horizon is collapsed to a scalar with the predicted regime
    probabilities, mean-dispersion term included.
    """
    if tau < 1:
        raise ContractError("tau must be at least 1")
    pi = _transition(params)
    mu = params.mu

    prob_prev = np.array(state.prob_filtered)
    prob_cur = prob_prev @ pi
    v_prev = np.array(state.h_regime)
    out = np.empty(tau)

    v_cur = np.empty(2)
    for i in (0, 1):
        if prob_cur[i] <= 0.0:
            raise FilterDegeneracyError("predicted regime probability vanished")
        w = pi[:, i] * prob_prev / prob_cur[i]
        agg = _mixture_variance(w, mu, v_prev)
        mean = w[0] * mu[0] + w[1] * mu[1]
        eps = y_last - mean
        v_cur[i] = params.omega[i] + params.alpha[i] * eps * eps + params.beta[i] * agg
    out[0] = _mixture_variance(prob_cur, mu, v_cur)

    for s in range(1, tau):
        prob_prev = prob_cur
        prob_cur = prob_prev @ pi
        v_next = np.empty(2)
        for i in (0, 1):
            if prob_cur[i] <= 0.0:
                raise FilterDegeneracyError("predicted regime probability vanished")
            w = pi[:, i] * prob_prev / prob_cur[i]
            agg = _mixture_variance(w, mu, v_cur)
            v_next[i] = params.omega[i] + (params.alpha[i] + params.beta[i]) * agg
        v_cur = v_next
        out[s] = _mixture_variance(prob_cur, mu, v_cur)
    return out


def mrs_forecast(fit: MrsGarchFit, tau: int) -> np.ndarray:
    """Variance forecasts for horizons 1..tau from a fitted model."""
    return mrs_forecast_from_state(fit.params, fit.filter_path[-1],
                                   fit.last_obs, tau)


def exante_prob_next(params: MrsGarchParams, state: RegimeFilterState) -> tuple[float, float]:
    """Probability of each regime for the next (unseen) day."""
    pi = _transition(params)
    pf = np.array(state.prob_filtered)
    nxt = pf @ pi
    return float(nxt[0]), float(nxt[1])
