"""Rolling-window backtest orchestrator.

One pass over the rolling windows drives every model: normalize the
in-sample window, rotate onto the eigenvector basis, fit one univariate
model per retained component (refreshed every `refit_every` origins, the
filters re-run daily in between on frozen parameters), map the variance
forecasts back to asset space, sum to the investment horizon, solve the
long-only minimum-variance weights and record the realized outcome.

Nothing after the forecast origin can influence a forecast: statistics,
basis and parameters are always estimated strictly inside the window, and
the refit schedule depends only on the origin index.  Two runs with the
same inputs are bitwise identical.
"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .data_io import (NormalizationStats, ReturnPanel, WindowSpec, normalize,
                      rolling_windows)
from .errors import ContractError, FitFailureError
from .estimation import OptimizerConfig
from .evaluation import LossReport, loss_functions
from .ewma import ewma_forecast, ewma_run
from .garch import GarchParams, garch_filter, garch_fit, garch_forecast
from .mrs_garch import (MrsGarchParams, RegimeFilterState, exante_prob_next,
                        mrs_filter, mrs_fit, mrs_forecast_from_state)
from .pca import (CovarianceForecast, PcaBasis, reconstruct,
                  spectral_decompose, to_components)
from .portfolio import (PerformanceReport, gmvp, horizon_covariance,
                        performance_stats)
from .simulation import RegimeBlockSpec, covariance_distance

MODELS = ("ewma", "ogarch", "mrsogarch")
THREADS_ENV = "REGIME_OGARCH_THREADS"


@dataclass(frozen=True)
class BacktestConfig:
    model: str
    n_components: int
    window: WindowSpec
    ewma_lambda: float = 0.06
    full_sample_normalization: bool = False
    refit_every: int = 10
    truncate_to_zero: bool = False
    zero_means: bool = False
    paper_literal_horizon: bool = False
    expanding: bool = False
    mrs_degenerate_lock: bool = False
    crisis_ranges: tuple = ()
    optimizer: OptimizerConfig = field(
        default_factory=lambda: OptimizerConfig(max_evals=4000, tol_f=1e-7,
                                                tol_x=1e-6))

    def __post_init__(self):
        if self.model not in MODELS:
            raise ContractError(f"model must be one of {MODELS}")
        if self.n_components < 1:
            raise ContractError("n_components must be at least 1")
        if self.window.in_sample_len < 30:
            raise ContractError("estimation window must have at least 30 rows")
        if self.refit_every < 1:
            raise ContractError("refit_every must be at least 1")
        if not (0.0 < self.ewma_lambda < 1.0):
            raise ContractError("ewma_lambda must lie in (0, 1)")
        object.__setattr__(self, "crisis_ranges",
                           tuple(tuple(r) for r in self.crisis_ranges))

    @property
    def horizon(self) -> int:
        return self.window.horizon

    def to_dict(self) -> dict:
        return {
            "model": self.model, "n_components": self.n_components,
            "in_sample_len": self.window.in_sample_len,
            "horizon": self.window.horizon, "step": self.window.step,
            "ewma_lambda": self.ewma_lambda,
            "full_sample_normalization": self.full_sample_normalization,
            "refit_every": self.refit_every,
            "truncate_to_zero": self.truncate_to_zero,
            "zero_means": self.zero_means,
            "paper_literal_horizon": self.paper_literal_horizon,
            "expanding": self.expanding,
            "mrs_degenerate_lock": self.mrs_degenerate_lock,
            "crisis_ranges": [list(r) for r in self.crisis_ranges],
            "optimizer": {"max_evals": self.optimizer.max_evals,
                          "tol_f": self.optimizer.tol_f,
                          "tol_x": self.optimizer.tol_x,
                          "seed": self.optimizer.seed},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BacktestConfig":
        opt = d.get("optimizer", {})
        return cls(
            model=d["model"], n_components=d["n_components"],
            window=WindowSpec(d["in_sample_len"], d.get("horizon", 1),
                              d.get("step", 1)),
            ewma_lambda=d.get("ewma_lambda", 0.06),
            full_sample_normalization=d.get("full_sample_normalization", False),
            refit_every=d.get("refit_every", 10),
            truncate_to_zero=d.get("truncate_to_zero", False),
            zero_means=d.get("zero_means", False),
            paper_literal_horizon=d.get("paper_literal_horizon", False),
            expanding=d.get("expanding", False),
            mrs_degenerate_lock=d.get("mrs_degenerate_lock", False),
            crisis_ranges=tuple(tuple(r) for r in d.get("crisis_ranges", [])),
            optimizer=OptimizerConfig(opt.get("max_evals", 4000),
                                      opt.get("tol_f", 1e-8),
                                      opt.get("tol_x", 1e-7),
                                      opt.get("seed", 0)),
        )


@dataclass
class FitRecord:
    """Frozen estimation context for one refit block."""

    origin: int
    stats: NormalizationStats
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    params: list
    loglikes: list
    garch_loglikes: list

    def basis(self, k: int) -> PcaBasis:
        return PcaBasis(self.eigenvectors, self.eigenvalues, self.stats, k)


@dataclass
class OriginRecord:
    origin: int
    date: str
    weights: np.ndarray
    realized_return: float
    eq_proxy: float
    eq_forecast_var: float | None
    component_variances: np.ndarray | None
    forecast: CovarianceForecast | None
    sigma_horizon: np.ndarray | None
    volatile_prob: np.ndarray | None
    fit_index: int
    refit: bool
    warning: str | None = None


@dataclass
class BacktestResult:
    config: BacktestConfig
    asset_names: tuple
    records: list
    fit_trail: list

    @property
    def periods_per_year(self) -> float:
        tau = self.config.horizon
        if tau == 1:
            return 252.0
        if tau == 5:
            return 52.0
        return 252.0 / tau

    def realized_returns(self) -> np.ndarray:
        return np.array([r.realized_return for r in self.records])

    def performance(self) -> dict:
        """Reports for the whole run plus each configured crisis range."""
        out = {"entire": performance_stats(self.realized_returns(),
                                           self.periods_per_year)}
        for lo, hi in self.config.crisis_ranges:
            sub = [r.realized_return for r in self.records
                   if lo <= r.date <= hi]
            if len(sub) >= 2:
                out[f"{lo}..{hi}"] = performance_stats(
                    np.array(sub), self.periods_per_year)
        return out

    def equal_weight_series(self) -> tuple[np.ndarray, np.ndarray]:
        """(realized proxy, variance forecast) for the equal-weight
        portfolio, skipping origins with no forecast."""
        xs, hs = [], []
        for r in self.records:
            if r.eq_forecast_var is not None:
                xs.append(r.eq_proxy)
                hs.append(r.eq_forecast_var)
        return np.array(xs), np.array(hs)

    def losses(self) -> LossReport:
        x, h = self.equal_weight_series()
        return loss_functions(x, h)


def _thread_count() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            return 1
    return 1


def _window_correlation(x_in: np.ndarray) -> np.ndarray:
    c = np.cov(x_in, rowvar=False, ddof=1)
    if c.ndim == 0:
        c = c.reshape(1, 1)
    d = np.sqrt(np.diag(c))
    corr = c / np.outer(d, d)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return corr


def _degenerate_mrs_params(gp: GarchParams) -> MrsGarchParams:
    return MrsGarchParams((gp.omega, gp.omega), (gp.alpha, gp.alpha),
                          (gp.beta, gp.beta), (gp.mu, gp.mu), 0.1, 0.1)


def _fit_component(y: np.ndarray, config: BacktestConfig, warm=None):
    """(params, loglike, garch_loglike) for one component series; params is
    None for a numerically dead component.  `warm` seeds the regime-model
    multistart with the previous refit's solution."""
    if float(y.var(ddof=1)) < 1e-14:
        return None, None, None
    if config.model == "ogarch":
        fit = garch_fit(y, config.optimizer)
        return fit.params, fit.loglike, fit.loglike
    gfit = garch_fit(y, config.optimizer)
    if config.mrs_degenerate_lock:
        params = _degenerate_mrs_params(gfit.params)
        ll, _, _, _ = mrs_filter(y, params, h_init=float(y.var(ddof=1)))
        return params, ll, gfit.loglike
    extra = (warm,) if isinstance(warm, MrsGarchParams) else ()
    fit = mrs_fit(y, config.optimizer, zero_means=config.zero_means,
                  garch_start=gfit, extra_starts=extra)
    return fit.params, fit.loglike, gfit.loglike


def _build_context(panel: ReturnPanel, window: tuple, config: BacktestConfig,
                   origin: int, pool, prev: FitRecord | None) -> FitRecord:
    if config.full_sample_normalization:
        x_full, stats = normalize(panel, (0, panel.n_periods))
    else:
        x_full, stats = normalize(panel, window)
    x_in = x_full[window[0]:window[1]]
    corr = _window_correlation(x_in)
    basis = spectral_decompose(corr, stats, config.n_components)
    y_in = to_components(x_in, basis)
    k = config.n_components
    cols = [np.ascontiguousarray(y_in[:, j]) for j in range(k)]
    warms = [prev.params[j] if prev is not None else None for j in range(k)]
    if pool is None:
        fitted = [_fit_component(c, config, w) for c, w in zip(cols, warms)]
    else:
        fitted = list(pool.map(lambda cw: _fit_component(cw[0], config, cw[1]),
                               zip(cols, warms)))
    params = [f[0] for f in fitted]
    loglikes = [f[1] for f in fitted]
    garch_lls = [f[2] for f in fitted]
    return FitRecord(origin, stats, basis.eigenvalues, basis.eigenvectors,
                     params, loglikes, garch_lls)


def _component_forecasts(panel: ReturnPanel, window: tuple,
                         context: FitRecord, config: BacktestConfig):
    """(tau x k variance forecasts, per-component high-regime probability)
    from the frozen context applied to the current window."""
    start, stop = window
    tau = config.horizon
    k = config.n_components
    stats = context.stats
    x_in = (panel.returns[start:stop] - stats.means) / stats.vols
    y_in = x_in @ context.eigenvectors
    comp_vars = np.empty((tau, k))
    vol_prob = np.full(k, math.nan)
    for j in range(k):
        y = np.ascontiguousarray(y_in[:, j])
        p = context.params[j]
        var_j = float(y.var(ddof=1))
        if p is None or var_j < 1e-14:
            comp_vars[:, j] = max(var_j, 1e-12)
            continue
        if isinstance(p, GarchParams):
            h_path, _ = garch_filter(y, p, h1=var_j)
            eps = float(y[-1]) - p.mu
            comp_vars[:, j] = garch_forecast(p, eps * eps, float(h_path[-1]),
                                             tau, config.paper_literal_horizon)
        else:
            _, pf, pe, hr = mrs_filter(y, p, h_init=var_j)
            state = RegimeFilterState(tuple(pf[-1]), tuple(pe[-1]),
                                      tuple(hr[-1]), y.size)
            comp_vars[:, j] = mrs_forecast_from_state(p, state, float(y[-1]), tau)
            vol_prob[j] = exante_prob_next(p, state)[1]
    return comp_vars, vol_prob


def run_backtest(panel: ReturnPanel, config: BacktestConfig) -> BacktestResult:
    """Roll the estimation window across the panel and trade the GMVP."""
    windows = rolling_windows(panel, config.window)
    if config.model != "ewma" and config.n_components > panel.n_assets:
        raise ContractError("more components than assets")
    tau = config.horizon
    n_assets = panel.n_assets
    eq = np.full(n_assets, 1.0 / n_assets)
    threads = _thread_count()
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None

    records = []
    fit_trail = []
    context = None
    prev_weights = None
    try:
        for w_idx, (start, origin) in enumerate(windows):
            if config.expanding:
                start = 0
            window = (start, origin)
            date = panel.dates[origin]
            warning = None
            refit = False

            forecast = None
            comp_vars = None
            vol_prob = None
            if config.model == "ewma":
                state = ewma_run(panel.returns[start:origin], config.ewma_lambda)
                forecast = ewma_forecast(state, tau)
            else:
                if context is None or w_idx % config.refit_every == 0:
                    try:
                        context = _build_context(panel, window, config,
                                                 origin, pool, context)
                        fit_trail.append(context)
                        refit = True
                    except FitFailureError as exc:
                        warning = f"refit failed: {exc}"
                if context is not None:
                    comp_vars, vol_prob = _component_forecasts(
                        panel, window, context, config)
                    forecast = reconstruct(context.basis(config.n_components),
                                           comp_vars, config.truncate_to_zero)

            period_assets = panel.returns[origin:origin + tau].sum(axis=0)
            if forecast is not None:
                sigma_h = horizon_covariance(forecast)
                weights = gmvp(sigma_h, as_of=date, horizon=tau).weights
                eq_var = float(eq @ sigma_h @ eq)
            else:
                sigma_h = None
                weights = prev_weights if prev_weights is not None else eq.copy()
                eq_var = None
                warning = warning or "no forecast available; weights carried forward"
            prev_weights = weights

            records.append(OriginRecord(
                origin=origin, date=date, weights=weights,
                realized_return=float(weights @ period_assets),
                eq_proxy=float(abs(eq @ period_assets)),
                eq_forecast_var=eq_var,
                component_variances=comp_vars,
                forecast=forecast,
                sigma_horizon=sigma_h,
                volatile_prob=vol_prob,
                fit_index=len(fit_trail) - 1,
                refit=refit,
                warning=warning))
    finally:
        if pool is not None:
            pool.shutdown()
    return BacktestResult(config, panel.asset_names, records, fit_trail)


def component_sweep(panel: ReturnPanel, config: BacktestConfig,
                    k_values, truth: RegimeBlockSpec) -> list[dict]:
    """Forecast-vs-truth covariance distance for several component counts.

    One full-rank backtest supplies the per-component variance forecasts;
    each k then reconstructs with the leading k components truncated to
    zero, exactly what a k-component run would produce.  Distances compare
    the one-step forecast with the true covariance of the target day's
    block, averaged per block label.
    """
    if truth is None:
        raise ContractError("component sweep needs the block-truth sidecar")
    if any(k < 1 or k > panel.n_assets for k in k_values):
        raise ContractError("component counts must lie in [1, n_assets]")
    full = replace(config, n_components=panel.n_assets, truncate_to_zero=True)
    result = run_backtest(panel, full)

    rows = []
    for k in k_values:
        dists = []
        labels = []
        for rec in result.records:
            if rec.component_variances is None:
                continue
            fit = result.fit_trail[rec.fit_index]
            basis_k = fit.basis(k)
            fc = reconstruct(basis_k, rec.component_variances[:, :k],
                             truncate_to_zero=True)
            block = truth.block_of(rec.origin)
            dists.append(covariance_distance(fc.matrices[0],
                                             truth.covariances[block]))
            labels.append(truth.labels[block])
        dists = np.array(dists)
        labels = np.array(labels)
        row = {"k": int(k), "d_total": float(dists.mean())}
        for lab in dict.fromkeys(truth.labels):
            mask = labels == lab
            row[f"d_{lab}"] = float(dists[mask].mean()) if mask.any() else math.nan
        rows.append(row)
    return rows
