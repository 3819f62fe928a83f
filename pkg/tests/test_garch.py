import math

import numpy as np
import pytest

from regime_ogarch.errors import ContractError, NonstationaryError
from regime_ogarch.garch import (GarchParams, garch_filter, garch_fit,
                                 garch_forecast, garch_forecast_from_fit)


def simulate_garch(omega, alpha, beta, n, seed, mu=0.0):
    rng = np.random.default_rng(seed)
    h = omega / (1.0 - alpha - beta)
    y = np.empty(n)
    eps = 0.0
    for t in range(n):
        if t > 0:
            h = omega + alpha * eps * eps + beta * h
        eps = math.sqrt(h) * rng.standard_normal()
        y[t] = mu + eps
    return y


class TestFilter:
    def test_one_step_arithmetic(self):
        # omega 0.1, alpha 0.1, beta 0.8, h1 = 1, eps1^2 = 1 -> h2 = 1
        params = GarchParams(0.1, 0.1, 0.8, 0.0)
        y = np.array([1.0, 0.5, -0.5])
        h, _ = garch_filter(y, params, h1=1.0)
        assert h[0] == 1.0
        assert h[1] == pytest.approx(1.0, abs=1e-15)

    def test_constant_variance_degenerate(self):
        params = GarchParams(0.25, 0.0, 0.0, 0.0)
        y = np.random.default_rng(1).normal(size=20)
        h, _ = garch_filter(y, params, h1=0.7)
        np.testing.assert_allclose(h[1:], 0.25)

    def test_loglike_matches_density_sum(self):
        rng = np.random.default_rng(5)
        y = rng.normal(0.01, 0.6, size=64)
        params = GarchParams(0.05, 0.12, 0.8, 0.01)
        h1 = float(np.var(y, ddof=1))
        h, ll = garch_filter(y, params)
        # independent oracle: recompute recursion and sum Gaussian log pdfs
        h_ref = h1
        ll_ref = 0.0
        for t in range(1, y.size):
            eps_prev = y[t - 1] - params.mu
            h_ref = params.omega + params.alpha * eps_prev**2 + params.beta * h_ref
            eps = y[t] - params.mu
            ll_ref += (-0.5 * math.log(2 * math.pi * h_ref)
                       - 0.5 * eps * eps / h_ref)
            assert h[t] == pytest.approx(h_ref, rel=1e-14)
        assert ll == pytest.approx(ll_ref, abs=1e-10)

    def test_mean_invariance(self):
        rng = np.random.default_rng(6)
        y = rng.normal(0.3, 1.0, size=200)
        mu = float(y.mean())
        p_with = GarchParams(0.2, 0.1, 0.7, mu)
        p_zero = GarchParams(0.2, 0.1, 0.7, 0.0)
        h1 = float(y.var(ddof=1))
        _, ll_a = garch_filter(y, p_with, h1=h1)
        _, ll_b = garch_filter(y - mu, p_zero, h1=h1)
        assert ll_a == pytest.approx(ll_b, abs=1e-12)

    def test_positivity(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            params = GarchParams(10 ** rng.uniform(-4, 0),
                                 rng.uniform(0, 0.4), rng.uniform(0, 0.55))
            y = rng.standard_normal(100)
            h, _ = garch_filter(y, params)
            assert np.all(h > 0)

    def test_rejects_nonfinite(self):
        with pytest.raises(ContractError):
            garch_filter(np.array([1.0, np.inf]), GarchParams(0.1, 0.1, 0.8))


class TestFit:
    def test_recovery(self):
        y = simulate_garch(0.05, 0.10, 0.85, 5000, seed=42)
        fit = garch_fit(y)
        assert fit.params.alpha + fit.params.beta == pytest.approx(0.95, abs=0.05)
        assert fit.loglike >= -1e30

    def test_iid_data_small_alpha(self):
        rng = np.random.default_rng(0)
        y = rng.standard_normal(5000)
        fit = garch_fit(y)
        assert fit.params.alpha <= 0.05
        assert fit.params.unconditional_variance == pytest.approx(1.0, abs=0.1)

    def test_loglike_beats_start(self):
        y = simulate_garch(0.1, 0.05, 0.9, 800, seed=3)
        fit = garch_fit(y)
        start = GarchParams(0.05 * float(y.var(ddof=1)), 0.05, 0.90,
                            float(y.mean()))
        _, ll_start = garch_filter(y, start, h1=float(y.var(ddof=1)))
        assert fit.loglike >= ll_start - 1e-9

    def test_constant_series_rejected(self):
        with pytest.raises(ContractError):
            garch_fit(np.ones(100))

    def test_std_errors_finite_interior(self):
        y = simulate_garch(0.05, 0.10, 0.85, 3000, seed=9)
        fit = garch_fit(y)
        assert np.all(np.isfinite(fit.std_errors))

    def test_json_dict(self):
        y = simulate_garch(0.05, 0.10, 0.85, 500, seed=10)
        fit = garch_fit(y)
        d = fit.to_dict()
        assert set(d) == {"omega", "alpha", "beta", "mu", "loglike",
                          "std_errors"}


class TestForecast:
    def test_fixed_point(self):
        params = GarchParams(0.1, 0.1, 0.8)
        hbar = params.unconditional_variance
        # pick eps^2 = hbar so h_{T+1} = hbar exactly
        out = garch_forecast(params, hbar, hbar, 6)
        np.testing.assert_allclose(out, hbar, atol=1e-12)

    def test_one_step_iteration(self):
        params = GarchParams(0.1, 0.1, 0.8)
        # h_{T+1} = 2 by construction: eps^2 and h chosen to hit it
        out = garch_forecast(params, 2.0, (2.0 - 0.1 - 0.1 * 2.0) / 0.8, 2)
        assert out[0] == pytest.approx(2.0, abs=1e-12)
        assert out[1] == pytest.approx(1.0 + 0.9 * (2.0 - 1.0), abs=1e-12)

    def test_monotone_convergence(self):
        params = GarchParams(0.1, 0.1, 0.8)
        out = garch_forecast(params, 3.0, 2.0, 200)
        hbar = params.unconditional_variance
        gaps = np.abs(out - hbar)
        assert np.all(np.diff(gaps) <= 0)
        assert gaps[-1] < 1e-8

    def test_recursion_identity_exact(self):
        params = GarchParams(0.07, 0.12, 0.8)
        out = garch_forecast(params, 1.3, 0.9, 50)
        hbar = params.unconditional_variance
        persist = params.alpha + params.beta
        for s in range(49):
            assert out[s + 1] == hbar + persist * (out[s] - hbar)

    def test_nonstationary_rejected(self):
        with pytest.raises(NonstationaryError):
            GarchParams(0.1, 0.5, 0.5)

    def test_paper_literal_variant(self):
        params = GarchParams(0.1, 0.1, 0.8)
        hbar = params.unconditional_variance
        last_h = 2.0
        literal = garch_forecast(params, 9.9, last_h, 3,
                                 paper_literal_horizon=True)
        assert literal[0] == pytest.approx(hbar + 0.9 * (last_h - hbar))
        assert literal[1] == pytest.approx(hbar + 0.9**2 * (last_h - hbar))

    def test_from_fit_wrapper(self):
        y = simulate_garch(0.05, 0.1, 0.8, 400, seed=2)
        fit = garch_fit(y)
        out = garch_forecast_from_fit(fit, y, 4)
        eps = y[-1] - fit.params.mu
        manual = garch_forecast(fit.params, eps * eps, fit.h_path[-1], 4)
        np.testing.assert_array_equal(out, manual)
