import itertools
import math

import numpy as np
import pytest

from regime_ogarch.errors import ContractError
from regime_ogarch.garch import GarchParams, garch_filter, garch_fit, garch_forecast
from regime_ogarch.mrs_garch import (MrsGarchParams, RegimeFilterState,
                                     aggregate_lagged_variance, filter_step,
                                     initial_state, mrs_filter, mrs_fit,
                                     mrs_forecast, mrs_forecast_from_state,
                                     stationary_distribution)


def normpdf(x, mean, var):
    return math.exp(-0.5 * (x - mean) ** 2 / var) / math.sqrt(2 * math.pi * var)


def naive_filter(y, params, h_init):
    """Literal transcription of the filter recursions, no shared code, no
    log-space tricks.  Returns per-step ex-ante probs, filtered probs and
    per-regime variances plus the loglike."""
    p, q = params.p, params.q
    pi = [[1 - p, p], [q, 1 - q]]
    mu = params.mu
    pf = [q / (p + q), p / (p + q)]
    h = [h_init, h_init]
    hs = [list(h)]
    pfs = [list(pf)]
    pes = [list(pf)]
    ll = 0.0
    for t in range(1, len(y)):
        pe = [pf[0] * pi[0][i] + pf[1] * pi[1][i] for i in (0, 1)]
        h_new = []
        for i in (0, 1):
            w = [pi[j][i] * pf[j] / pe[i] for j in (0, 1)]
            m = w[0] * mu[0] + w[1] * mu[1]
            agg = (w[0] * (mu[0] ** 2 + h[0]) + w[1] * (mu[1] ** 2 + h[1])
                   - m * m)
            eps = y[t - 1] - m
            h_new.append(params.omega[i] + params.alpha[i] * eps * eps
                         + params.beta[i] * agg)
        f = [normpdf(y[t], mu[i], h_new[i]) for i in (0, 1)]
        den = f[0] * pe[0] + f[1] * pe[1]
        ll += math.log(den)
        pf = [f[i] * pe[i] / den for i in (0, 1)]
        h = h_new
        hs.append(list(h))
        pfs.append(list(pf))
        pes.append(list(pe))
    return ll, pes, pfs, hs


def random_params(rng, spread=1.0):
    omega = (rng.uniform(0.02, 0.3), rng.uniform(0.02, 0.3) * spread)
    alpha = (rng.uniform(0.0, 0.25), rng.uniform(0.0, 0.25))
    beta = (rng.uniform(0.2, 0.7), rng.uniform(0.2, 0.7))
    mu = (rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3))
    p = rng.uniform(0.05, 0.5)
    q = rng.uniform(0.05, 0.5)
    return MrsGarchParams(omega, alpha, beta, mu, p, q)


class TestStationaryDistribution:
    def test_symmetric(self):
        assert stationary_distribution(0.5, 0.5) == (0.5, 0.5)

    def test_hand_solved(self):
        pi = stationary_distribution(0.2, 0.1)
        assert pi[0] == pytest.approx(1.0 / 3.0, abs=1e-15)
        assert pi[1] == pytest.approx(2.0 / 3.0, abs=1e-15)

    def test_fixed_point(self):
        p, q = 0.13, 0.37
        pi = stationary_distribution(p, q)
        nxt = (pi[0] * (1 - p) + pi[1] * q, pi[0] * p + pi[1] * (1 - q))
        assert abs(nxt[0] - pi[0]) < 1e-14
        assert abs(nxt[1] - pi[1]) < 1e-14

    def test_bounds(self):
        with pytest.raises(ContractError):
            stationary_distribution(0.0, 0.5)


class TestAggregateLaggedVariance:
    def test_zero_mean_simplification(self):
        # equal mixture of variances 1 and 3 with zero means -> 2
        params = MrsGarchParams((0.1, 0.1), (0.0, 0.0), (0.5, 0.5),
                                (0.0, 0.0), 0.5, 0.5)
        state = RegimeFilterState((0.5, 0.5), (0.5, 0.5), (1.0, 3.0), 1)
        assert aggregate_lagged_variance(state, params, 0) == pytest.approx(2.0)

    def test_point_mass(self):
        # all filtered mass on regime 1 with p -> tiny keeps the mixture there
        params = MrsGarchParams((0.1, 0.1), (0.0, 0.0), (0.5, 0.5),
                                (0.7, -0.2), 1e-9, 0.3)
        state = RegimeFilterState((1.0, 0.0), (1.0, 0.0), (1.3, 9.0), 1)
        agg = aggregate_lagged_variance(state, params, 0)
        assert agg == pytest.approx(1.3, abs=1e-6)

    def test_mean_dispersion_term(self):
        # mu = (1, -1), equal weights, variances (1, 1):
        # 0.5*(1+1) + 0.5*(1+1) - 0 = 2
        params = MrsGarchParams((0.1, 0.1), (0.0, 0.0), (0.5, 0.5),
                                (1.0, -1.0), 0.5, 0.5)
        state = RegimeFilterState((0.5, 0.5), (0.5, 0.5), (1.0, 1.0), 1)
        assert aggregate_lagged_variance(state, params, 0) == pytest.approx(2.0)


class TestFilter:
    def test_degenerate_reduction(self):
        rng = np.random.default_rng(0)
        y = rng.normal(0.05, 1.2, size=400)
        gp = GarchParams(0.08, 0.09, 0.82, 0.05)
        mp = MrsGarchParams((0.08, 0.08), (0.09, 0.09), (0.82, 0.82),
                            (0.05, 0.05), 0.25, 0.4)
        h1 = float(y.var(ddof=1))
        _, ll_g = garch_filter(y, gp, h1=h1)
        ll_m, _, _, _ = mrs_filter(y, mp, h_init=h1)
        assert ll_m == pytest.approx(ll_g, abs=1e-10)

    def test_equal_density_symmetric_update(self):
        params = MrsGarchParams((0.1, 0.1), (0.05, 0.05), (0.6, 0.6),
                                (0.0, 0.0), 0.5, 0.5)
        state = initial_state(params, 1.0)
        new, _ = filter_step(state, 0.3, -0.8, params)
        assert new.prob_filtered[0] == pytest.approx(0.5, abs=1e-14)

    def test_probability_sums(self):
        rng = np.random.default_rng(2)
        y = rng.standard_normal(300)
        params = random_params(rng)
        _, pf, pe, hr = mrs_filter(y, params)
        assert np.max(np.abs(pf.sum(axis=1) - 1.0)) < 1e-12
        assert np.max(np.abs(pe.sum(axis=1) - 1.0)) < 1e-12
        assert np.all(hr > 0)

    def test_label_swap_invariance(self):
        rng = np.random.default_rng(3)
        y = rng.standard_normal(250)
        params = random_params(rng, spread=3.0)
        ll_a, _, _, _ = mrs_filter(y, params)
        ll_b, _, _, _ = mrs_filter(y, params.swapped())
        assert ll_a == pytest.approx(ll_b, abs=1e-9)

    def test_stepwise_matches_kernel(self):
        rng = np.random.default_rng(4)
        y = rng.standard_normal(60)
        params = random_params(rng)
        h_init = float(y.var(ddof=1))
        ll_k, pf, pe, hr = mrs_filter(y, params, h_init=h_init)
        state = initial_state(params, h_init)
        total = 0.0
        for t in range(1, y.size):
            state, inc = filter_step(state, float(y[t - 1]), float(y[t]), params)
            total += inc
            assert state.prob_filtered[0] == pytest.approx(pf[t, 0], abs=1e-12)
            assert state.h_regime[0] == pytest.approx(hr[t, 0], rel=1e-12)
            assert state.h_regime[1] == pytest.approx(hr[t, 1], rel=1e-12)
        assert total == pytest.approx(ll_k, abs=1e-10)

    def test_loglike_continuity(self):
        rng = np.random.default_rng(5)
        y = rng.standard_normal(500)
        params = random_params(rng)
        ll, _, _, _ = mrs_filter(y, params)
        bumped = MrsGarchParams(
            (params.omega[0] + 1e-8, params.omega[1]), params.alpha,
            params.beta, params.mu, params.p, params.q)
        ll_b, _, _, _ = mrs_filter(y, bumped)
        assert abs(ll_b - ll) < 1e-4

    @pytest.mark.parametrize("seed", range(20))
    def test_exhaustive_path_oracle(self, seed):
        """Brute force over all 2^10 regime paths must reproduce the filter
        likelihood when per-path variances are collapsed each step."""
        rng = np.random.default_rng(1000 + seed)
        y = rng.standard_normal(10) * rng.uniform(0.5, 1.5)
        params = random_params(rng, spread=2.0)
        h_init = 0.8
        ll_filter, _, _, _ = mrs_filter(y, params, h_init=h_init)
        _, _, _, hs = naive_filter(y, params, h_init)

        p, q = params.p, params.q
        pi = [[1 - p, p], [q, 1 - q]]
        pinf = [q / (p + q), p / (p + q)]
        total = 0.0
        for path in itertools.product((0, 1), repeat=len(y)):
            prob = pinf[path[0]]
            for t in range(1, len(y)):
                prob *= pi[path[t - 1]][path[t]]
            dens = 1.0
            for t in range(1, len(y)):
                dens *= normpdf(y[t], params.mu[path[t]], hs[t][path[t]])
            total += prob * dens
        assert ll_filter == pytest.approx(math.log(total), abs=1e-8)

    def test_matches_naive_filter_paths(self):
        rng = np.random.default_rng(77)
        y = rng.standard_normal(40)
        params = random_params(rng)
        h_init = 1.1
        ll, pf, pe, hr = mrs_filter(y, params, h_init=h_init)
        ll_ref, pes, pfs, hs = naive_filter(y, params, h_init)
        assert ll == pytest.approx(ll_ref, abs=1e-9)
        np.testing.assert_allclose(pf, np.array(pfs), atol=1e-10)
        np.testing.assert_allclose(pe, np.array(pes), atol=1e-10)
        np.testing.assert_allclose(hr, np.array(hs), rtol=1e-10)


class TestForecast:
    def test_degenerate_reduction(self):
        rng = np.random.default_rng(6)
        y = rng.normal(0.02, 0.9, size=300)
        gp = GarchParams(0.06, 0.11, 0.8, 0.02)
        mp = MrsGarchParams((0.06, 0.06), (0.11, 0.11), (0.8, 0.8),
                            (0.02, 0.02), 0.3, 0.45)
        h1 = float(y.var(ddof=1))
        h_path, _ = garch_filter(y, gp, h1=h1)
        _, pf, pe, hr = mrs_filter(y, mp, h_init=h1)
        state = RegimeFilterState(tuple(pf[-1]), tuple(pe[-1]), tuple(hr[-1]),
                                  y.size)
        f_mrs = mrs_forecast_from_state(mp, state, float(y[-1]), 8)
        eps = float(y[-1]) - gp.mu
        f_g = garch_forecast(gp, eps * eps, float(h_path[-1]), 8)
        np.testing.assert_allclose(f_mrs, f_g, atol=1e-10)

    def test_absorbing_limit(self):
        # regime known with near certainty and switching nearly impossible:
        # the forecast follows that regime's own recursion
        mp = MrsGarchParams((0.05, 0.4), (0.1, 0.1), (0.8, 0.8), (0.0, 0.0),
                            1e-6, 1e-6)
        state = RegimeFilterState((1.0, 0.0), (1.0, 0.0), (0.7, 3.0), 50)
        out = mrs_forecast_from_state(mp, state, 0.5, 5)
        own = garch_forecast(GarchParams(0.05, 0.1, 0.8, 0.0), 0.25, 0.7, 5)
        np.testing.assert_allclose(out, own, rtol=1e-4)

    @pytest.mark.parametrize("seed", range(20))
    def test_path_enumeration_oracle(self, seed):
        """tau = 3 forecasts must equal the expectation over all 2^3 future
        regime paths with step-collapsed variances."""
        rng = np.random.default_rng(2000 + seed)
        params = random_params(rng, spread=2.0)
        pf_T = (rng.uniform(0.2, 0.8),)
        pf_T = (pf_T[0], 1.0 - pf_T[0])
        h_T = (rng.uniform(0.3, 2.0), rng.uniform(0.3, 2.0))
        y_T = rng.normal()
        state = RegimeFilterState(pf_T, pf_T, h_T, 10)
        out = mrs_forecast_from_state(params, state, y_T, 3)

        p, q = params.p, params.q
        pi = [[1 - p, p], [q, 1 - q]]
        mu = params.mu
        # literal per-regime variance table, collapsed each step
        marg = [list(pf_T)]
        for s in range(3):
            prev = marg[-1]
            marg.append([prev[0] * pi[0][i] + prev[1] * pi[1][i]
                         for i in (0, 1)])
        v = [None, [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]
        for i in (0, 1):
            w = [pi[j][i] * marg[0][j] / marg[1][i] for j in (0, 1)]
            m = w[0] * mu[0] + w[1] * mu[1]
            agg = (w[0] * (mu[0] ** 2 + h_T[0]) + w[1] * (mu[1] ** 2 + h_T[1])
                   - m * m)
            eps = y_T - m
            v[1][i] = (params.omega[i] + params.alpha[i] * eps * eps
                       + params.beta[i] * agg)
        for s in (2, 3):
            for i in (0, 1):
                w = [pi[j][i] * marg[s - 1][j] / marg[s][i] for j in (0, 1)]
                m = w[0] * mu[0] + w[1] * mu[1]
                agg = (w[0] * (mu[0] ** 2 + v[s - 1][0])
                       + w[1] * (mu[1] ** 2 + v[s - 1][1]) - m * m)
                v[s][i] = params.omega[i] + (params.alpha[i] + params.beta[i]) * agg
        # enumerate future paths; the collapse makes the step-s variance a
        # function of the step-s regime only
        for s in (1, 2, 3):
            second = 0.0
            mean = 0.0
            for path in itertools.product((0, 1), repeat=s):
                prob = pf_T[path[0]] if s == 0 else None
                prob = 1.0
                prev_probs = pf_T
                chain = [None] + list(path)
                prob = 1.0
                # path probability from the filtered distribution
                p0 = pf_T
                prob_path = 0.0
                for start in (0, 1):
                    pr = p0[start]
                    last = start
                    for step in range(s):
                        pr *= pi[last][chain[step + 1]]
                        last = chain[step + 1]
                    prob_path += pr
                final = path[-1]
                second += prob_path * (mu[final] ** 2 + v[s][final])
                mean += prob_path * mu[final]
            oracle = second - mean * mean
            assert out[s - 1] == pytest.approx(oracle, abs=1e-8)

    def test_positive_outputs(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            params = random_params(rng, spread=4.0)
            state = RegimeFilterState((0.3, 0.7), (0.3, 0.7),
                                      (rng.uniform(0.1, 2), rng.uniform(0.1, 2)), 5)
            out = mrs_forecast_from_state(params, state, rng.normal(), 10)
            assert np.all(out > 0)


def simulate_two_regime(n, seed, sig=(1.0, 3.0), p=0.02, q=0.02):
    rng = np.random.default_rng(seed)
    s = 0
    r = np.empty(n)
    for t in range(n):
        u = rng.random()
        if s == 0 and u < p:
            s = 1
        elif s == 1 and u < q:
            s = 0
        r[t] = sig[s] * rng.standard_normal()
    return r


class TestFit:
    def test_recovery_two_regime(self):
        y = simulate_two_regime(5000, seed=42)
        fit = mrs_fit(y)
        assert fit.params.p == pytest.approx(0.02, abs=0.02)
        assert fit.params.q == pytest.approx(0.02, abs=0.02)
        ratio = (fit.params.unconditional_variance(1)
                 / fit.params.unconditional_variance(0))
        assert ratio == pytest.approx(9.0, rel=0.30)

    def test_identification_holds(self):
        y = simulate_two_regime(2000, seed=1)
        fit = mrs_fit(y)
        assert fit.params.is_identified

    def test_loglike_at_least_garch(self):
        y = simulate_two_regime(1500, seed=2)
        fit = mrs_fit(y)
        gfit = garch_fit(y)
        assert fit.loglike >= gfit.loglike - 1e-6

    def test_filter_path_attached(self):
        y = simulate_two_regime(400, seed=3)
        fit = mrs_fit(y)
        assert len(fit.filter_path) == y.size
        assert fit.last_obs == y[-1]

    def test_json_dict(self):
        y = simulate_two_regime(400, seed=4)
        fit = mrs_fit(y)
        d = fit.to_dict()
        assert set(d) == {"omega", "alpha", "beta", "mu", "p", "q",
                          "loglike", "std_errors"}
        assert len(d["std_errors"]) == 10

    def test_null_calibration(self):
        """On single-regime GARCH data the regime model should rarely beat
        the simple fit by more than the chi-square 5% hurdle."""
        crit = 14.067  # chi2 df 7, 5%
        wins = 0
        for seed in range(5):
            y = simulate_garch_series(1500, seed)
            gfit = garch_fit(y)
            mfit = mrs_fit(y)
            if 2.0 * (mfit.loglike - gfit.loglike) < crit:
                wins += 1
        assert wins >= 4


def simulate_garch_series(n, seed):
    rng = np.random.default_rng(seed)
    omega, alpha, beta = 0.05, 0.08, 0.85
    h = omega / (1 - alpha - beta)
    eps = 0.0
    y = np.empty(n)
    for t in range(n):
        if t > 0:
            h = omega + alpha * eps * eps + beta * h
        eps = math.sqrt(h) * rng.standard_normal()
        y[t] = eps
    return y
