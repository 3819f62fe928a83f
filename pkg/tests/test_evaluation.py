import math

import numpy as np
import pytest

from regime_ogarch.errors import ContractError, DegenerateSeriesError
from regime_ogarch.evaluation import (autocovariance, dm_test, loss_functions,
                                      loss_series, realized_proxy)


class TestLossFunctions:
    def test_perfect_forecast_zeroes(self):
        x = np.array([0.01, 0.02, 0.005])
        rep = loss_functions(x, x**2)
        assert rep.mse1 == 0.0
        assert rep.mse2 == 0.0
        assert rep.mad1 == 0.0
        assert rep.mad2 == 0.0
        assert rep.r2log == 0.0

    def test_hand_value(self):
        rep = loss_functions(np.array([0.01]), np.array([0.0004]))
        assert rep.mse1 == pytest.approx(1e-4, rel=1e-12)

    def test_matches_elementwise_oracle(self):
        rng = np.random.default_rng(0)
        x = np.abs(rng.normal(0, 0.01, 50))
        h = rng.uniform(1e-5, 4e-4, 50)
        rep = loss_functions(x, h)
        mse1 = sum((xi - math.sqrt(hi)) ** 2 for xi, hi in zip(x, h)) / 50
        mse2 = sum((xi**2 - hi) ** 2 for xi, hi in zip(x, h)) / 50
        mad1 = sum(abs(xi - math.sqrt(hi)) for xi, hi in zip(x, h)) / 50
        mad2 = sum(abs(xi**2 - hi) for xi, hi in zip(x, h)) / 50
        r2 = sum(math.log(max(xi**2, 1e-12) / hi) ** 2
                 for xi, hi in zip(x, h)) / 50
        assert rep.mse1 == pytest.approx(mse1, abs=1e-14)
        assert rep.mse2 == pytest.approx(mse2, abs=1e-14)
        assert rep.mad1 == pytest.approx(mad1, abs=1e-14)
        assert rep.mad2 == pytest.approx(mad2, abs=1e-14)
        assert rep.r2log == pytest.approx(r2, abs=1e-12)

    def test_zero_realized_is_floored(self):
        rep = loss_functions(np.array([0.0]), np.array([1e-4]))
        assert math.isfinite(rep.r2log)

    def test_nonpositive_forecast_rejected(self):
        with pytest.raises(ContractError):
            loss_functions(np.array([0.01]), np.array([0.0]))


class TestDmTest:
    def test_identical_losses_degenerate(self):
        a = np.random.default_rng(0).uniform(size=30)
        with pytest.raises(DegenerateSeriesError):
            dm_test(a, a.copy(), 1)

    def test_tau_one_matches_z_statistic(self):
        rng = np.random.default_rng(1)
        a = rng.uniform(0.5, 1.5, size=200)
        b = rng.uniform(0.4, 1.4, size=200)
        res = dm_test(a, b, 1)
        d = a - b
        n = d.size
        z = d.mean() / math.sqrt(((d - d.mean()) ** 2).sum() / n / n)
        assert res.statistic == pytest.approx(z, abs=1e-12)
        assert res.p_value == pytest.approx(
            2.0 * (1.0 - 0.5 * (1.0 + math.erf(abs(z) / math.sqrt(2)))),
            abs=1e-12)

    def test_antisymmetry(self):
        rng = np.random.default_rng(2)
        a = rng.uniform(size=100)
        b = rng.uniform(size=100)
        r1 = dm_test(a, b, 3)
        r2 = dm_test(b, a, 3)
        assert r1.statistic == -r2.statistic
        assert r1.p_value == r2.p_value

    def test_gamma0_is_biased_variance(self):
        rng = np.random.default_rng(3)
        d = rng.normal(size=64)
        g0 = autocovariance(d, 0)
        assert g0 == pytest.approx(d.var(ddof=0), abs=1e-14)

    def test_negative_bracket_falls_back(self):
        # strongly negatively autocorrelated differential at tau = 2
        d = np.tile([1.0, -1.0], 50) + np.random.default_rng(4).normal(
            0, 1e-3, 100)
        a = d
        b = np.zeros(100)
        res = dm_test(a, b, 2)
        assert res.variance_fallback

    def test_detects_clear_winner(self):
        rng = np.random.default_rng(5)
        a = rng.uniform(0, 0.1, 300)
        b = a + 0.2 + rng.uniform(0, 0.05, 300)
        res = dm_test(a, b, 1)
        assert res.statistic < -5
        assert res.p_value < 1e-6


class TestRealizedProxy:
    def test_zero_returns(self):
        out = realized_proxy(np.zeros((10, 2)), np.array([0.5, 0.5]))
        np.testing.assert_array_equal(out, np.zeros(10))

    def test_single_asset_identity(self):
        r = np.array([[0.01], [-0.02], [0.03]])
        out = realized_proxy(r, np.array([1.0]))
        np.testing.assert_allclose(out, np.abs(r[:, 0]))

    def test_matches_dot_product_oracle(self):
        rng = np.random.default_rng(6)
        r = rng.normal(0, 0.01, size=(30, 3))
        w = np.array([1 / 3, 1 / 3, 1 / 3])
        out = realized_proxy(r, w)
        expected = np.array([abs(float(row @ w)) for row in r])
        np.testing.assert_allclose(out, expected, atol=1e-15)

    def test_five_day_periods_sum_daily(self):
        rng = np.random.default_rng(7)
        r = rng.normal(0, 0.01, size=(10, 2))
        w = np.array([0.4, 0.6])
        out = realized_proxy(r, w, period=5)
        assert out.shape == (2,)
        assert out[0] == pytest.approx(abs(float(r[:5].sum(axis=0) @ w)))
        assert out[1] == pytest.approx(abs(float(r[5:].sum(axis=0) @ w)))


class TestLossSeries:
    def test_mean_equals_report(self):
        rng = np.random.default_rng(8)
        x = np.abs(rng.normal(0, 0.01, 40))
        h = rng.uniform(1e-5, 4e-4, 40)
        series = loss_series(x, h)
        rep = loss_functions(x, h)
        for name, values in series.items():
            assert float(values.mean()) == pytest.approx(getattr(rep, name),
                                                         abs=1e-14)
