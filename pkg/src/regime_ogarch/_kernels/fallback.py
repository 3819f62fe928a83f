"""Pure-Python filter recursions, used when the compiled core is absent.

Mirrors `_core.pyx` operation for operation so both backends agree to
floating-point roundoff.  Keep the arithmetic order in sync when editing.
"""

import math

LOG_2PI = math.log(2.0 * math.pi)


def garch_recursion(y, mu, omega, alpha, beta, h1, h_out):
    """GARCH(1,1) variance recursion plus Gaussian log likelihood.

    Fills ``h_out[t]`` with the conditional variance of ``y[t]`` and returns
    the log likelihood summed from the second observation (the first is
    conditioned on).  Returns NaN if a variance stops being positive and
    finite.
    """
    n = len(y)
    h = h1
    h_out[0] = h
    eps_prev = y[0] - mu
    ll = 0.0
    for t in range(1, n):
        h = omega + alpha * eps_prev * eps_prev + beta * h
        if not (h > 0.0) or h > 1e300 or math.isnan(h):
            return math.nan
        h_out[t] = h
        eps = y[t] - mu
        ll += -0.5 * (LOG_2PI + math.log(h) + eps * eps / h)
        eps_prev = eps
    return ll


def mrs_recursion(y, omega, alpha, beta, mu, p, q, h_init, prob_filtered,
                  prob_exante, h_regime):
    """Two-state regime-switching GARCH filter (Klaassen lagged-variance
    aggregation), filling the per-step probability and variance paths.

    Regime 0 is the "stay" side of p (p = P(switch 0 -> 1), q = P(switch
    1 -> 0)).  ``prob_filtered[t]``, ``prob_exante[t]`` and ``h_regime[t]``
    are the updated probabilities, the ex-ante probabilities and the
    per-regime conditional variances of ``y[t]``.  Row 0 holds the
    stationary start and the shared variance seed.  Returns the log
    likelihood summed from the second observation, or NaN on degeneracy
    (vanishing mixture probability or non-positive variance).
    """
    n = len(y)
    om0, om1 = omega[0], omega[1]
    al0, al1 = alpha[0], alpha[1]
    be0, be1 = beta[0], beta[1]
    mu0, mu1 = mu[0], mu[1]
    # transition matrix rows: from-regime, columns: to-regime
    pi00 = 1.0 - p
    pi01 = p
    pi10 = q
    pi11 = 1.0 - q

    pf0 = q / (p + q)
    pf1 = 1.0 - pf0
    h0 = h_init
    h1 = h_init
    prob_filtered[0, 0] = pf0
    prob_filtered[0, 1] = pf1
    prob_exante[0, 0] = pf0
    prob_exante[0, 1] = pf1
    h_regime[0, 0] = h0
    h_regime[0, 1] = h1

    ll = 0.0
    for t in range(1, n):
        pe0 = pf0 * pi00 + pf1 * pi10
        pe1 = pf0 * pi01 + pf1 * pi11
        if pe0 <= 0.0 or pe1 <= 0.0:
            return math.nan
        y_prev = y[t - 1]

        # target regime 0
        pt00 = pi00 * pf0 / pe0
        pt10 = pi10 * pf1 / pe0
        m0 = pt00 * mu0 + pt10 * mu1
        agg0 = pt00 * (mu0 * mu0 + h0) + pt10 * (mu1 * mu1 + h1) - m0 * m0
        e0 = y_prev - m0
        hn0 = om0 + al0 * e0 * e0 + be0 * agg0

        # target regime 1
        pt01 = pi01 * pf0 / pe1
        pt11 = pi11 * pf1 / pe1
        m1 = pt01 * mu0 + pt11 * mu1
        agg1 = pt01 * (mu0 * mu0 + h0) + pt11 * (mu1 * mu1 + h1) - m1 * m1
        e1 = y_prev - m1
        hn1 = om1 + al1 * e1 * e1 + be1 * agg1

        if not (hn0 > 0.0) or not (hn1 > 0.0) or hn0 > 1e300 or hn1 > 1e300:
            return math.nan
        if math.isnan(hn0) or math.isnan(hn1):
            return math.nan

        d0 = y[t] - mu0
        d1 = y[t] - mu1
        la0 = -0.5 * (LOG_2PI + math.log(hn0) + d0 * d0 / hn0) + math.log(pe0)
        la1 = -0.5 * (LOG_2PI + math.log(hn1) + d1 * d1 / hn1) + math.log(pe1)
        # max-factored mixture keeps the update finite for tiny densities
        if la0 >= la1:
            mx = la0
        else:
            mx = la1
        w0 = math.exp(la0 - mx)
        w1 = math.exp(la1 - mx)
        s = w0 + w1
        ll += mx + math.log(s)
        pf0 = w0 / s
        pf1 = w1 / s
        h0 = hn0
        h1 = hn1

        prob_exante[t, 0] = pe0
        prob_exante[t, 1] = pe1
        prob_filtered[t, 0] = pf0
        prob_filtered[t, 1] = pf1
        h_regime[t, 0] = h0
        h_regime[t, 1] = h1
    return ll
