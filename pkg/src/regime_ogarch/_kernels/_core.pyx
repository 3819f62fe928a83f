# Compiled filter recursions.  Mirrors fallback.py operation for operation;
# keep the arithmetic order in sync when editing.

from libc.math cimport exp, isnan, log, NAN

cdef double LOG_2PI = 1.8378770664093453


def garch_recursion(double[::1] y, double mu, double omega, double alpha,
                    double beta, double h1, double[::1] h_out):
    """See fallback.garch_recursion."""
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t t
    cdef double h = h1
    cdef double eps_prev = y[0] - mu
    cdef double eps, ll = 0.0
    cdef bint bad = 0
    with nogil:
        h_out[0] = h
        for t in range(1, n):
            h = omega + alpha * eps_prev * eps_prev + beta * h
            if not (h > 0.0) or h > 1e300 or isnan(h):
                bad = 1
                break
            h_out[t] = h
            eps = y[t] - mu
            ll += -0.5 * (LOG_2PI + log(h) + eps * eps / h)
            eps_prev = eps
    if bad:
        return NAN
    return ll


def mrs_recursion(double[::1] y, double[::1] omega, double[::1] alpha,
                  double[::1] beta, double[::1] mu, double p, double q,
                  double h_init, double[:, ::1] prob_filtered,
                  double[:, ::1] prob_exante, double[:, ::1] h_regime):
    """See fallback.mrs_recursion."""
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t t
    cdef double om0 = omega[0], om1 = omega[1]
    cdef double al0 = alpha[0], al1 = alpha[1]
    cdef double be0 = beta[0], be1 = beta[1]
    cdef double mu0 = mu[0], mu1 = mu[1]
    cdef double pi00 = 1.0 - p, pi01 = p, pi10 = q, pi11 = 1.0 - q
    cdef double pf0 = q / (p + q)
    cdef double pf1 = 1.0 - pf0
    cdef double h0 = h_init, h1 = h_init
    cdef double pe0, pe1, y_prev
    cdef double pt00, pt10, m0, agg0, e0, hn0
    cdef double pt01, pt11, m1, agg1, e1, hn1
    cdef double d0, d1, la0, la1, mx, w0, w1, s
    cdef double ll = 0.0
    cdef bint bad = 0

    with nogil:
        prob_filtered[0, 0] = pf0
        prob_filtered[0, 1] = pf1
        prob_exante[0, 0] = pf0
        prob_exante[0, 1] = pf1
        h_regime[0, 0] = h0
        h_regime[0, 1] = h1

        for t in range(1, n):
            pe0 = pf0 * pi00 + pf1 * pi10
            pe1 = pf0 * pi01 + pf1 * pi11
            if pe0 <= 0.0 or pe1 <= 0.0:
                bad = 1
                break
            y_prev = y[t - 1]

            pt00 = pi00 * pf0 / pe0
            pt10 = pi10 * pf1 / pe0
            m0 = pt00 * mu0 + pt10 * mu1
            agg0 = pt00 * (mu0 * mu0 + h0) + pt10 * (mu1 * mu1 + h1) - m0 * m0
            e0 = y_prev - m0
            hn0 = om0 + al0 * e0 * e0 + be0 * agg0

            pt01 = pi01 * pf0 / pe1
            pt11 = pi11 * pf1 / pe1
            m1 = pt01 * mu0 + pt11 * mu1
            agg1 = pt01 * (mu0 * mu0 + h0) + pt11 * (mu1 * mu1 + h1) - m1 * m1
            e1 = y_prev - m1
            hn1 = om1 + al1 * e1 * e1 + be1 * agg1

            if not (hn0 > 0.0) or not (hn1 > 0.0) or hn0 > 1e300 or hn1 > 1e300:
                bad = 1
                break
            if isnan(hn0) or isnan(hn1):
                bad = 1
                break

            d0 = y[t] - mu0
            d1 = y[t] - mu1
            la0 = -0.5 * (LOG_2PI + log(hn0) + d0 * d0 / hn0) + log(pe0)
            la1 = -0.5 * (LOG_2PI + log(hn1) + d1 * d1 / hn1) + log(pe1)
            if la0 >= la1:
                mx = la0
            else:
                mx = la1
            w0 = exp(la0 - mx)
            w1 = exp(la1 - mx)
            s = w0 + w1
            ll += mx + log(s)
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
    if bad:
        return NAN
    return ll
