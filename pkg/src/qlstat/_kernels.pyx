# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled scalar kernels; same API and algorithms as ``_kernels_py``."""

from libc.math cimport (INFINITY, erfc, exp, fabs, isinf, lgamma, log, log1p, sqrt, M_PI)

from .errors import DomainError, ExtremeQuantileError, NumericalError

cdef double LN_SQRT_2PI = 0.5 * log(2.0 * M_PI)
cdef double SQRT2 = sqrt(2.0)
cdef double INV_SQRT_2PI = 1.0 / sqrt(2.0 * M_PI)
cdef double STIRLING_MIN = 10.0
cdef double CF_EPS = 1e-16
cdef double CF_TINY = 1e-300
cdef double U_EDGE = 1e-12
cdef double FD_STEP = 1e-6


cdef inline double _stirling_corr(double x) nogil:
    cdef double r = 1.0 / x
    cdef double r2 = r * r
    return r * (1.0 / 12.0 + r2 * (-1.0 / 360.0 + r2 * (1.0 / 1260.0 + r2 * (
        -1.0 / 1680.0 + r2 * (1.0 / 1188.0 + r2 * (-691.0 / 360360.0 + r2 * (1.0 / 156.0)))))))


cdef double _log_beta(double a, double b) nogil:
    cdef double t, s, diff
    if a > b:
        t = a
        a = b
        b = t
    if b < STIRLING_MIN:
        return lgamma(a) + lgamma(b) - lgamma(a + b)
    if a < STIRLING_MIN:
        diff = (-(a + b - 0.5) * log1p(a / b) - a * log(b) + a
                + _stirling_corr(b) - _stirling_corr(a + b))
        return lgamma(a) + diff
    s = a + b
    return (LN_SQRT_2PI + (a - 0.5) * log(a / s) + b * log(b / s)
            - 0.5 * log(b) + _stirling_corr(a) + _stirling_corr(b) - _stirling_corr(s))


cdef double _log_prefactor(double x, double y, double a, double b) nogil:
    cdef double s, x0, y0, d
    if a >= STIRLING_MIN and b >= STIRLING_MIN:
        s = a + b
        x0 = a / s
        y0 = b / s
        d = x - x0
        return (a * log1p(d / x0) + b * log1p(-d / y0)
                + 0.5 * log(a * y0) - LN_SQRT_2PI
                - (_stirling_corr(a) + _stirling_corr(b) - _stirling_corr(s)))
    if a < STIRLING_MIN and b >= STIRLING_MIN:
        return (a * log(x * b) + b * log(y) - lgamma(a)
                + (a + b - 0.5) * log1p(a / b) - a
                - _stirling_corr(b) + _stirling_corr(a + b))
    if b < STIRLING_MIN and a >= STIRLING_MIN:
        return (b * log(y * a) + a * log(x) - lgamma(b)
                + (a + b - 0.5) * log1p(b / a) - b
                - _stirling_corr(a) + _stirling_corr(a + b))
    return a * log(x) + b * log(y) - _log_beta(a, b)


cdef double _betacf(double a, double b, double x, int *ok) nogil:
    cdef double qab = a + b, qap = a + 1.0, qam = a - 1.0
    cdef double c = 1.0, d, h, aa, delta = 0.0
    cdef int m, m2, maxit
    d = 1.0 - qab * x / qap
    if fabs(d) < CF_TINY:
        d = CF_TINY
    d = 1.0 / d
    h = d
    maxit = <int>(300 + 30 * sqrt(a if a > b else b))
    for m in range(1, maxit + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if fabs(d) < CF_TINY:
            d = CF_TINY
        c = 1.0 + aa / c
        if fabs(c) < CF_TINY:
            c = CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if fabs(d) < CF_TINY:
            d = CF_TINY
        c = 1.0 + aa / c
        if fabs(c) < CF_TINY:
            c = CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < CF_EPS:
            ok[0] = 1
            return h
    ok[0] = 0
    return h


cdef double _ibeta(double x, double a, double b, bint upper, int *ok) nogil:
    # I_x(a, b), or its complement when ``upper``
    cdef double y, front, v
    ok[0] = 1
    if x <= 0.0:
        return 1.0 if upper else 0.0
    if x >= 1.0:
        return 0.0 if upper else 1.0
    y = 1.0 - x
    if x < (a + 1.0) / (a + b + 2.0):
        front = exp(_log_prefactor(x, y, a, b))
        v = front * _betacf(a, b, x, ok) / a
        return 1.0 - v if upper else v
    front = exp(_log_prefactor(y, x, b, a))
    v = front * _betacf(b, a, y, ok) / b
    return v if upper else 1.0 - v


cdef inline double _normal_cdf(double z) nogil:
    return 0.5 * erfc(-z / SQRT2)


cdef double _normal_quantile(double q) nogil:
    cdef double t, z, r, e, u
    cdef int i
    if q < 0.02425:
        t = sqrt(-2.0 * log(q))
        z = ((((((-7.784894002430293e-03 * t - 3.223964580411365e-01) * t - 2.400758277161838e+00) * t
                - 2.549732539343734e+00) * t + 4.374664141464968e+00) * t + 2.938163982698783e+00)
             / ((((7.784695709041462e-03 * t + 3.224671290700398e-01) * t + 2.445134137142996e+00) * t
                 + 3.754408661907416e+00) * t + 1.0))
    elif q > 1.0 - 0.02425:
        t = sqrt(-2.0 * log1p(-q))
        z = -((((((-7.784894002430293e-03 * t - 3.223964580411365e-01) * t - 2.400758277161838e+00) * t
                 - 2.549732539343734e+00) * t + 4.374664141464968e+00) * t + 2.938163982698783e+00)
              / ((((7.784695709041462e-03 * t + 3.224671290700398e-01) * t + 2.445134137142996e+00) * t
                  + 3.754408661907416e+00) * t + 1.0))
    else:
        r = q - 0.5
        t = r * r
        z = ((((((-3.969683028665376e+01 * t + 2.209460984245205e+02) * t - 2.759285104469687e+02) * t
                + 1.383577518672690e+02) * t - 3.066479806614716e+01) * t + 2.506628277459239e+00) * r
             / (((((-5.447609879822406e+01 * t + 1.615858368580409e+02) * t - 1.556989798598866e+02) * t
                  + 6.680131188771972e+01) * t - 1.328068155288572e+01) * t + 1.0))
    for i in range(2):
        if z < 0.0:
            e = 0.5 * erfc(-z / SQRT2) - q
        else:
            e = (1.0 - q) - 0.5 * erfc(z / SQRT2)
        u = e * sqrt(2.0 * M_PI) * exp(0.5 * z * z)
        z = z - u / (1.0 + 0.5 * z * u)
    return z


cdef inline double _endpoint_resid(double u, double n1, double p, double alpha, bint high,
                                   int *ok) nogil:
    if high:
        return _ibeta(p, n1 * u, n1 * (1.0 - u), False, ok) - alpha
    return _ibeta(p, n1 * u, n1 * (1.0 - u), True, ok) - alpha


def _check_shapes(double a, double b):
    if not (a > 0.0 and b > 0.0) or isinf(a) or isinf(b):
        raise DomainError(f"beta shapes must be finite and positive, got a={a!r}, b={b!r}")


def log_gamma(double x):
    if not (x > 0.0) or isinf(x):
        raise DomainError(f"log_gamma requires finite x > 0, got {x!r}")
    return lgamma(x)


def log_beta(double a, double b):
    return _log_beta(a, b)


def log_beta_prefactor(double x, double y, double a, double b):
    return _log_prefactor(x, y, a, b)


def reg_inc_beta(double x, double a, double b):
    cdef int ok
    cdef double v
    _check_shapes(a, b)
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x must lie in [0, 1], got {x!r}")
    v = _ibeta(x, a, b, False, &ok)
    if not ok:
        raise NumericalError(
            f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")
    return v


def reg_inc_beta_upper(double x, double a, double b):
    cdef int ok
    cdef double v
    _check_shapes(a, b)
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x must lie in [0, 1], got {x!r}")
    v = _ibeta(x, a, b, True, &ok)
    if not ok:
        raise NumericalError(
            f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")
    return v


def beta_log_pdf(double x, double a, double b):
    _check_shapes(a, b)
    if not (0.0 < x < 1.0):
        raise DomainError(f"beta density requires 0 < x < 1, got {x!r}")
    return _log_prefactor(x, 1.0 - x, a, b) - log(x) - log(1.0 - x)


def inv_reg_inc_beta(double q, double a, double b):
    cdef double s, mean, sd, x, lo = 0.0, hi = 1.0, resid, f, lp, xn
    cdef double best_x, best_r = INFINITY
    cdef int it, ok
    cdef bint step_ok, collapsed = False
    _check_shapes(a, b)
    if not (0.0 < q < 1.0):
        raise DomainError(f"inverse incomplete beta requires 0 < q < 1, got {q!r}")
    s = a + b
    mean = a / s
    sd = sqrt(a * b / (s * s * (s + 1.0)))
    x = mean + _normal_quantile(q) * sd
    if not (0.0 < x < 1.0):
        x = 0.5
    best_x = x
    for it in range(2000):
        f = _ibeta(x, a, b, False, &ok) - q
        if not ok:
            raise NumericalError("incomplete beta continued fraction did not converge")
        resid = fabs(f)
        if resid < best_r:
            best_x = x
            best_r = resid
        if f > 0.0:
            hi = x
        else:
            lo = x
        if resid <= 1e-15:
            break
        if hi - lo <= 1e-16 * hi:
            collapsed = True
            break
        step_ok = False
        lp = _log_prefactor(x, 1.0 - x, a, b) - log(x) - log(1.0 - x)
        if lp > -700.0:
            xn = x - f / exp(lp)
            if lo < xn < hi:
                x = xn
                step_ok = True
        if not step_ok:
            if lo == 0.0 and hi < 1e-3:
                x = hi * 1e-3 if hi > 1e-290 else 0.5 * hi
            elif hi == 1.0 and lo > 1.0 - 1e-3:
                x = 1.0 - (1.0 - lo) * 1e-3
            else:
                x = 0.5 * (lo + hi)
            if not (lo < x < hi):
                x = 0.5 * (lo + hi)
            if not (lo < x < hi):
                # lo and hi are adjacent doubles: the root is not representable more finely
                collapsed = True
                break
    if best_r > 1e-10 and not collapsed:
        raise NumericalError(
            f"inverse incomplete beta failed (q={q}, a={a}, b={b})", residual=best_r)
    return best_x


def normal_pdf(double z):
    return INV_SQRT_2PI * exp(-0.5 * z * z)


def normal_cdf(double z):
    return _normal_cdf(z)


def normal_quantile(double q):
    if not (0.0 < q < 1.0):
        raise DomainError(f"normal quantile requires 0 < q < 1, got {q!r}")
    return _normal_quantile(q)


def endpoint_approx(double n, double p, double alpha, bint high):
    cdef double z = _normal_quantile(1.0 - alpha)
    cdef double sign = 1.0 if high else -1.0
    return (p + sign * z * sqrt(p * (1.0 - p) / n)
            - (2.0 * p - 1.0) * (z * z + 2.0) / (6.0 * n))


def solve_endpoint(double n, double p, double alpha, bint high):
    cdef double n1 = n + 1.0
    cdef double sgn = -1.0 if high else 1.0
    cdef double lo = U_EDGE, hi = 1.0 - U_EDGE
    cdef double g_lo, g_hi, u, g = 1.0, ua, ub, dg, un
    cdef int it, ok = 1, ok2 = 1
    if not (0.0 < p < 1.0) or not (0.0 < alpha < 1.0):
        raise DomainError(f"need 0 < p, alpha < 1, got p={p!r}, alpha={alpha!r}")
    if n < 1:
        raise DomainError(f"sample size must be positive, got {n!r}")
    g_lo = sgn * _endpoint_resid(lo, n1, p, alpha, high, &ok)
    g_hi = sgn * _endpoint_resid(hi, n1, p, alpha, high, &ok2)
    if not (ok and ok2):
        raise NumericalError("incomplete beta continued fraction did not converge")
    if g_lo > 0.0 or g_hi < 0.0:
        raise ExtremeQuantileError(
            f"no endpoint index solves the {'high' if high else 'low'} equation "
            f"for n={n:g}, p={p}, alpha={alpha}", tail="high" if high else "low")
    u = endpoint_approx(n, p, alpha, high)
    if not (lo < u < hi):
        u = 0.5 * (lo + hi)
    with nogil:
        for it in range(300):
            g = sgn * _endpoint_resid(u, n1, p, alpha, high, &ok)
            if g > 0.0:
                hi = u
            else:
                lo = u
            if fabs(g) <= 1e-14 or hi - lo <= 4e-16:
                break
            ua = u - FD_STEP if u - FD_STEP > U_EDGE else U_EDGE
            ub = u + FD_STEP if u + FD_STEP < 1.0 - U_EDGE else 1.0 - U_EDGE
            dg = sgn * (_endpoint_resid(ub, n1, p, alpha, high, &ok2)
                        - _endpoint_resid(ua, n1, p, alpha, high, &ok2)) / (ub - ua)
            un = u - g / dg if dg > 0.0 else -1.0
            if lo < un < hi:
                u = un
            else:
                u = 0.5 * (lo + hi)
    if not ok:
        raise NumericalError("incomplete beta continued fraction did not converge")
    if fabs(g) > 1e-10:
        raise NumericalError(
            f"endpoint solver did not converge (n={n:g}, p={p}, alpha={alpha})", residual=fabs(g))
    return u, fabs(g)
