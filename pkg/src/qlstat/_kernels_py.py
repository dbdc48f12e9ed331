"""Pure-Python scalar kernels.

Reference implementation and import-time fallback for the compiled
``_kernels`` extension. Both modules expose the same functions with the same
numerical behaviour; ``tests/test_backends.py`` holds them to agreement.
"""

from __future__ import annotations

import math

from .errors import DomainError, ExtremeQuantileError, NumericalError

LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

_STIRLING_MIN = 10.0
_CF_EPS = 1e-16
_CF_TINY = 1e-300

# endpoint solver
_U_EDGE = 1e-12
_FD_STEP = 1e-6


def log_gamma(x):
    if not (x > 0.0) or math.isinf(x):
        raise DomainError(f"log_gamma requires finite x > 0, got {x!r}")
    return math.lgamma(x)


def _stirling_corr(x):
    # lgamma(x) - [(x - 1/2) ln x - x + ln sqrt(2 pi)], valid for x >= 10
    r = 1.0 / x
    r2 = r * r
    return r * (1.0 / 12.0 + r2 * (-1.0 / 360.0 + r2 * (1.0 / 1260.0 + r2 * (
        -1.0 / 1680.0 + r2 * (1.0 / 1188.0 + r2 * (-691.0 / 360360.0 + r2 * (1.0 / 156.0)))))))


def log_beta(a, b):
    if a > b:
        a, b = b, a
    if b < _STIRLING_MIN:
        return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    if a < _STIRLING_MIN:
        # lgamma(b) - lgamma(a + b) without cancellation
        diff = (-(a + b - 0.5) * math.log1p(a / b) - a * math.log(b) + a
                + _stirling_corr(b) - _stirling_corr(a + b))
        return math.lgamma(a) + diff
    s = a + b
    return (LN_SQRT_2PI + (a - 0.5) * math.log(a / s) + b * math.log(b / s)
            - 0.5 * math.log(b) + _stirling_corr(a) + _stirling_corr(b) - _stirling_corr(s))


def log_beta_prefactor(x, y, a, b):
    """ln[x^a y^b / B(a, b)] with y = 1 - x supplied by the caller."""
    if a >= _STIRLING_MIN and b >= _STIRLING_MIN:
        s = a + b
        x0 = a / s
        y0 = b / s
        d = x - x0
        return (a * math.log1p(d / x0) + b * math.log1p(-d / y0)
                + 0.5 * math.log(a * y0) - LN_SQRT_2PI
                - (_stirling_corr(a) + _stirling_corr(b) - _stirling_corr(s)))
    if a < _STIRLING_MIN and b >= _STIRLING_MIN:
        return (a * math.log(x * b) + b * math.log(y) - math.lgamma(a)
                + (a + b - 0.5) * math.log1p(a / b) - a
                - _stirling_corr(b) + _stirling_corr(a + b))
    if b < _STIRLING_MIN and a >= _STIRLING_MIN:
        return (b * math.log(y * a) + a * math.log(x) - math.lgamma(b)
                + (a + b - 0.5) * math.log1p(b / a) - b
                - _stirling_corr(a) + _stirling_corr(a + b))
    return a * math.log(x) + b * math.log(y) - log_beta(a, b)


def _betacf(a, b, x):
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    maxit = int(300 + 30 * math.sqrt(max(a, b)))
    for m in range(1, maxit + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise NumericalError(
        f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})",
        residual=abs(delta - 1.0))


def _check_shapes(a, b):
    if not (a > 0.0 and b > 0.0) or math.isinf(a) or math.isinf(b):
        raise DomainError(f"beta shapes must be finite and positive, got a={a!r}, b={b!r}")


def reg_inc_beta(x, a, b):
    _check_shapes(a, b)
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x must lie in [0, 1], got {x!r}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    y = 1.0 - x
    if x < (a + 1.0) / (a + b + 2.0):
        front = math.exp(log_beta_prefactor(x, y, a, b))
        return front * _betacf(a, b, x) / a
    front = math.exp(log_beta_prefactor(y, x, b, a))
    return 1.0 - front * _betacf(b, a, y) / b


def reg_inc_beta_upper(x, a, b):
    """1 - I_x(a, b), evaluated without cancellation."""
    _check_shapes(a, b)
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x must lie in [0, 1], got {x!r}")
    if x == 0.0:
        return 1.0
    if x == 1.0:
        return 0.0
    y = 1.0 - x
    if x < (a + 1.0) / (a + b + 2.0):
        front = math.exp(log_beta_prefactor(x, y, a, b))
        return 1.0 - front * _betacf(a, b, x) / a
    front = math.exp(log_beta_prefactor(y, x, b, a))
    return front * _betacf(b, a, y) / b


def beta_log_pdf(x, a, b):
    _check_shapes(a, b)
    if not (0.0 < x < 1.0):
        raise DomainError(f"beta density requires 0 < x < 1, got {x!r}")
    y = 1.0 - x
    return log_beta_prefactor(x, y, a, b) - math.log(x) - math.log(y)


def inv_reg_inc_beta(q, a, b):
    _check_shapes(a, b)
    if not (0.0 < q < 1.0):
        raise DomainError(f"inverse incomplete beta requires 0 < q < 1, got {q!r}")
    # normal-approximation start
    s = a + b
    mean = a / s
    sd = math.sqrt(a * b / (s * s * (s + 1.0)))
    x = mean + normal_quantile(q) * sd
    lo, hi = 0.0, 1.0
    if not (0.0 < x < 1.0):
        x = 0.5
    best_x, best_r = x, math.inf
    collapsed = False
    for _ in range(2000):
        f = reg_inc_beta(x, a, b) - q
        resid = abs(f)
        if resid < best_r:
            best_x, best_r = x, resid
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
        lp = beta_log_pdf(x, a, b)
        if lp > -700.0:
            xn = x - f / math.exp(lp)
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
    x = best_x
    return x


def normal_pdf(z):
    return INV_SQRT_2PI * math.exp(-0.5 * z * z)


def normal_cdf(z):
    return 0.5 * math.erfc(-z / SQRT2)


_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)


def normal_quantile(q):
    if not (0.0 < q < 1.0):
        raise DomainError(f"normal quantile requires 0 < q < 1, got {q!r}")
    # rational approximation, then Halley refinement
    if q < 0.02425:
        t = math.sqrt(-2.0 * math.log(q))
        z = ((((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5])
             / ((((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0))
    elif q > 1.0 - 0.02425:
        t = math.sqrt(-2.0 * math.log1p(-q))
        z = -((((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5])
              / ((((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0))
    else:
        r = q - 0.5
        t = r * r
        z = ((((((_A[0] * t + _A[1]) * t + _A[2]) * t + _A[3]) * t + _A[4]) * t + _A[5]) * r
             / (((((_B[0] * t + _B[1]) * t + _B[2]) * t + _B[3]) * t + _B[4]) * t + 1.0))
    for _ in range(2):
        if z < 0.0:
            e = 0.5 * math.erfc(-z / SQRT2) - q
        else:
            e = (1.0 - q) - 0.5 * math.erfc(z / SQRT2)
        u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * z * z)
        z = z - u / (1.0 + 0.5 * z * u)
    return z


def endpoint_approx(n, p, alpha, high):
    z = normal_quantile(1.0 - alpha)
    sign = 1.0 if high else -1.0
    return (p + sign * z * math.sqrt(p * (1.0 - p) / n)
            - (2.0 * p - 1.0) * (z * z + 2.0) / (6.0 * n))


def _endpoint_resid(u, n1, p, alpha, high):
    a = n1 * u
    b = n1 * (1.0 - u)
    if high:
        return reg_inc_beta(p, a, b) - alpha
    return reg_inc_beta_upper(p, a, b) - alpha


def solve_endpoint(n, p, alpha, high):
    """Index u solving I_p(shape(u)) = alpha (high) or 1 - I_p = alpha (low).

    Returns ``(u, residual)``. The residual is decreasing in u for the high
    endpoint and increasing for the low one.
    """
    if not (0.0 < p < 1.0) or not (0.0 < alpha < 1.0):
        raise DomainError(f"need 0 < p, alpha < 1, got p={p!r}, alpha={alpha!r}")
    if n < 1:
        raise DomainError(f"sample size must be positive, got {n!r}")
    n1 = n + 1.0
    sgn = -1.0 if high else 1.0  # sgn * resid is increasing in u
    lo, hi = _U_EDGE, 1.0 - _U_EDGE
    g_lo = sgn * _endpoint_resid(lo, n1, p, alpha, high)
    g_hi = sgn * _endpoint_resid(hi, n1, p, alpha, high)
    if g_lo > 0.0 or g_hi < 0.0:
        raise ExtremeQuantileError(
            f"no endpoint index solves the {'high' if high else 'low'} equation "
            f"for n={n}, p={p}, alpha={alpha}", tail="high" if high else "low")
    u = endpoint_approx(n, p, alpha, high)
    if not (lo < u < hi):
        u = 0.5 * (lo + hi)
    g = 1.0
    for _ in range(300):
        g = sgn * _endpoint_resid(u, n1, p, alpha, high)
        if g > 0.0:
            hi = u
        else:
            lo = u
        if abs(g) <= 1e-14 or hi - lo <= 4e-16:
            break
        ua = max(u - _FD_STEP, _U_EDGE)
        ub = min(u + _FD_STEP, 1.0 - _U_EDGE)
        dg = sgn * (_endpoint_resid(ub, n1, p, alpha, high)
                    - _endpoint_resid(ua, n1, p, alpha, high)) / (ub - ua)
        un = u - g / dg if dg > 0.0 else -1.0
        if lo < un < hi:
            u = un
        else:
            u = 0.5 * (lo + hi)
    resid = abs(g)
    if resid > 1e-10:
        raise NumericalError(
            f"endpoint solver did not converge (n={n}, p={p}, alpha={alpha})", residual=resid)
    return u, resid
