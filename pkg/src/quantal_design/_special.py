"""Special functions needed by the link families.

Only scalar, double-precision routines live here.  Everything returns logs
where the direct value can underflow, because the design weight is
assembled in log space.
"""

from __future__ import annotations

import math

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)

# erfc(x / sqrt 2) stays a normal double up to about x = 37.5.
_ERFC_TAIL_SWITCH = 35.0


def log_norm_pdf(x: float) -> float:
    return -0.5 * x * x - _LOG_SQRT_2PI


def _mills_ratio(x: float, terms: int = 80) -> float:
    """Normal Mills ratio R(x) = S(x)/phi(x) for large positive x.

    Laplace continued fraction R = 1/(x + 1/(x + 2/(x + 3/(x + ...)))),
    evaluated bottom-up.  For x >= 5 it converges to full precision in far
    fewer than ``terms`` levels.
    """
    t = x
    for k in range(terms, 0, -1):
        t = x + k / t
    return 1.0 / t


def norm_sf(x: float) -> float:
    """Upper tail S(x) = P(Z > x) without forming 1 - cdf."""
    return 0.5 * math.erfc(x / _SQRT2)


def log_norm_sf(x: float) -> float:
    if x > _ERFC_TAIL_SWITCH:
        return log_norm_pdf(x) + math.log(_mills_ratio(x))
    if x < 0.0:
        # S near 1: log1p of the small lower tail is exact to rounding.
        return math.log1p(-norm_sf(-x))
    return math.log(norm_sf(x))


# ---------------------------------------------------------------------------
# Regularized incomplete beta
# ---------------------------------------------------------------------------

_CF_TINY = 1e-300
_CF_EPS = 1e-16
_CF_MAXIT = 10_000


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b) by the modified Lentz method."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
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
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _lbeta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def log_betainc(a: float, b: float, log_x: float, log_y: float) -> float:
    """log I_x(a, b), given log x and log(1 - x) separately.

    Passing both logs lets callers supply 1 - x without cancellation.  The
    continued fraction is applied on whichever side of the mean
    (a + 1)/(a + b + 2) it converges fast, with I_x(a,b) = 1 - I_{1-x}(b,a)
    on the other side.
    """
    x = math.exp(log_x)
    y = math.exp(log_y)
    if x == 0.0:
        return -math.inf
    if y == 0.0:
        return 0.0
    if x < (a + 1.0) / (a + b + 2.0):
        log_front = a * log_x + b * log_y - _lbeta(a, b)
        return log_front + math.log(_betacf(a, b, x)) - math.log(a)
    log_front = b * log_y + a * log_x - _lbeta(a, b)
    rest = math.exp(log_front + math.log(_betacf(b, a, y)) - math.log(b))
    return math.log1p(-rest)


def log_student_t_tail(t: float, df: float) -> float:
    """log P(T > |t|) for Student t with ``df`` degrees of freedom."""
    t2 = t * t
    log_den = math.log(df + t2)
    log_x = math.log(df) - log_den
    log_y = (2.0 * math.log(abs(t)) - log_den) if t != 0.0 else -math.inf
    if log_y == -math.inf:
        return math.log(0.5)
    return math.log(0.5) + log_betainc(0.5 * df, 0.5, log_x, log_y)
