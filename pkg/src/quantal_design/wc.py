"""Two-point D-optimal designs from the WC stationarity equation.

For an equally weighted two-point design under a linear predictor,
``det M`` is proportional to ``omega(eta1) omega(eta2) (eta1 - eta2)^2``.
Differentiating the log in eta1 gives

    W(eta1) + 2 / (eta1 - eta2) = 0,   W = 2 f'/f - f/F + f/S.

Symmetric links admit the reduction eta2 = -eta1, leaving
``W(eta) + 1/eta = 0``.  Asymmetric links are solved through the pair
``W(eta1) + W(eta1 + 2/W(eta1)) = 0`` and ``eta2 = eta1 + 2/W(eta1)``.

The residuals have poles, so every solver scans for sign changes first,
bisects, and only then polishes with Newton steps.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import (
    DomainError,
    MultipleRootsWarning,
    NoRootError,
    PoleError,
    SingularWError,
    ValidationError,
)
from .links import Exponential, Link
from .model import Design, DesignSpace, Linear, LinearWithOffset, Power, Predictor

SYMMETRIC_BRACKET = (1e-6, 50.0)
SCAN_INTERVALS = 512
SYMMETRIC_SCAN_INTERVALS = 256


@dataclass(frozen=True)
class WcSolution:
    eta1: float
    eta2: float
    residual_norm: float
    bracket_used: tuple[float, float]
    # Other stationary pairs found in the bracket, best first.
    alternatives: tuple[tuple[float, float], ...] = field(default=())
    sign_change_intervals: tuple[tuple[float, float], ...] = field(default=())
    boundary: bool = False

    @property
    def etas(self) -> tuple[float, float]:
        return (self.eta1, self.eta2)

    def to_dict(self) -> dict:
        return {
            "eta1": self.eta1,
            "eta2": self.eta2,
            "residual_norm": self.residual_norm,
            "bracket": list(self.bracket_used),
            "alternatives": [list(a) for a in self.alternatives],
            "sign_change_intervals": [list(i) for i in self.sign_change_intervals],
            "boundary": self.boundary,
        }


def wc_residual(link: Link, eta1: float, eta2: float) -> float:
    """Left-hand side of the WC equation at (eta1, eta2)."""
    if eta1 == eta2:
        raise ValidationError("WC residual undefined for coincident points")
    return link.w(eta1) + 2.0 / (eta1 - eta2)


def two_point_log_det(link: Link, eta1: float, eta2: float) -> float:
    """log of omega1 omega2 (eta1 - eta2)^2, the unscaled two-point criterion."""
    if eta1 == eta2:
        return -math.inf
    return link.log_weight(eta1) + link.log_weight(eta2) + 2.0 * math.log(abs(eta1 - eta2))


# ---------------------------------------------------------------------------
# Scalar root machinery
# ---------------------------------------------------------------------------


def _safe(fn: Callable[[float], float], x: float) -> float:
    try:
        v = fn(x)
    except (DomainError, ZeroDivisionError, OverflowError, ValidationError):
        return math.nan
    return v if math.isfinite(v) else math.nan


def scan_sign_changes(
    fn: Callable[[float], float], lo: float, hi: float, n: int = SCAN_INTERVALS
) -> list[tuple[float, float]]:
    """Subintervals of [lo, hi] on which ``fn`` changes sign.

    Points where ``fn`` cannot be evaluated are skipped; an interval is only
    reported when both of its ends are finite.  Exact zeros at a grid point
    produce a degenerate interval (x, x).
    """
    xs = [lo + (hi - lo) * i / n for i in range(n + 1)]
    vals = [_safe(fn, x) for x in xs]
    out = []
    for i in range(n):
        a, b = vals[i], vals[i + 1]
        if math.isnan(a) or math.isnan(b):
            continue
        if a == 0.0:
            out.append((xs[i], xs[i]))
        elif a * b < 0.0:
            out.append((xs[i], xs[i + 1]))
    if not math.isnan(vals[-1]) and vals[-1] == 0.0:
        out.append((xs[-1], xs[-1]))
    return out


def bisect(fn: Callable[[float], float], a: float, b: float, xtol: float = 1e-12, maxiter: int = 200) -> float:
    """Bisection on a sign change; NaN if ``fn`` cannot be evaluated along the way (a pole)."""
    fa = _safe(fn, a)
    if fa == 0.0 or math.isnan(fa):
        return a if fa == 0.0 else math.nan
    for _ in range(maxiter):
        m = 0.5 * (a + b)
        fm = _safe(fn, m)
        if math.isnan(fm):
            return math.nan
        if fm == 0.0:
            return m
        if (fm < 0.0) == (fa < 0.0):
            a, fa = m, fm
        else:
            b = m
        if abs(b - a) <= xtol:
            break
    return 0.5 * (a + b)


def newton_polish(
    fn: Callable[[float], float], x: float, lo: float, hi: float, steps: int = 4
) -> float:
    """A few secant-derivative Newton steps, kept only while |fn| shrinks."""
    fx = abs(_safe(fn, x))
    if math.isnan(fx):
        return x
    for _ in range(steps):
        h = 1e-7 * max(1.0, abs(x))
        fp, fm = _safe(fn, x + h), _safe(fn, x - h)
        f0 = _safe(fn, x)
        if any(math.isnan(v) for v in (fp, fm, f0)):
            break
        d = (fp - fm) / (2 * h)
        if d == 0.0:
            break
        nx = x - f0 / d
        if not (lo <= nx <= hi):
            break
        fn_new = abs(_safe(fn, nx))
        if math.isnan(fn_new) or fn_new >= fx:
            break
        x, fx = nx, fn_new
    return x


def _roots(
    fn: Callable[[float], float], lo: float, hi: float, n: int, pole_tol: float = 1e-6
) -> tuple[list[float], list[tuple[float, float]]]:
    """All roots of ``fn`` in [lo, hi] found by scan + bisection + polish.

    Sign changes caused by poles are discarded: after bisection the residual
    there is large rather than small.
    """
    intervals = scan_sign_changes(fn, lo, hi, n)
    roots = []
    for a, b in intervals:
        r = a if a == b else bisect(fn, a, b)
        if math.isnan(r):
            continue
        r = newton_polish(fn, r, a, b) if a != b else r
        v = _safe(fn, r)
        if not math.isnan(v) and abs(v) <= pole_tol:
            roots.append(r)
    return roots, intervals


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------


def _symmetric_residual(link: Link) -> Callable[[float], float]:
    return lambda e: link.w(e) + 1.0 / e


def solve_symmetric(link: Link, bracket: tuple[float, float] = SYMMETRIC_BRACKET) -> float:
    """Positive root of W(eta) + 1/eta = 0 for a symmetric link.

    Returns eta* such that (+eta*, -eta*) is the best equally weighted
    two-point design.  When several roots exist the one with the larger
    two-point criterion wins.
    """
    if not link.symmetric:
        raise ValidationError(f"{link.name} is not symmetric; use solve_asymmetric")
    fn = _symmetric_residual(link)
    roots, _ = _roots(fn, bracket[0], bracket[1], SYMMETRIC_SCAN_INTERVALS, pole_tol=1e-9)
    if not roots:
        raise NoRootError(f"no root of the symmetric WC equation for {link.name} in {bracket}")
    return max(roots, key=lambda r: two_point_log_det(link, r, -r))


def _companion(link: Link, eta1: float) -> float:
    w1 = link.w(eta1)
    if w1 == 0.0:
        raise ZeroDivisionError
    return eta1 + 2.0 / w1


def _default_bracket(link: Link) -> tuple[float, float]:
    if isinstance(link, Exponential):
        return (link.eta_low, link.eta_low + 10.0)
    return (-10.0, 10.0)


def solve_asymmetric(
    link: Link, eta1_bracket: tuple[float, float] | None = None, n_intervals: int = SCAN_INTERVALS
) -> WcSolution:
    """Solve W(eta1) = -W(eta1 + 2/W(eta1)) and set eta2 = eta1 + 2/W(eta1).

    Scans ``eta1_bracket`` for sign changes of
    ``g(eta1) = W(eta1) + W(eta1 + 2/W(eta1))``, bisects each, and keeps the
    roots whose companion eta2 lies in the link domain.  Each root yields
    the pair with eta1 > eta2; duplicate pairs (a root and its companion
    both inside the bracket) are reported once.  With more than one distinct
    pair a :class:`MultipleRootsWarning` is issued and the pair with the
    largest two-point criterion is returned.
    """
    lo, hi = eta1_bracket if eta1_bracket is not None else _default_bracket(link)
    if not lo < hi:
        raise ValidationError(f"empty bracket {(lo, hi)}")
    dom = link.domain
    lo, hi = max(lo, dom.lower), min(hi, dom.upper)
    if not lo < hi:
        raise DomainError(f"bracket lies outside the {link.name} domain [{dom.lower:g}, {dom.upper:g}]")

    def g(e1: float) -> float:
        return link.w(e1) + link.w(_companion(link, e1))

    roots, intervals = _roots(g, lo, hi, n_intervals)
    pairs: list[tuple[float, float]] = []
    for r in roots:
        e2 = _companion(link, r)
        pair = (max(r, e2), min(r, e2))
        if any(abs(pair[0] - p[0]) < 1e-8 and abs(pair[1] - p[1]) < 1e-8 for p in pairs):
            continue
        pairs.append(pair)

    if not pairs:
        w_changes = scan_sign_changes(link.w, lo, hi, n_intervals)
        if w_changes:
            raise SingularWError(
                f"W changes sign inside {(lo, hi)} near {w_changes[0]} but no valid companion root exists"
            )
        msg = f"no WC root for {link.name} with eta1 in [{lo:g}, {hi:g}]"
        if intervals:
            msg += f"; sign changes at {intervals} are poles, not roots"
        raise NoRootError(msg)

    pairs.sort(key=lambda p: two_point_log_det(link, *p), reverse=True)
    if len(pairs) > 1:
        warnings.warn(
            f"{len(pairs)} stationary two-point designs for {link.name}; "
            f"sign-change intervals {intervals}; choosing the best by determinant",
            MultipleRootsWarning,
            stacklevel=2,
        )
    e1, e2 = pairs[0]
    resid = math.hypot(wc_residual(link, e1, e2), wc_residual(link, e2, e1))
    return WcSolution(e1, e2, resid, (lo, hi), tuple(pairs[1:]), tuple(intervals))


def solve_boundary(link: Link, eta_fixed: float, upper: float | None = None) -> WcSolution:
    """Optimal partner of a point held at ``eta_fixed`` (e.g. eta_low).

    Solves the single WC equation W(eta) + 2/(eta - eta_fixed) = 0 for
    eta > eta_fixed.  This is the stationarity condition when one support
    point sits on the boundary of the eta domain.
    """
    hi = upper if upper is not None else eta_fixed + 50.0
    lo = eta_fixed + 1e-6
    fn = lambda e: wc_residual(link, e, eta_fixed)
    roots, intervals = _roots(fn, lo, hi, SCAN_INTERVALS)
    if not roots:
        raise NoRootError(f"no boundary WC root for {link.name} above eta = {eta_fixed:g}")
    best = max(roots, key=lambda r: two_point_log_det(link, r, eta_fixed))
    resid = abs(fn(best))
    others = tuple((r, eta_fixed) for r in roots if r != best)
    return WcSolution(best, eta_fixed, resid, (lo, hi), others, tuple(intervals), boundary=True)


def solve(link: Link, bracket: tuple[float, float] | None = None) -> WcSolution:
    """Dispatch: symmetric reduction when available, the W system otherwise."""
    if link.symmetric and bracket is None:
        e = solve_symmetric(link)
        r = abs(wc_residual(link, e, -e))
        return WcSolution(e, -e, r, SYMMETRIC_BRACKET)
    return solve_asymmetric(link, bracket)


H_SERIES_CUTOFF = 1e-3
# Taylor coefficients of h about 0, from eta^1 upward; the series has
# radius ~1.59 (the pole), so at eta < 1e-3 seven terms reach 1e-21.
_H_SERIES = (2 / 3, 1 / 3, 13 / 45, 29 / 180, 373 / 3780, 173 / 2520, 4343 / 113400)


def h_function(eta: float, naive: bool = False) -> float:
    """W(eta) + W(eta + 2/W(eta)) for the one-hit link, in closed form.

    ``h = -1/(1 - e^-eta) - 1/(1 - exp(2 - 2 e^-eta - eta))``.

    Both terms blow up as eta -> 0+, with opposite signs, and their sum tends
    to 0 like 2 eta / 3.  The default evaluation uses the Taylor series
    below ``H_SERIES_CUTOFF`` and an ``expm1`` form above it, so it is
    accurate down to tiny eta.  ``naive=True`` evaluates the expression
    literally with ``exp``; in double precision that suffers catastrophic
    cancellation below eta ~ 1e-5 and shows spurious sign changes.
    """
    eta = float(eta)
    if not (math.isfinite(eta) and eta > 0.0):
        raise DomainError(f"h is defined for eta > 0, got {eta!r}")
    if not naive and eta < H_SERIES_CUTOFF:
        acc = 0.0
        for c in reversed(_H_SERIES):
            acc = acc * eta + c
        return acc * eta
    if naive:
        d1 = 1.0 - math.exp(-eta)
        d2 = 1.0 - math.exp(2.0 - 2.0 * math.exp(-eta) - eta)
    else:
        d1 = -math.expm1(-eta)
        # 2 - 2 e^-eta - eta = -2 expm1(-eta) - eta
        d2 = -math.expm1(-2.0 * math.expm1(-eta) - eta)
    if d2 == 0.0 or d1 == 0.0:
        raise PoleError(f"h has a pole at eta = {eta!r}")
    return -1.0 / d1 - 1.0 / d2


def design_from_eta(predictor: Predictor, etas: Sequence[float], space: DesignSpace | None = None) -> Design:
    """Equally weighted design at x_i = predictor^{-1}(eta_i).

    Without an explicit space the design lives on the smallest interval
    holding its points (widened by one unit in the last place if needed).
    """
    if isinstance(predictor, LinearWithOffset):
        predictor.inverse(etas[0])
    if not isinstance(predictor, (Linear, Power)):
        raise ValidationError(f"cannot invert predictor {predictor!r}")
    xs = [predictor.inverse(e) for e in etas]
    if space is None:
        lo, hi = min(xs), max(xs)
        if lo == hi:
            lo, hi = math.nextafter(lo, -math.inf), math.nextafter(hi, math.inf)
        space = DesignSpace(lo, hi)
    outside = [x for x in xs if x not in space]
    if outside:
        raise DomainError(
            f"WC points {outside} fall outside [{space.lower:g}, {space.upper:g}]; "
            "the constrained optimum needs particle swarm search"
        )
    return Design.equal(xs, space)
