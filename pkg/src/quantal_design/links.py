"""Link families for binary regression.

A link is the distribution F that maps the linear predictor eta to the
response probability pi = F(eta).  Each family exposes the density f, the
CDF F, the survival S = 1 - F, the log-derivative f'/f, the design weight
omega = f^2 / (F S) and the W-function 2 f'/f - f/F + f/S.

All evaluations are scalar.  Tails are handled in log space: F and S are
never obtained by subtracting the other from one, and omega is assembled as
``exp(2 log f - log F - log S)``.

Symmetric families define ``log_cdf(eta)`` as ``log_sf(-eta)`` literally, so
reflection identities hold bit-for-bit.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from statistics import NormalDist

from . import _special
from .errors import DomainError, NumericalRangeError, ValidationError

#: |eta| beyond this is rejected rather than silently overflowing.
ETA_GUARD = 700.0

#: Default lower bound on eta for the exponential (one-hit) link.
DEFAULT_ETA_LOW = 0.5

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class EtaDomain:
    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValidationError(f"empty eta domain [{self.lower}, {self.upper}]")

    def __contains__(self, eta: float) -> bool:
        return self.lower <= eta <= self.upper


def _softplus(t: float) -> float:
    """log(1 + e^t) without overflow."""
    if t > 0.0:
        return t + math.log1p(math.exp(-t))
    return math.log1p(math.exp(t))


class Link(ABC):
    """Base class; subclasses implement the unchecked ``_`` methods."""

    name: str = ""
    symmetric: bool = False

    @property
    def domain(self) -> EtaDomain:
        return EtaDomain()

    @property
    def spec(self) -> str:
        """Selection string accepted by :func:`parse_link`."""
        return self.name

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.spec == other.spec

    def __hash__(self) -> int:
        return hash(self.spec)

    def check(self, eta: float) -> float:
        eta = float(eta)
        if not math.isfinite(eta):
            raise DomainError(f"{self.name}: non-finite eta {eta!r}")
        if abs(eta) > ETA_GUARD:
            raise DomainError(f"{self.name}: |eta| = {abs(eta):g} exceeds the overflow guard {ETA_GUARD:g}")
        if eta not in self.domain:
            d = self.domain
            raise DomainError(f"{self.name}: eta = {eta:g} outside domain [{d.lower:g}, {d.upper:g}]")
        return eta

    # -- unchecked primitives ------------------------------------------------

    @abstractmethod
    def _log_pdf(self, eta: float) -> float: ...

    @abstractmethod
    def _cdf(self, eta: float) -> float: ...

    @abstractmethod
    def _sf(self, eta: float) -> float: ...

    @abstractmethod
    def _log_cdf(self, eta: float) -> float: ...

    @abstractmethod
    def _log_sf(self, eta: float) -> float: ...

    @abstractmethod
    def _score(self, eta: float) -> float:
        """f'(eta) / f(eta)."""

    @abstractmethod
    def _ppf(self, p: float) -> float: ...

    # -- public, domain-checked ----------------------------------------------

    def pdf(self, eta: float) -> float:
        return math.exp(self._log_pdf(self.check(eta)))

    def log_pdf(self, eta: float) -> float:
        return self._log_pdf(self.check(eta))

    def cdf(self, eta: float) -> float:
        return self._cdf(self.check(eta))

    def sf(self, eta: float) -> float:
        return self._sf(self.check(eta))

    def log_cdf(self, eta: float) -> float:
        return self._log_cdf(self.check(eta))

    def log_sf(self, eta: float) -> float:
        return self._log_sf(self.check(eta))

    def pdf_deriv(self, eta: float) -> float:
        eta = self.check(eta)
        return self._score(eta) * math.exp(self._log_pdf(eta))

    def score(self, eta: float) -> float:
        return self._score(self.check(eta))

    def log_weight(self, eta: float) -> float:
        eta = self.check(eta)
        lw = 2.0 * self._log_pdf(eta) - self._log_cdf(eta) - self._log_sf(eta)
        if not math.isfinite(lw):
            raise NumericalRangeError(f"{self.name}: log weight not finite at eta = {eta:g}")
        return lw

    def weight(self, eta: float) -> float:
        """omega = f^2 / (F S).  May underflow to 0.0 deep in a tail."""
        return math.exp(self.log_weight(eta))

    def hazards(self, eta: float) -> tuple[float, float]:
        """(f/F, f/S), each formed as a difference of logs."""
        eta = self.check(eta)
        lf = self._log_pdf(eta)
        return math.exp(lf - self._log_cdf(eta)), math.exp(lf - self._log_sf(eta))

    def w(self, eta: float) -> float:
        """W(eta) = 2 f'/f - f/F + f/S."""
        eta = self.check(eta)
        lf = self._log_pdf(eta)
        lo = math.exp(lf - self._log_cdf(eta))
        hi = math.exp(lf - self._log_sf(eta))
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise NumericalRangeError(f"{self.name}: W not finite at eta = {eta:g}")
        return 2.0 * self._score(eta) - lo + hi

    def ppf(self, p: float) -> float:
        """Quantile F^{-1}(p) for 0 < p < 1."""
        if not 0.0 < p < 1.0:
            raise ValidationError(f"probability {p!r} outside (0, 1)")
        return self._ppf(p)


class _SymmetricLink(Link):
    symmetric = True

    def _cdf(self, eta):
        return self._sf(-eta)

    def _log_cdf(self, eta):
        return self._log_sf(-eta)


class Logit(_SymmetricLink):
    name = "logit"

    def _log_pdf(self, eta):
        return -_softplus(-eta) - _softplus(eta)

    def _sf(self, eta):
        if eta >= 0.0:
            e = math.exp(-eta)
            return e / (1.0 + e)
        return 1.0 / (1.0 + math.exp(eta))

    def _log_sf(self, eta):
        return -_softplus(eta)

    def _score(self, eta):
        return -math.tanh(0.5 * eta)

    def _ppf(self, p):
        return math.log(p) - math.log1p(-p)


class Probit(_SymmetricLink):
    name = "probit"

    def _log_pdf(self, eta):
        return _special.log_norm_pdf(eta)

    def _sf(self, eta):
        return _special.norm_sf(eta)

    def _log_sf(self, eta):
        return _special.log_norm_sf(eta)

    def _score(self, eta):
        return -eta

    def _ppf(self, p):
        return NormalDist().inv_cdf(p)


class Laplace(_SymmetricLink):
    name = "laplace"

    def _log_pdf(self, eta):
        return -abs(eta) - _LN2

    def _sf(self, eta):
        if eta >= 0.0:
            return 0.5 * math.exp(-eta)
        return 1.0 - 0.5 * math.exp(eta)

    def _log_sf(self, eta):
        if eta >= 0.0:
            return -eta - _LN2
        return math.log1p(-0.5 * math.exp(eta))

    def _score(self, eta):
        # sgn(0) := 0 keeps W odd through the kink.
        if eta > 0.0:
            return -1.0
        if eta < 0.0:
            return 1.0
        return 0.0

    def _ppf(self, p):
        if p < 0.5:
            return math.log(2.0 * p)
        return -math.log(2.0 * (1.0 - p))


class Cloglog(Link):
    """Gumbel (minimum) extreme value: F = 1 - exp(-e^eta)."""

    name = "cloglog"

    def _log_pdf(self, eta):
        return eta - math.exp(eta)

    def _cdf(self, eta):
        return -math.expm1(-math.exp(eta))

    def _sf(self, eta):
        return math.exp(-math.exp(eta))

    def _log_cdf(self, eta):
        t = math.exp(eta)
        if t > 1.0:
            return math.log1p(-math.exp(-t))
        return math.log(-math.expm1(-t))

    def _log_sf(self, eta):
        return -math.exp(eta)

    def _score(self, eta):
        return 1.0 - math.exp(eta)

    def _ppf(self, p):
        return math.log(-math.log1p(-p))


class StudentT(_SymmetricLink):
    """Student t with ``df`` degrees of freedom; tails via the incomplete beta."""

    name = "student-t"

    def __init__(self, df: float):
        df = float(df)
        if not (math.isfinite(df) and df > 0.0):
            raise ValidationError(f"Student t degrees of freedom must be positive, got {df!r}")
        self.df = df
        self._log_norm = (
            math.lgamma(0.5 * (df + 1.0)) - math.lgamma(0.5 * df) - 0.5 * math.log(df * math.pi)
        )

    @property
    def spec(self) -> str:
        return f"student-t:{self.df:g}"

    def __repr__(self) -> str:
        return f"StudentT(df={self.df:g})"

    def _log_pdf(self, eta):
        return self._log_norm - 0.5 * (self.df + 1.0) * math.log1p(eta * eta / self.df)

    def _log_sf(self, eta):
        log_tail = _special.log_student_t_tail(eta, self.df)
        if eta >= 0.0:
            return log_tail
        return math.log1p(-math.exp(log_tail))

    def _sf(self, eta):
        return math.exp(self._log_sf(eta))

    def _score(self, eta):
        k = self.df
        return -(k + 1.0) * eta / (k + eta * eta)

    def _ppf(self, p):
        # Monotone CDF, so plain bisection on an expanding bracket is safe.
        lo, hi = -1.0, 1.0
        while self._cdf(lo) > p:
            lo *= 2.0
        while self._cdf(hi) < p:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self._cdf(mid) < p:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * max(1.0, abs(mid)):
                break
        return 0.5 * (lo + hi)


class Exponential(Link):
    """One-hit model: f = e^-eta on eta >= eta_low, F = 1 - e^-eta."""

    name = "exponential"

    def __init__(self, eta_low: float = DEFAULT_ETA_LOW):
        eta_low = float(eta_low)
        if not (math.isfinite(eta_low) and eta_low >= 0.0):
            raise ValidationError(f"exponential eta_low must be >= 0, got {eta_low!r}")
        self.eta_low = eta_low

    @property
    def domain(self) -> EtaDomain:
        return EtaDomain(self.eta_low, math.inf)

    @property
    def spec(self) -> str:
        if self.eta_low == DEFAULT_ETA_LOW:
            return self.name
        return f"exponential:{self.eta_low:g}"

    def __repr__(self) -> str:
        return f"Exponential(eta_low={self.eta_low:g})"

    def _log_pdf(self, eta):
        return -eta

    def _cdf(self, eta):
        return -math.expm1(-eta)

    def _sf(self, eta):
        return math.exp(-eta)

    def _log_cdf(self, eta):
        if eta == 0.0:
            return -math.inf
        if eta > 1.0:
            return math.log1p(-math.exp(-eta))
        return math.log(-math.expm1(-eta))

    def _log_sf(self, eta):
        return -eta

    def _score(self, eta):
        return -1.0

    def _ppf(self, p):
        return -math.log1p(-p)


def parse_link(text: str) -> Link:
    """Build a link from its selection string.

    Accepted: ``logit``, ``probit``, ``laplace``, ``cloglog``,
    ``student-t:<df>``, ``exponential`` and ``exponential:<eta_low>``.
    """
    if isinstance(text, Link):
        return text
    raw = str(text).strip().lower()
    name, _, arg = raw.partition(":")
    simple = {"logit": Logit, "probit": Probit, "laplace": Laplace, "cloglog": Cloglog}
    if name in simple:
        if arg:
            raise ValidationError(f"link {name!r} takes no argument")
        return simple[name]()
    try:
        if name in ("student-t", "studentt", "t"):
            if not arg:
                raise ValidationError("student-t link needs degrees of freedom, e.g. 'student-t:2'")
            return StudentT(float(arg))
        if name == "exponential":
            return Exponential(float(arg)) if arg else Exponential()
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad link argument in {text!r}") from exc
    raise ValidationError(f"unknown link {text!r}")


# ---------------------------------------------------------------------------
# Functional interface
# ---------------------------------------------------------------------------

def density(link: Link, eta: float) -> float:
    return link.pdf(eta)


def cdf(link: Link, eta: float) -> float:
    return link.cdf(eta)


def survival(link: Link, eta: float) -> float:
    return link.sf(eta)


def density_derivative(link: Link, eta: float) -> float:
    return link.pdf_deriv(eta)


def weight(link: Link, eta: float) -> float:
    return link.weight(eta)


def w_function(link: Link, eta: float) -> float:
    return link.w(eta)


ALL_LINK_SPECS = ("logit", "probit", "laplace", "cloglog", "student-t:2", "exponential")
