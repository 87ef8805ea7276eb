"""Maximum likelihood for grouped binary dose-response data.

Fisher scoring on the binomial log-likelihood of pi = F(beta0 + beta1 x),
with step halving whenever a step lowers the likelihood or leaves the link
domain.  The fitted coefficients are the plug-in values that localize a
D-optimal design.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import linalg
from .errors import DataFormatError, DomainError, SeparationError, SingularDesignError, ValidationError
from .links import Exponential, Link

WALD_Z = 1.96
SEPARATION_GUARD = 1e4


@dataclass(frozen=True)
class Dataset:
    """Rows of (dose, trials, events)."""

    doses: tuple[float, ...]
    trials: tuple[int, ...]
    events: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.doses) == len(self.trials) == len(self.events)):
            raise ValidationError("doses, trials and events must have equal length")
        for i, (x, n, y) in enumerate(zip(self.doses, self.trials, self.events)):
            if not math.isfinite(x):
                raise ValidationError(f"row {i}: dose must be finite")
            if int(n) != n or n < 1:
                raise ValidationError(f"row {i}: trials must be a positive integer, got {n!r}")
            if int(y) != y or not 0 <= y <= n:
                raise ValidationError(f"row {i}: events must be an integer in [0, trials], got {y!r}")
        if len(set(self.doses)) < 2:
            raise ValidationError("at least two distinct doses are needed to identify the slope")
        object.__setattr__(self, "doses", tuple(float(x) for x in self.doses))
        object.__setattr__(self, "trials", tuple(int(n) for n in self.trials))
        object.__setattr__(self, "events", tuple(int(y) for y in self.events))

    def scaled(self, factor: float) -> "Dataset":
        """Doses multiplied by ``factor`` (e.g. 0.001 to go from uM to mM)."""
        if not (math.isfinite(factor) and factor > 0.0):
            raise ValidationError(f"dose scale must be positive, got {factor!r}")
        return Dataset(tuple(x * factor for x in self.doses), self.trials, self.events)

    @classmethod
    def from_csv(cls, path: str | Path) -> "Dataset":
        """Read a ``dose,trials,events`` CSV file."""
        return cls.from_text(Path(path).read_text())

    @classmethod
    def from_text(cls, text: str) -> "Dataset":
        """Parse ``dose,trials,events`` CSV text.  Malformed rows name their line."""
        rows = list(csv.reader(io.StringIO(text)))
        rows = [(i + 1, r) for i, r in enumerate(rows) if any(cell.strip() for cell in r)]
        if not rows:
            raise DataFormatError("data file is empty")
        line, header = rows[0]
        if [h.strip().lower() for h in header] != ["dose", "trials", "events"]:
            raise DataFormatError(f"line {line}: expected header 'dose,trials,events', got {','.join(header)!r}")
        doses, trials, events = [], [], []
        for line, r in rows[1:]:
            if len(r) != 3:
                raise DataFormatError(f"line {line}: expected 3 fields, got {len(r)}")
            try:
                x = float(r[0])
                n = int(r[1])
                y = int(r[2])
            except ValueError as exc:
                raise DataFormatError(f"line {line}: {exc}") from exc
            if not math.isfinite(x) or n < 1 or not 0 <= y <= n:
                raise DataFormatError(f"line {line}: need finite dose, trials >= 1 and 0 <= events <= trials")
            doses.append(x)
            trials.append(n)
            events.append(y)
        if not doses:
            raise DataFormatError("data file has a header but no rows")
        return cls(tuple(doses), tuple(trials), tuple(events))

    def to_csv(self) -> str:
        lines = ["dose,trials,events"]
        lines += [f"{x!r},{n},{y}" for x, n, y in zip(self.doses, self.trials, self.events)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FitResult:
    beta0: float
    beta1: float
    se: tuple[float, float]
    loglik: float
    converged: bool
    iterations: int
    score_norm: float

    @property
    def beta(self) -> tuple[float, float]:
        return (self.beta0, self.beta1)

    def ci(self, z: float = WALD_Z) -> tuple[tuple[float, float], tuple[float, float]]:
        return tuple((b - z * s, b + z * s) for b, s in zip(self.beta, self.se))

    def to_dict(self) -> dict:
        (l0, h0), (l1, h1) = self.ci()
        return {
            "beta0": self.beta0,
            "beta1": self.beta1,
            "se": list(self.se),
            "ci95": {"beta0": [l0, h0], "beta1": [l1, h1]},
            "loglik": self.loglik,
            "converged": self.converged,
            "iterations": self.iterations,
            "score_norm": self.score_norm,
        }


def predict(link: Link, beta: Sequence[float], x: float) -> float:
    """F(beta0 + beta1 x)."""
    b0, b1 = beta
    if b1 == 0.0:
        raise ValidationError("beta1 must be non-zero")
    return link.cdf(b0 + b1 * x)


def _separated(data: Dataset) -> bool:
    """Complete or quasi-complete separation of grouped data along the dose."""
    by_dose: dict[float, list[int]] = {}
    for x, n, y in zip(data.doses, data.trials, data.events):
        acc = by_dose.setdefault(x, [0, 0])
        acc[0] += n
        acc[1] += y
    groups = [by_dose[x] for x in sorted(by_dose)]
    for seq in (groups, groups[::-1]):
        first_event = next((i for i, (n, y) in enumerate(seq) if y > 0), len(seq))
        last_miss = max((i for i, (n, y) in enumerate(seq) if y < n), default=-1)
        if first_event >= last_miss:
            return True
    return False


def loglik(data: Dataset, link: Link, beta: Sequence[float]) -> float:
    b0, b1 = beta
    total = []
    for x, n, y in zip(data.doses, data.trials, data.events):
        e = b0 + b1 * x
        term = math.lgamma(n + 1) - math.lgamma(y + 1) - math.lgamma(n - y + 1)
        if y:
            term += y * link.log_cdf(e)
        if n - y:
            term += (n - y) * link.log_sf(e)
        total.append(term)
    return math.fsum(total)


def score_and_information(data: Dataset, link: Link, beta: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Score vector and expected information at beta.

    Uses (y - n pi) f / (F S) = y f/F - (n - y) f/S to avoid subtracting
    nearly equal counts.
    """
    b0, b1 = beta
    u0, u1, i00, i01, i11 = [], [], [], [], []
    for x, n, y in zip(data.doses, data.trials, data.events):
        e = b0 + b1 * x
        hl, hs = link.hazards(e)
        r = y * hl - (n - y) * hs
        w = n * link.weight(e)
        u0.append(r)
        u1.append(r * x)
        i00.append(w)
        i01.append(w * x)
        i11.append(w * x * x)
    u = np.array([math.fsum(u0), math.fsum(u1)])
    info = np.array([[math.fsum(i00), math.fsum(i01)], [math.fsum(i01), math.fsum(i11)]])
    return u, info


def _safe_loglik(data: Dataset, link: Link, beta) -> float:
    try:
        return loglik(data, link, beta)
    except DomainError:
        return -math.inf


def _start(data: Dataset, link: Link) -> np.ndarray:
    rate = sum(data.events) / sum(data.trials)
    rate = min(max(rate, 0.01), 0.99)
    b1 = 1e-3
    b0 = link.ppf(rate)
    if isinstance(link, Exponential):
        need = link.eta_low + 1e-3 - min(b1 * x for x in data.doses)
        b0 = max(b0, need)
    return np.array([b0, b1])


def fit_mle(data: Dataset, link: Link, max_iter: int = 100, tol: float = 1e-10) -> FitResult:
    """Fisher scoring with step halving.

    Converged means the score norm fell to ``tol``.  Hitting ``max_iter``
    (or a step that cannot be improved by halving) returns
    ``converged=False`` rather than raising.
    """
    if _separated(data):
        raise SeparationError("doses separate events from non-events; the MLE does not exist")
    sd = float(np.std(data.doses))
    beta = _start(data, link)
    ll = _safe_loglik(data, link, beta)
    if ll == -math.inf:
        raise DomainError(f"starting values {beta.tolist()} leave the {link.name} domain")

    converged = False
    it = 0
    u, info = score_and_information(data, link, beta)
    for it in range(1, max_iter + 1):
        if float(np.linalg.norm(u)) <= tol:
            converged = True
            it -= 1
            break
        try:
            step = linalg.inv(info) @ u
        except SingularDesignError:
            break
        t, accepted = 1.0, False
        while t > 1e-12:
            cand = beta + t * step
            ll_c = _safe_loglik(data, link, cand)
            if ll_c >= ll - 1e-12 * abs(ll):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        beta, ll = cand, ll_c
        if abs(beta[1]) * sd > SEPARATION_GUARD:
            raise SeparationError(f"slope diverged (|beta1| sd(x) = {abs(beta[1]) * sd:.3g})")
        u, info = score_and_information(data, link, beta)
    else:
        converged = float(np.linalg.norm(u)) <= tol
        it = max_iter

    unorm = float(np.linalg.norm(u))
    converged = converged or unorm <= tol
    try:
        cov = linalg.inv(info)
        se = (math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1]))
    except SingularDesignError:
        se = (math.inf, math.inf)
    return FitResult(float(beta[0]), float(beta[1]), se, ll, converged, it, unorm)
