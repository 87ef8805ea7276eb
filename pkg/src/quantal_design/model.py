"""Designs, models and their Fisher information.

Every information matrix here factors as ``sum_i p_i g(x_i) g(x_i)^T`` for a
per-point vector g, which :func:`point_vector` returns.  The two-parameter
model uses ``g = sqrt(omega) z`` with ``z = d eta / d beta``.  The
three-parameter model pi = c + (1 - c) F(eta) supports two forms:

``"linearized"`` (default)
    ``g = (S, (1 - c) sqrt(omega) z)``.  This is the matrix whose D-optimality
    sensitivity function is ``g^T M^-1 g - 3``, and the one that reproduces
    the reference three-parameter logit designs.
``"printed"``
    ``g = (sqrt(S/F), (1 - c) sqrt(omega) z)``, i.e. the per-point matrix
    ``[[S/F, (1-c) f/F z^T], [(1-c) f/F z, (1-c)^2 f^2/(F S) z z^T]]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import ClassVar, Sequence, Union

import numpy as np

from . import linalg
from .errors import DomainError, InfeasibleError, InversionError, SingularDesignError, ValidationError
from .links import Link, parse_link

WEIGHT_SUM_TOL = 1e-12

# ---------------------------------------------------------------------------
# Predictors
# ---------------------------------------------------------------------------


def _check_beta1(beta1: float) -> None:
    if not math.isfinite(beta1) or beta1 == 0.0:
        raise ValidationError(f"beta1 must be finite and non-zero, got {beta1!r}")


@dataclass(frozen=True)
class Linear:
    """eta = beta0 + beta1 x."""

    beta0: float
    beta1: float
    kind: ClassVar[str] = "linear"

    def __post_init__(self):
        _check_beta1(self.beta1)

    def eta(self, x: float) -> float:
        return self.beta0 + self.beta1 * x

    def regressor(self, x: float) -> tuple[float, float]:
        return (1.0, float(x))

    def inverse(self, eta: float) -> float:
        return (eta - self.beta0) / self.beta1

    def to_dict(self) -> dict:
        return {"kind": self.kind, "beta0": self.beta0, "beta1": self.beta1}


@dataclass(frozen=True)
class Power:
    """Weibull-type predictor eta = beta0 + beta1 x^alpha on x >= 0."""

    beta0: float
    beta1: float
    alpha: float
    kind: ClassVar[str] = "power"

    def __post_init__(self):
        _check_beta1(self.beta1)
        if not (math.isfinite(self.alpha) and self.alpha > 0.0):
            raise ValidationError(f"alpha must be positive, got {self.alpha!r}")

    def _check_x(self, x: float) -> None:
        if x < 0.0:
            raise DomainError(f"power predictor needs x >= 0, got {x:g}")

    def eta(self, x: float) -> float:
        self._check_x(x)
        return self.beta0 + self.beta1 * x**self.alpha

    def regressor(self, x: float) -> tuple[float, float]:
        self._check_x(x)
        return (1.0, float(x) ** self.alpha)

    def inverse(self, eta: float) -> float:
        radicand = (eta - self.beta0) / self.beta1
        if radicand < 0.0:
            raise DomainError(
                f"eta = {eta:g} is not reachable by beta0 + beta1 x^alpha with x >= 0"
            )
        return radicand ** (1.0 / self.alpha)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "beta0": self.beta0, "beta1": self.beta1, "alpha": self.alpha}


@dataclass(frozen=True)
class LinearWithOffset:
    """eta = beta0 + beta1 x + 1/(|x| + 1).  The offset carries no parameter."""

    beta0: float
    beta1: float
    kind: ClassVar[str] = "offset"

    def __post_init__(self):
        _check_beta1(self.beta1)

    def eta(self, x: float) -> float:
        return self.beta0 + self.beta1 * x + 1.0 / (abs(x) + 1.0)

    def regressor(self, x: float) -> tuple[float, float]:
        return (1.0, float(x))

    def inverse(self, eta: float) -> float:
        raise InversionError("the offset predictor has no closed-form inverse; use particle swarm search")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "beta0": self.beta0, "beta1": self.beta1}


Predictor = Union[Linear, Power, LinearWithOffset]


def eta(predictor: Predictor, x: float) -> float:
    return predictor.eta(x)


def regressor(predictor: Predictor, x: float) -> tuple[float, float]:
    return predictor.regressor(x)


# ---------------------------------------------------------------------------
# Design space and designs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DesignSpace:
    lower: float
    upper: float

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValidationError(f"design space bounds must be finite, got [{lo}, {hi}]")
        if not lo < hi:
            raise InfeasibleError(f"design space [{lo:g}, {hi:g}] is empty or degenerate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __contains__(self, x: float) -> bool:
        return self.lower <= x <= self.upper

    def grid(self, n: int) -> np.ndarray:
        if n < 2:
            raise ValidationError("grid needs at least 2 points")
        return np.linspace(self.lower, self.upper, n)

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper}


@dataclass(frozen=True)
class Design:
    """Approximate design: support points with weights on a design space.

    Points are sorted on construction and exact duplicates are merged by
    summing their weights.
    """

    points: tuple[float, ...]
    weights: tuple[float, ...]
    space: DesignSpace

    def __post_init__(self):
        pts = [float(x) for x in self.points]
        wts = [float(p) for p in self.weights]
        if not pts:
            raise ValidationError("a design needs at least one point")
        if len(pts) != len(wts):
            raise ValidationError(f"{len(pts)} points but {len(wts)} weights")
        if not all(math.isfinite(v) for v in pts + wts):
            raise ValidationError("design points and weights must be finite")
        if any(p < 0.0 for p in wts):
            raise ValidationError(f"negative design weight in {wts}")
        total = math.fsum(wts)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValidationError(f"design weights sum to {total!r}, not 1")
        outside = [x for x in pts if x not in self.space]
        if outside:
            raise ValidationError(
                f"design points {outside} outside the design space [{self.space.lower:g}, {self.space.upper:g}]"
            )
        merged: dict[float, float] = {}
        for x, p in sorted(zip(pts, wts)):
            merged[x] = merged.get(x, 0.0) + p
        object.__setattr__(self, "points", tuple(merged))
        object.__setattr__(self, "weights", tuple(merged.values()))

    @classmethod
    def equal(cls, points: Sequence[float], space: DesignSpace) -> "Design":
        k = len(points)
        return cls(tuple(points), (1.0 / k,) * k, space)

    @property
    def k(self) -> int:
        return len(self.points)

    def to_dict(self) -> dict:
        return {"points": list(self.points), "weights": list(self.weights), "space": self.space.to_dict()}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict, space: DesignSpace | None = None) -> "Design":
        try:
            points = data["points"]
            weights = data.get("weights")
            if weights is None:
                weights = [1.0 / len(points)] * len(points)
            if space is None:
                s = data["space"]
                space = DesignSpace(s["lower"], s["upper"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed design document: missing {exc}") from exc
        return cls(tuple(points), tuple(weights), space)

    @classmethod
    def from_json(cls, text: str) -> "Design":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"design is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

THREE_PARAM_FORMS = ("linearized", "printed")


@dataclass(frozen=True)
class TwoParamModel:
    link: Link
    predictor: Predictor
    n_params: ClassVar[int] = 2

    def __post_init__(self):
        object.__setattr__(self, "link", parse_link(self.link))

    def to_dict(self) -> dict:
        return {"link": self.link.spec, "predictor": self.predictor.to_dict()}


@dataclass(frozen=True)
class ThreeParamModel:
    """pi = c + (1 - c) F(beta0 + beta1 x) with background rate c."""

    link: Link
    predictor: Linear
    c: float
    form: str = field(default="linearized")
    n_params: ClassVar[int] = 3

    def __post_init__(self):
        object.__setattr__(self, "link", parse_link(self.link))
        if not isinstance(self.predictor, Linear):
            raise ValidationError("the three-parameter model supports the linear predictor only")
        if not (0.0 <= self.c < 1.0):
            raise ValidationError(f"background rate c must lie in [0, 1), got {self.c!r}")
        if self.form not in THREE_PARAM_FORMS:
            raise ValidationError(f"unknown information form {self.form!r}; choose from {THREE_PARAM_FORMS}")

    def to_dict(self) -> dict:
        return {"link": self.link.spec, "predictor": self.predictor.to_dict(), "c": self.c, "form": self.form}


Model = Union[TwoParamModel, ThreeParamModel]


def eta_range(predictor: Predictor, space: DesignSpace) -> tuple[float, float]:
    """Range of eta over the design space."""
    if isinstance(predictor, LinearWithOffset):
        xs = np.concatenate([space.grid(2049), [0.0] if 0.0 in space else []])
        etas = [predictor.eta(float(x)) for x in xs]
        return min(etas), max(etas)
    ends = [predictor.eta(space.lower), predictor.eta(space.upper)]
    return min(ends), max(ends)


def check_space(model: Model, space: DesignSpace) -> None:
    """Raise DomainError if some x in the space maps outside the link domain."""
    lo, hi = eta_range(model.predictor, space)
    dom = model.link.domain
    if lo < dom.lower or hi > dom.upper:
        raise DomainError(
            f"design space [{space.lower:g}, {space.upper:g}] maps to eta in [{lo:g}, {hi:g}], "
            f"outside the {model.link.name} domain [{dom.lower:g}, {dom.upper:g}]"
        )


def point_vector(model: Model, x: float) -> np.ndarray:
    """g(x) with per-point information g g^T."""
    link, pred = model.link, model.predictor
    try:
        e = pred.eta(x)
        half_lw = 0.5 * link.log_weight(e)
        z0, z1 = pred.regressor(x)
        if isinstance(model, TwoParamModel):
            s = math.exp(half_lw)
            return np.array([s * z0, s * z1])
        s = (1.0 - model.c) * math.exp(half_lw)
        if model.form == "printed":
            head = math.exp(0.5 * (link.log_sf(e) - link.log_cdf(e)))
        else:
            head = link.sf(e)
        return np.array([head, s * z0, s * z1])
    except DomainError as exc:
        raise type(exc)(f"at design point x = {x:g}: {exc}") from exc


def _point_matrix(model: Model, design: Design) -> np.ndarray:
    return np.array([point_vector(model, x) for x in design.points])


def information(model: Model, design: Design) -> np.ndarray:
    """Fisher information of a design, 2x2 or 3x3 according to the model."""
    g = _point_matrix(model, design)
    p = np.asarray(design.weights)
    m = (g.T * p) @ g
    return 0.5 * (m + m.T)


def info_matrix(model: TwoParamModel, design: Design) -> np.ndarray:
    if not isinstance(model, TwoParamModel):
        raise ValidationError("info_matrix expects a two-parameter model")
    return information(model, design)


def info_matrix_3p(model: ThreeParamModel, design: Design) -> np.ndarray:
    if not isinstance(model, ThreeParamModel):
        raise ValidationError("info_matrix_3p expects a three-parameter model")
    return information(model, design)


log_det = linalg.log_det


def d_criterion(model: Model, design: Design) -> float:
    """log det M(design); -inf for singular designs."""
    return linalg.log_det(information(model, design))


def det_3p_tilted(model: ThreeParamModel, points: Sequence[float]) -> float:
    """det M for three equally weighted points via the tilted-measure identity.

    With per-point vectors ``sqrt(a_i) (1, xt_i)``,
    ``det M = (sum a_i)^3 det Var_q(xt) / 27`` where q_i = a_i / sum a_j,
    which equals ``prod(a_i) D^2 / 27`` with D the determinant of the rows
    ``(1, xt_i)``.  The second form is the one evaluated.
    For the printed form a_i = S_i/F_i and xt_i = (1 - c)(f_i/S_i) z_i.
    """
    if not isinstance(model, ThreeParamModel):
        raise ValidationError("det_3p_tilted expects a three-parameter model")
    if len(points) != 3:
        raise ValidationError(f"det_3p_tilted needs exactly 3 points, got {len(points)}")
    if len(set(float(x) for x in points)) < 3:
        return 0.0
    link, pred, c = model.link, model.predictor, model.c
    log_a = np.empty(3)
    xt = np.empty((3, 2))
    for i, x in enumerate(points):
        x = float(x)
        try:
            e = pred.eta(x)
            lf, lF, lS = link.log_pdf(e), link.log_cdf(e), link.log_sf(e)
        except DomainError as exc:
            raise type(exc)(f"at design point x = {x:g}: {exc}") from exc
        # xt = (1 - c) sqrt(omega) z / g0, assembled from logs.
        if model.form == "printed":
            log_a[i] = lS - lF
            log_scale = lf - lS
        else:
            log_a[i] = 2.0 * lS
            log_scale = lf - 0.5 * (lF + lS) - lS
        scale = math.exp(log_scale) if log_scale < 700.0 else math.inf
        xt[i] = (1.0 - c) * scale * np.asarray(pred.regressor(x))
    if not np.all(np.isfinite(xt)):
        # Too deep in a tail for the tilted form; use the direct determinant.
        return linalg.det(information(model, Design.equal(tuple(points), _hull(points))))
    # det M = det(G)^2 / 27 with rows sqrt(a_i) (1, xt_i).  Expanding det G
    # as one fsum avoids the cancellation of forming Var_q(xt) first.
    (u0, v0), (u1, v1), (u2, v2) = xt
    cross = math.fsum([u1 * v2, -v1 * u2, -u0 * v2, v0 * u2, u0 * v1, -v0 * u1])
    if cross == 0.0:
        return 0.0
    return float(math.exp(math.fsum(log_a) + 2.0 * math.log(abs(cross))) / 27.0)


def _hull(points: Sequence[float]) -> DesignSpace:
    return DesignSpace(min(points), max(points))


def ds_criterion(model: ThreeParamModel, design: Design) -> float:
    """Schur complement of the (c, c) entry: information about c alone."""
    return linalg.schur_first(info_matrix_3p(model, design))


def d_efficiency(model: Model, design: Design, reference: Design) -> float:
    """(det M(design) / det M(reference))^(1/d)."""
    ref = d_criterion(model, reference)
    if ref == -math.inf:
        raise SingularDesignError("reference design has a singular information matrix")
    val = d_criterion(model, design)
    if val == -math.inf:
        return 0.0
    return math.exp((val - ref) / model.n_params)
