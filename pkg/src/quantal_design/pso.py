"""Particle swarm search over weighted k-point designs.

Global-best PSO with constant inertia.  A particle for a k-point design is
the 2k-vector ``(x_1..x_k, l_1..l_k)``: support points clamped to the design
space and unconstrained weight logits decoded by softmax.  On every
iteration

    v <- w v + c1 r1 (pbest - x) + c2 r2 (gbest - x),   x <- clamp(x + v)

with r1, r2 uniform per coordinate.  A clamped coordinate has its velocity
zeroed.  Random numbers for iteration t come from their own stream, seeded
by (seed, t), so results do not depend on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InfeasibleError, ValidationError
from .model import (
    Design,
    DesignSpace,
    Model,
    ThreeParamModel,
    check_space,
    d_criterion,
    det_3p_tilted,
)

#: Weight logits live in [-LOGIT_BOUND, LOGIT_BOUND]; e^-40 is weight zero in practice.
LOGIT_BOUND = 20.0
#: Logits start in [-1, 1] so early designs are not dominated by one point.
LOGIT_INIT = 1.0
#: decode merges points closer than this fraction of the space width.
MERGE_FRACTION = 1e-3
DEFAULT_WEIGHT_TOL = 1e-3


@dataclass(frozen=True)
class PsoConfig:
    n_particles: int = 50
    n_iterations: int = 500
    c1: float = 0.5
    c2: float = 0.3
    w: float = 0.9
    seed: int = 0
    k_points: int | None = None

    def __post_init__(self):
        if int(self.n_particles) != self.n_particles or self.n_particles < 2:
            raise ValidationError(f"n_particles must be an integer >= 2, got {self.n_particles!r}")
        if int(self.n_iterations) != self.n_iterations or self.n_iterations < 1:
            raise ValidationError(f"n_iterations must be a positive integer, got {self.n_iterations!r}")
        for name in ("c1", "c2", "w"):
            if not getattr(self, name) > 0.0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.k_points is not None and (int(self.k_points) != self.k_points or self.k_points < 1):
            raise ValidationError(f"k_points must be a positive integer, got {self.k_points!r}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValidationError(f"seed must fit in 64 bits, got {self.seed!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PsoResult:
    design: Design
    value: float
    history: tuple[float, ...]
    config: PsoConfig
    evaluations: int

    def to_dict(self) -> dict:
        return {"value": self.value, "evaluations": self.evaluations, "config": self.config.to_dict()}


def _rng(seed: int, iteration: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(iteration,)))


def _swarm(
    fn: Callable[[np.ndarray], float],
    lower: np.ndarray,
    upper: np.ndarray,
    init_lower: np.ndarray,
    init_upper: np.ndarray,
    config: PsoConfig,
) -> tuple[np.ndarray, float, list[float], int]:
    """Maximize ``fn`` over the box [lower, upper]."""
    n, dim = config.n_particles, lower.size
    rng = _rng(config.seed, 0)
    x = init_lower + (init_upper - init_lower) * rng.random((n, dim))
    v = 0.1 * (init_upper - init_lower) * (2.0 * rng.random((n, dim)) - 1.0)

    vals = np.array([fn(p) for p in x])
    pbest, pval = x.copy(), vals.copy()
    g = int(np.argmax(pval))
    gbest, gval = pbest[g].copy(), float(pval[g])
    history = [gval]
    evals = n

    for it in range(1, config.n_iterations + 1):
        r = _rng(config.seed, it).random((2, n, dim))
        v = config.w * v + config.c1 * r[0] * (pbest - x) + config.c2 * r[1] * (gbest - x)
        x = x + v
        low, high = x < lower, x > upper
        x = np.where(low, lower, np.where(high, upper, x))
        v = np.where(low | high, 0.0, v)

        vals = np.array([fn(p) for p in x])
        evals += n
        better = vals > pval
        pbest[better] = x[better]
        pval[better] = vals[better]
        g = int(np.argmax(pval))
        if pval[g] > gval:
            gbest, gval = pbest[g].copy(), float(pval[g])
        history.append(gval)

    if gval == -math.inf:
        raise InfeasibleError("every candidate design evaluated was singular")
    return gbest, gval, history, evals


# ---------------------------------------------------------------------------
# Decoding and clean-up
# ---------------------------------------------------------------------------


def softmax(logits: Sequence[float]) -> np.ndarray:
    z = np.asarray(logits, dtype=float)
    e = np.exp(z - z.max())
    return e / e.sum()


def _merge_close(points: np.ndarray, weights: np.ndarray, tol: float) -> tuple[list[float], list[float]]:
    """Merge runs of sorted points whose gaps are below ``tol``."""
    order = np.argsort(points, kind="stable")
    pts, wts = points[order], weights[order]
    groups: list[list[int]] = [[0]]
    for i in range(1, pts.size):
        if pts[i] - pts[groups[-1][-1]] < tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    out_x, out_p = [], []
    for grp in groups:
        p = float(wts[grp].sum())
        x = float(pts[grp] @ wts[grp] / p) if p > 0.0 else float(pts[grp].mean())
        out_x.append(x)
        out_p.append(p)
    return out_x, out_p


def _normalized(weights: Sequence[float]) -> list[float]:
    total = math.fsum(weights)
    out = [p / total for p in weights]
    # Push the rounding residue into the largest weight so the sum is exact.
    i = max(range(len(out)), key=out.__getitem__)
    out[i] += 1.0 - math.fsum(out)
    return out


def decode(positions: Sequence[float], logits: Sequence[float], space: DesignSpace) -> Design:
    """Turn particle coordinates into a design.

    Weights are the softmax of the logits; points within
    ``MERGE_FRACTION * width`` of each other are merged into their
    weight-averaged location.
    """
    pts = np.clip(np.asarray(positions, dtype=float), space.lower, space.upper)
    x, p = _merge_close(pts, softmax(logits), MERGE_FRACTION * space.width)
    x = [min(max(v, space.lower), space.upper) for v in x]
    return Design(tuple(x), tuple(_normalized(p)), space)


def collapse(design: Design, point_tol: float, weight_tol: float = DEFAULT_WEIGHT_TOL) -> Design:
    """Merge points closer than ``point_tol`` and drop weights below ``weight_tol``.

    Repeats until nothing changes, so the result is a fixed point.
    """
    if not (point_tol > 0.0 and weight_tol > 0.0):
        raise ValidationError("collapse tolerances must be positive")
    x = np.asarray(design.points)
    p = np.asarray(design.weights)
    while True:
        mx, mp = _merge_close(x, p, point_tol)
        keep = [i for i, w in enumerate(mp) if w >= weight_tol]
        if not keep:
            raise ValidationError("collapse dropped every support point")
        nx = np.array([mx[i] for i in keep])
        np_ = np.array(_normalized([mp[i] for i in keep]))
        if nx.size == x.size:
            x, p = nx, np_
            break
        x, p = nx, np_
    if x.size == design.k and np.array_equal(x, design.points):
        return design
    return Design(tuple(x.tolist()), tuple(p.tolist()), design.space)


# ---------------------------------------------------------------------------
# Optimizers
# ---------------------------------------------------------------------------


def optimize(
    objective: Callable[[Design], float],
    space: DesignSpace,
    config: PsoConfig = PsoConfig(),
    k_points: int | None = None,
) -> PsoResult:
    """Maximize ``objective`` over k-point weighted designs on ``space``."""
    k = k_points or config.k_points or 3
    lower = np.r_[np.full(k, space.lower), np.full(k, -LOGIT_BOUND)]
    upper = np.r_[np.full(k, space.upper), np.full(k, LOGIT_BOUND)]
    init_lower = np.r_[np.full(k, space.lower), np.full(k, -LOGIT_INIT)]
    init_upper = np.r_[np.full(k, space.upper), np.full(k, LOGIT_INIT)]

    def fn(vec: np.ndarray) -> float:
        return objective(decode(vec[:k], vec[k:], space))

    best, val, hist, evals = _swarm(fn, lower, upper, init_lower, init_upper, config)
    return PsoResult(decode(best[:k], best[k:], space), val, tuple(hist), config, evals)


def optimize_weights(
    objective: Callable[[Design], float],
    points: Sequence[float],
    space: DesignSpace,
    config: PsoConfig = PsoConfig(),
) -> PsoResult:
    """Search the weights only, with the support held fixed."""
    pts = tuple(float(x) for x in points)
    k = len(pts)
    if len(set(pts)) != k:
        raise ValidationError("fixed support points must be distinct")
    lower, upper = np.full(k, -LOGIT_BOUND), np.full(k, LOGIT_BOUND)
    init_lower, init_upper = np.full(k, -LOGIT_INIT), np.full(k, LOGIT_INIT)

    def build(vec: np.ndarray) -> Design:
        return Design(pts, tuple(_normalized(softmax(vec))), space)

    best, val, hist, evals = _swarm(lambda v: objective(build(v)), lower, upper, init_lower, init_upper, config)
    return PsoResult(build(best), val, tuple(hist), config, evals)


def optimize_equal_weights(
    objective: Callable[[Sequence[float]], float],
    space: DesignSpace,
    k: int,
    config: PsoConfig = PsoConfig(),
) -> PsoResult:
    """Search k equally weighted points; ``objective`` receives sorted points."""
    lower, upper = np.full(k, space.lower), np.full(k, space.upper)

    def fn(vec: np.ndarray) -> float:
        return objective(np.sort(vec))

    best, val, hist, evals = _swarm(fn, lower, upper, lower, upper, config)
    pts = np.sort(best)
    return PsoResult(Design.equal(tuple(pts.tolist()), space), val, tuple(hist), config, evals)


def optimize_3p(model: ThreeParamModel, space: DesignSpace, config: PsoConfig = PsoConfig()) -> PsoResult:
    """D-optimal search for the three-parameter model.

    With three support points the weights are equal at the optimum, so the
    search runs over point locations only, scored by the tilted-measure
    determinant.  Larger k falls back to the full weighted search.
    """
    if not isinstance(model, ThreeParamModel):
        raise ValidationError("optimize_3p expects a three-parameter model")
    k = config.k_points or 3
    if k < 3:
        raise ValidationError("a three-parameter design needs at least 3 support points")
    check_space(model, space)
    if k == 3:

        def crit(pts) -> float:
            d = det_3p_tilted(model, pts)
            return math.log(d) if d > 0.0 else -math.inf

        return optimize_equal_weights(crit, space, 3, config)
    return optimize(lambda d: d_criterion(model, d), space, config, k)


def optimize_design(model: Model, space: DesignSpace, config: PsoConfig = PsoConfig()) -> PsoResult:
    """D-optimal search for any model; k defaults to n_params + 1."""
    if isinstance(model, ThreeParamModel):
        return optimize_3p(model, space, config)
    check_space(model, space)
    k = config.k_points or model.n_params + 1
    return optimize(lambda d: d_criterion(model, d), space, config, k)
