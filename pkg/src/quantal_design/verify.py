"""Equivalence-theorem checks for D-optimality.

A design xi is D-optimal on the design space iff the sensitivity function

    psi(x) = g(x)^T M(xi)^-1 g(x) - d

is <= 0 for every x in the space, where g is the per-point information
vector of :func:`quantal_design.model.point_vector` and d the number of
parameters.  For the two-parameter model that is
``omega(eta(x)) z^T M^-1 z - 2``; for the three-parameter model it is
``u^T M^-1 u - 3`` with ``u = (S, (1-c) sqrt(omega) z)`` under the default
information form.  At the support of an optimal design psi is zero.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import SingularDesignError, ValidationError
from .model import Design, Model, ThreeParamModel, TwoParamModel, information, point_vector

DEFAULT_TOL = 1e-4
DEFAULT_GRID = 2001


@dataclass(frozen=True)
class Verdict:
    optimal: bool
    max_psi: float
    argmax_x: float
    tol: float
    grid_size: int
    violations: tuple[tuple[float, float], ...] = field(default=())
    support_psi: tuple[tuple[float, float], ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "optimal": self.optimal,
            "max_psi": self.max_psi,
            "argmax_x": self.argmax_x,
            "tol": self.tol,
            "grid_size": self.grid_size,
            "violations": [list(v) for v in self.violations],
            "support_psi": [list(s) for s in self.support_psi],
        }


class Sensitivity:
    """psi(.) for a fixed model and design, with M^-1 computed once."""

    def __init__(self, model: Model, design: Design):
        m = information(model, design)
        if linalg.is_singular(m):
            raise SingularDesignError(
                f"design with {design.k} support point(s) has a singular information matrix"
            )
        self.model = model
        self.design = design
        self.m_inv = linalg.inv(m)

    def __call__(self, x: float) -> float:
        g = point_vector(self.model, float(x))
        return float(g @ self.m_inv @ g) - self.model.n_params


def sensitivity(model: TwoParamModel, design: Design, x: float) -> float:
    return Sensitivity(model, design)(x)


def sensitivity_3p(model: ThreeParamModel, design: Design, x: float) -> float:
    if not isinstance(model, ThreeParamModel):
        raise ValidationError("sensitivity_3p expects a three-parameter model")
    return Sensitivity(model, design)(x)


def sensitivity_curve(model: Model, design: Design, grid_size: int = DEFAULT_GRID) -> list[tuple[float, float]]:
    """(x, psi) on a uniform grid over the design space plus the support, sorted by x."""
    psi = Sensitivity(model, design)
    xs = np.union1d(design.space.grid(grid_size), np.asarray(design.points))
    return [(float(x), psi(x)) for x in xs]


def check_global(
    model: Model, design: Design, grid_size: int = DEFAULT_GRID, tol: float = DEFAULT_TOL
) -> Verdict:
    """Grid check of psi <= tol over the design space."""
    if grid_size < 2:
        raise ValidationError("grid_size must be at least 2")
    psi = Sensitivity(model, design)
    curve = sensitivity_curve(model, design, grid_size)
    xs = np.array([c[0] for c in curve])
    vals = np.array([c[1] for c in curve])
    i = int(np.argmax(vals))
    bad = [(float(x), float(v)) for x, v in zip(xs, vals) if v > tol]
    bad.sort(key=lambda t: t[1], reverse=True)
    support = tuple((x, psi(x)) for x in design.points)
    return Verdict(
        optimal=bool(vals[i] <= tol),
        max_psi=float(vals[i]),
        argmax_x=float(xs[i]),
        tol=tol,
        grid_size=grid_size,
        violations=tuple(bad),
        support_psi=support,
    )


def curve_to_csv(curve: list[tuple[float, float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "psi"])
    for x, v in curve:
        writer.writerow([f"{x:.12g}", f"{v:.12g}"])
    return buf.getvalue()
