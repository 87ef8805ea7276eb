"""Closed-form symmetric 2x2 / 3x3 algebra.

Information matrices here never exceed 3x3, so determinants, inverses and
the Schur complement are written out explicitly instead of going through a
general dense solver.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import SingularDesignError

#: A determinant at or below this fraction of the diagonal product is singular.
SINGULAR_RTOL = 1e-14


def det(m) -> float:
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if m.shape == (2, 2):
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    if m.shape == (3, 3):
        return _det3(m)
    raise ValueError(f"only 2x2 and 3x3 matrices are supported, got {n}x{m.shape[1]}")


def _det3(m: np.ndarray) -> float:
    """3x3 determinant by elimination with partial pivoting.

    Cofactor expansion loses accuracy like cond(m)^2 when two eigenvalues are
    small; elimination stays near cond(m) eps.
    """
    r = [list(map(float, row)) for row in m]
    sign = 1.0
    for k in range(2):
        p = max(range(k, 3), key=lambda i: abs(r[i][k]))
        if r[p][k] == 0.0:
            return 0.0
        if p != k:
            r[k], r[p] = r[p], r[k]
            sign = -sign
        for i in range(k + 1, 3):
            f = r[i][k] / r[k][k]
            for j in range(k + 1, 3):
                r[i][j] -= f * r[k][j]
    return sign * r[0][0] * r[1][1] * r[2][2]


def _scale(m: np.ndarray) -> float:
    return float(np.prod(np.abs(np.diag(m))))


def is_singular(m, rtol: float = SINGULAR_RTOL) -> bool:
    m = np.asarray(m, dtype=float)
    s = _scale(m)
    d = det(m)
    return not (s > 0.0 and d > rtol * s)


def log_det(m) -> float:
    """log det m, or -inf when m is singular (never raises)."""
    m = np.asarray(m, dtype=float)
    if is_singular(m):
        return -math.inf
    return math.log(det(m))


def adjugate(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape == (2, 2):
        return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
    a, b, c = m[0]
    d, e, f = m[1]
    g, h, i = m[2]
    return np.array(
        [
            [e * i - f * h, c * h - b * i, b * f - c * e],
            [f * g - d * i, a * i - c * g, c * d - a * f],
            [d * h - e * g, b * g - a * h, a * e - b * d],
        ]
    )


def inv(m) -> np.ndarray:
    """Inverse of a 2x2 or 3x3 positive definite matrix via the adjugate."""
    m = np.asarray(m, dtype=float)
    if is_singular(m):
        raise SingularDesignError("information matrix is singular")
    return adjugate(m) / det(m)


def schur_first(m) -> float:
    """Schur complement of the lower-right block: m00 - b' D^-1 b."""
    m = np.asarray(m, dtype=float)
    block = m[1:, 1:]
    if is_singular(block):
        raise SingularDesignError(
            "lower-right information block is singular; only some linear combinations are estimable"
        )
    b = m[1:, 0]
    return float(m[0, 0] - b @ (adjugate(block) @ b) / det(block))


def leading_minors(m) -> list[float]:
    m = np.asarray(m, dtype=float)
    out = [float(m[0, 0])]
    if m.shape[0] >= 2:
        out.append(det(m[:2, :2]))
    if m.shape[0] == 3:
        out.append(det(m))
    return out
