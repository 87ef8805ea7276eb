from __future__ import annotations

import mpmath as mp
import pytest

from quantal_design.links import Cloglog, Exponential, Laplace, Logit, Probit, StudentT

mp.mp.dps = 50

SYMMETRIC = [Logit(), Probit(), Laplace(), StudentT(2), StudentT(5.5)]
ALL_LINKS = SYMMETRIC + [Cloglog(), Exponential()]


def mp_F(link, eta):
    """High-precision CDF oracle, written from the closed forms."""
    e = mp.mpf(eta)
    if isinstance(link, Logit):
        return 1 / (1 + mp.exp(-e))
    if isinstance(link, Probit):
        return mp.ncdf(e)
    if isinstance(link, Laplace):
        return mp.mpf(1) / 2 * mp.exp(e) if e < 0 else 1 - mp.mpf(1) / 2 * mp.exp(-e)
    if isinstance(link, Cloglog):
        return -mp.expm1(-mp.exp(e))
    if isinstance(link, StudentT):
        k = mp.mpf(link.df)
        tail = mp.betainc(k / 2, mp.mpf(1) / 2, 0, k / (k + e * e), regularized=True) / 2
        return 1 - tail if e >= 0 else tail
    if isinstance(link, Exponential):
        return -mp.expm1(-e)
    raise TypeError(link)


def mp_S(link, eta):
    e = mp.mpf(eta)
    if isinstance(link, Probit):
        return mp.ncdf(-e)
    if isinstance(link, Logit):
        return 1 / (1 + mp.exp(e))
    if isinstance(link, Laplace):
        return mp.mpf(1) / 2 * mp.exp(-e) if e >= 0 else 1 - mp.mpf(1) / 2 * mp.exp(e)
    if isinstance(link, Cloglog):
        return mp.exp(-mp.exp(e))
    if isinstance(link, StudentT):
        k = mp.mpf(link.df)
        tail = mp.betainc(k / 2, mp.mpf(1) / 2, 0, k / (k + e * e), regularized=True) / 2
        return tail if e >= 0 else 1 - tail
    if isinstance(link, Exponential):
        return mp.exp(-e)
    raise TypeError(link)


def mp_f(link, eta):
    e = mp.mpf(eta)
    if isinstance(link, Logit):
        return mp.exp(-abs(e)) / (1 + mp.exp(-abs(e))) ** 2
    if isinstance(link, Probit):
        return mp.npdf(e)
    if isinstance(link, Laplace):
        return mp.exp(-abs(e)) / 2
    if isinstance(link, Cloglog):
        return mp.exp(e - mp.exp(e))
    if isinstance(link, StudentT):
        k = mp.mpf(link.df)
        c = mp.gamma((k + 1) / 2) / (mp.sqrt(k * mp.pi) * mp.gamma(k / 2))
        return c * (1 + e * e / k) ** (-(k + 1) / 2)
    if isinstance(link, Exponential):
        return mp.exp(-e)
    raise TypeError(link)


def mp_det_3p(model, points):
    """Exact det M for three equally weighted points, built from the oracles."""
    rows = []
    c = mp.mpf(model.c)
    for x in points:
        x = mp.mpf(float(x))
        e = mp.mpf(model.predictor.beta0) + mp.mpf(model.predictor.beta1) * x
        F, S, f = mp_F(model.link, e), mp_S(model.link, e), mp_f(model.link, e)
        head = S if model.form == "linearized" else mp.sqrt(S / F)
        s = (1 - c) * f / mp.sqrt(F * S)
        rows.append([head, s, s * x])
    g = mp.matrix(rows)
    m = g.T * g / 3
    return mp.det(m)


def interior_grid(link, n=81):
    lo = max(-8.0, link.domain.lower + 1e-3)
    hi = 8.0
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


@pytest.fixture(params=ALL_LINKS, ids=lambda l: l.spec)
def any_link(request):
    return request.param


@pytest.fixture(params=SYMMETRIC, ids=lambda l: l.spec)
def symmetric_link(request):
    return request.param


# ---------------------------------------------------------------------------
# Acceptance summary: one PASS/FAIL line per criterion
# ---------------------------------------------------------------------------

_ACCEPTANCE: list[tuple[int, str, bool, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        detail = ""
        if rep.failed and call.excinfo is not None:
            detail = str(call.excinfo.value).splitlines()[0][:160]
        _ACCEPTANCE.append((marker.args[0], marker.args[1], rep.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for number, title, ok, detail in sorted(_ACCEPTANCE):
        line = f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}"
        if detail:
            line += f"  -- {detail}"
        tr.write_line(line)
    passed = sum(ok for *_, ok, _ in _ACCEPTANCE)
    tr.write_line(f"{passed}/{len(_ACCEPTANCE)} criteria pass")
