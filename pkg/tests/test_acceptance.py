"""Acceptance suite: one test per criterion of the build contract.

Each test collects every sub-check before asserting, so a failure message
lists all parts that did not hold.  The terminal summary prints one
PASS/FAIL line per criterion.
"""

from __future__ import annotations

import io
import time
import warnings

import numpy as np
import pytest
from scipy import stats

from conftest import mp_det_3p
from quantal_design import linalg
from quantal_design.cli import run
from quantal_design.errors import DesignError, MultipleRootsWarning
from quantal_design.fit import Dataset, fit_mle
from quantal_design.links import Cloglog, Exponential, Laplace, Logit, Probit, StudentT
from quantal_design.model import (
    Design,
    DesignSpace,
    Linear,
    LinearWithOffset,
    ThreeParamModel,
    TwoParamModel,
    d_criterion,
    det_3p_tilted,
    info_matrix,
    information,
)
from quantal_design.pso import PsoConfig, collapse, optimize_3p, optimize_design, optimize_weights
from quantal_design.verify import check_global, sensitivity
from quantal_design.wc import design_from_eta, h_function, solve, solve_asymmetric, solve_symmetric

SPACE = DesignSpace(-10.0, 10.0)
URCHIN_SPACE = DesignSpace(0.0, 0.45)
LOGIT_URCHIN = Linear(-4.5, 20.0)
COX_URCHIN = Linear(-3.7, 14.0)


def check(problems: list[str], ok: bool, message: str) -> None:
    if not ok:
        problems.append(message)


def settle(problems: list[str]) -> None:
    assert not problems, "; ".join(problems)


def resolvable(m: np.ndarray, rel_tol: float) -> bool:
    """Whether a float determinant of ``m`` can resolve a relative error of ``rel_tol``.

    Rounding the entries of M alone perturbs det M by about cond(M) eps
    relative, so identities are only checked where that floor sits an order
    of magnitude below the tolerance.
    """
    return float(np.linalg.cond(m)) * np.finfo(float).eps * 10.0 <= rel_tol


# ---------------------------------------------------------------------------


@pytest.mark.acceptance(1, "WC symmetric roots (logit, probit, Laplace) within 1e-3, < 10 ms each")
def test_criterion_01_symmetric_roots():
    problems = []
    for link, ref in ((Logit(), 1.5434), (Probit(), 1.1381), (Laplace(), 0.7680)):
        solve_symmetric(link)  # warm caches before timing
        times = []
        for _ in range(5):
            t = time.perf_counter()
            r = solve_symmetric(link)
            times.append(time.perf_counter() - t)
        check(problems, abs(r - ref) <= 1e-3, f"{link.name}: {r:.6f} vs {ref}")
        check(problems, min(times) < 0.010, f"{link.name}: {min(times) * 1e3:.2f} ms")
    settle(problems)


@pytest.mark.acceptance(2, "WC asymmetric cloglog root (0.9796, -1.3378) within 2e-3")
def test_criterion_02_asymmetric_cloglog():
    s = solve_asymmetric(Cloglog(), (0.1, 3.0))
    assert abs(s.eta1 - 0.9796) <= 2e-3 and abs(s.eta2 + 1.3378) <= 2e-3, s.etas


@pytest.mark.acceptance(3, "Sea-urchin designs (0.1478, 0.3022) logit and (0.1687, 0.3343) Cox within 5e-4")
def test_criterion_03_sea_urchin_designs():
    problems = []
    logit = design_from_eta(LOGIT_URCHIN, solve(Logit()).etas)
    cox = design_from_eta(COX_URCHIN, solve(Cloglog()).etas)
    for d, ref, orig in ((logit, (0.1478, 0.3022), (147.8, 302.2)), (cox, (0.1687, 0.3343), (168.7, 334.3))):
        check(problems, np.allclose(d.points, ref, atol=5e-4, rtol=0), f"{d.points} vs {ref}")
        scaled = [1000 * x for x in d.points]
        check(problems, np.allclose(scaled, orig, atol=0.5, rtol=0), f"{scaled} vs {orig}")
    settle(problems)


@pytest.mark.acceptance(4, "Equivalence check confirms logit/probit/Cox WC designs, psi = 0 at support within 1e-6")
def test_criterion_04_equivalence():
    problems = []
    cases = [(link, Linear(0.0, 1.0), SPACE) for link in (Logit(), Probit(), Cloglog())]
    cases += [(Logit(), LOGIT_URCHIN, URCHIN_SPACE), (Cloglog(), COX_URCHIN, URCHIN_SPACE)]
    for link, pred, space in cases:
        model = TwoParamModel(link, pred)
        d = design_from_eta(pred, solve(link).etas, space)
        v = check_global(model, d, grid_size=2001, tol=1e-4)
        check(problems, v.optimal and v.max_psi <= 1e-4, f"{link.name} on {space}: max psi {v.max_psi:.3g}")
        worst = max(abs(p) for _, p in v.support_psi)
        check(problems, worst <= 1e-6, f"{link.name} on {space}: support psi {worst:.3g}")
    settle(problems)


@pytest.mark.acceptance(5, "Laplace 2-point design rejected; PSO k=3 adds a point at 0 and passes")
def test_criterion_05_laplace_repair():
    problems = []
    model = TwoParamModel(Laplace(), Linear(0.0, 1.0))
    two = design_from_eta(model.predictor, solve(Laplace()).etas, SPACE)
    psi0 = sensitivity(model, two, 0.0)
    check(problems, psi0 > 0.01, f"psi(0) = {psi0:.4g}")
    check(problems, not check_global(model, two).optimal, "2-point design accepted")
    res = optimize_design(model, SPACE, PsoConfig(k_points=3))
    three = collapse(res.design, 1e-2 * SPACE.width * 1e-1)
    near = min(abs(x) for x in three.points)
    check(problems, near <= 5e-3, f"closest point to 0 is {near:.4g}")
    v = check_global(model, three)
    check(problems, v.optimal, f"3-point design max psi {v.max_psi:.3g}")
    settle(problems)


def _cli_bytes(*argv) -> str:
    out = io.StringIO()
    code = run([str(a) for a in argv], stdout=out, stderr=io.StringIO())
    assert code == 0
    return out.getvalue()


@pytest.mark.acceptance(6, "PSO reproduces reference designs (artificial regression, two 3-parameter examples), deterministic")
def test_criterion_06_pso_reproduction():
    problems = []

    model = TwoParamModel(Logit(), LinearWithOffset(0.1, 1.0))
    res = optimize_design(model, SPACE, PsoConfig(k_points=2))
    got = collapse(res.design, 1e-2).points
    ref = (-10.0, -0.01861)
    ok = len(got) == 2 and np.allclose(got, ref, atol=2e-2, rtol=0)
    check(problems, ok, f"artificial regression: PSO {tuple(round(x, 5) for x in got)} vs {ref}")

    for beta, c, space, ref in (
        ((1.0, 0.5), 0.1, DesignSpace(0.0, 1.0), (0.0, 0.4643, 1.0)),
        ((0.0, 1.0), 0.2, SPACE, (-10.0, -1.4555, 1.6137)),
    ):
        m3 = ThreeParamModel(Logit(), Linear(*beta), c)
        d = optimize_3p(m3, space).design
        check(problems, d.k == 3 and np.allclose(d.points, ref, atol=2e-2, rtol=0), f"3-param c={c}: {d.points} vs {ref}")
        check(problems, np.allclose(d.weights, 1 / 3, atol=1e-2), f"3-param c={c}: weights {d.weights}")
        full = optimize_design(m3, space, PsoConfig(k_points=3, seed=5))
        check(problems, np.allclose(full.design.weights, 1 / 3, atol=1e-2),
              f"3-param c={c} weighted search: weights {full.design.weights}")

    args = ("pso", "--c", 0.1, "--beta0", 1, "--beta1", 0.5, "--lower", 0, "--upper", 1, "--seed", 7)
    check(problems, _cli_bytes(*args) == _cli_bytes(*args), "seeded CLI runs differ")
    settle(problems)


@pytest.mark.acceptance(7, "Tilted-measure determinant equals the direct 3x3 determinant on 500 instances (rel 1e-9)")
def test_criterion_07_tilted_determinant():
    rng = np.random.default_rng(2024)
    links = [Logit(), Probit(), Cloglog(), Laplace(), StudentT(3)]
    problems = []
    worst = worst_direct = 0.0
    n_direct = 0
    for i in range(500):
        link = links[i % len(links)]
        model = ThreeParamModel(link, Linear(rng.uniform(-1, 1), rng.uniform(0.2, 1.0) * rng.choice([-1, 1])), rng.uniform(0, 0.95))
        pts = tuple(np.sort(rng.uniform(-4, 4, 3)))
        tilted = det_3p_tilted(model, pts)
        exact = float(mp_det_3p(model, pts))
        worst = max(worst, abs(tilted - exact) / exact)
        m = information(model, Design.equal(pts, SPACE))
        if resolvable(m, 1e-9):
            n_direct += 1
            worst_direct = max(worst_direct, abs(tilted - linalg.det(m)) / abs(linalg.det(m)))
    check(problems, worst <= 1e-9, f"vs exact determinant: worst rel error {worst:.3g}")
    check(problems, n_direct >= 100, f"only {n_direct} instances resolvable in float")
    check(problems, worst_direct <= 1e-9, f"vs float direct determinant: worst rel error {worst_direct:.3g} over {n_direct}")
    settle(problems)


@pytest.mark.acceptance(8, "Equal-weight lemma: det M(p) factorization (rel 1e-10); weight-only PSO gives equal weights (1e-3)")
def test_criterion_08_equal_weights():
    problems = []
    rng = np.random.default_rng(8)
    worst, tested = 0.0, 0
    for _ in range(600):
        if rng.random() < 0.5:
            model = TwoParamModel(Probit(), Linear(rng.normal(), rng.uniform(0.3, 2)))
            k = 2
        else:
            model = ThreeParamModel(Logit(), Linear(rng.normal(), rng.uniform(0.3, 2)), rng.uniform(0, 0.6))
            k = 3
        pts = tuple(rng.uniform(-3, 3, k))
        p = rng.dirichlet(np.ones(k))
        mp_ = information(model, Design(pts, tuple(p), SPACE))
        me = information(model, Design.equal(pts, SPACE))
        if not (resolvable(mp_, 1e-10) and resolvable(me, 1e-10)):
            continue
        tested += 1
        dp, de = linalg.det(mp_), linalg.det(me)
        worst = max(worst, abs(dp - np.prod(p) * k**k * de) / dp)
    check(problems, tested >= 200, f"only {tested} well-conditioned instances")
    check(problems, worst <= 1e-10, f"factorization rel error {worst:.3g} over {tested} instances")
    for model, pts in (
        (TwoParamModel(Logit(), Linear(0.3, 1.2)), (-2.0, 1.0)),
        (ThreeParamModel(Logit(), Linear(1.0, 0.5), 0.1), (0.0, 0.4643, 1.0)),
    ):
        res = optimize_weights(lambda d: d_criterion(model, d), pts, SPACE, PsoConfig())
        k = len(pts)
        check(problems, np.allclose(res.design.weights, 1 / k, atol=1e-3), f"weights {res.design.weights}")
    settle(problems)


@pytest.mark.acceptance(9, "Two-point identity 4 det M = w1 w2 (x1-x2)^2 (1e-12); reflection invariance (1e-10)")
def test_criterion_09_identity_and_reflection():
    problems = []
    rng = np.random.default_rng(9)
    worst_id = worst_ref = 0.0
    n_id = n_ref = 0
    for link in (Logit(), Probit(), Laplace(), StudentT(2), Cloglog()):
        for _ in range(200):
            pred = Linear(rng.normal(0, 0.5), rng.uniform(0.3, 2))
            model = TwoParamModel(link, pred)
            x1, x2 = rng.uniform(-3, 3, 2)
            w1, w2 = link.weight(pred.eta(x1)), link.weight(pred.eta(x2))
            m = info_matrix(model, Design.equal((x1, x2), SPACE))
            if resolvable(m, 1e-12):
                n_id += 1
                lhs, rhs = 4 * linalg.det(m), w1 * w2 * (x1 - x2) ** 2
                worst_id = max(worst_id, abs(lhs - rhs) / rhs)
            if link.symmetric:
                m0 = TwoParamModel(link, Linear(0.0, 1.0))
                e1, e2 = rng.uniform(-4, 4, 2)
                ma = info_matrix(m0, Design.equal((e1, e2), SPACE))
                mb = info_matrix(m0, Design.equal((-e2, -e1), SPACE))
                if resolvable(ma, 1e-10):
                    n_ref += 1
                    a, b = linalg.det(ma), linalg.det(mb)
                    worst_ref = max(worst_ref, abs(a - b) / a)
    check(problems, n_id >= 300 and n_ref >= 300, f"too few well-conditioned instances ({n_id}, {n_ref})")
    check(problems, worst_id <= 1e-12, f"identity rel error {worst_id:.3g} over {n_id} instances")
    check(problems, worst_ref <= 1e-10, f"reflection rel error {worst_ref:.3g} over {n_ref} instances")
    settle(problems)


@pytest.mark.acceptance(10, "WC solutions are stationary points of log det M (finite differences within 1e-6)")
def test_criterion_10_stationarity():
    problems = []
    h = 1e-5
    for link in (Logit(), Probit(), Laplace(), Cloglog(), StudentT(2)):
        e1, e2 = solve(link).etas
        model = TwoParamModel(link, Linear(0.0, 1.0))
        space = DesignSpace(-50, 50)
        f = lambda a: d_criterion(model, Design.equal((a, e2), space))
        fd = (f(e1 + h) - f(e1 - h)) / (2 * h)
        check(problems, abs(fd) <= 1e-6, f"{link.name}: d/d eta1 = {fd:.3g}")
    settle(problems)


@pytest.mark.acceptance(11, "One-hit h: h(1e-4) < -1e3, h(1) > 0, multiple sign-change intervals near 0")
def test_criterion_11_one_hit():
    problems = []
    h_small = h_function(1e-4)
    check(problems, h_small < -1e3, f"h(1e-4) = {h_small:.6g} (the limit at 0+ is 0, not -inf)")
    h1 = h_function(1.0)
    check(problems, h1 > 0.0, f"h(1) = {h1}")
    check(problems, abs(h1 - 1.7244) < 1e-4, f"h(1) = {h1} vs derived 1.7244")
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            sol = solve_asymmetric(Exponential(0.0), (0.01, 1.0))
        n = len(sol.sign_change_intervals)
        multiple = n > 1 and any(issubclass(w.category, MultipleRootsWarning) for w in caught)
        check(problems, multiple, f"{n} sign-change interval(s) reported")
    except DesignError as exc:
        check(problems, False, f"solve_asymmetric raised {type(exc).__name__}: {exc}")
    settle(problems)


@pytest.mark.acceptance(12, "MLE agrees with dense likelihood-grid argmax on 20 seeded datasets; score norm <= 1e-10")
def test_criterion_12_fit_oracle():
    problems = []
    for seed in range(20):
        link = Logit() if seed % 2 == 0 else Probit()
        rng = np.random.default_rng(seed)
        beta = (rng.uniform(-1.5, 1.5), rng.uniform(0.5, 3.0))
        doses = np.linspace(-1.5, 1.5, int(rng.integers(4, 9)))
        p = np.array([link.cdf(beta[0] + beta[1] * x) for x in doses])
        y = rng.binomial(50, p)
        data = Dataset(tuple(doses), (50,) * len(doses), tuple(int(v) for v in y))
        try:
            res = fit_mle(data, link)
        except DesignError as exc:
            problems.append(f"seed {seed}: {type(exc).__name__}")
            continue
        check(problems, res.score_norm <= 1e-10, f"seed {seed}: score norm {res.score_norm:.3g}")
        n = 301
        b0 = np.linspace(res.beta0 - 4 * res.se[0], res.beta0 + 4 * res.se[0], n)
        b1 = np.linspace(res.beta1 - 4 * res.se[1], res.beta1 + 4 * res.se[1], n)
        eta = b0[:, None, None] + b1[None, :, None] * np.asarray(data.doses)[None, None, :]
        dist = stats.logistic if isinstance(link, Logit) else stats.norm
        ys, ns = np.asarray(data.events), np.asarray(data.trials)
        ll = (ys * dist.logcdf(eta) + (ns - ys) * dist.logsf(eta)).sum(axis=2)
        i, j = np.unravel_index(np.argmax(ll), ll.shape)
        check(problems, abs(b0[i] - res.beta0) <= b0[1] - b0[0] and abs(b1[j] - res.beta1) <= b1[1] - b1[0],
              f"seed {seed}: grid ({b0[i]:.5g}, {b1[j]:.5g}) vs MLE {res.beta}")
    settle(problems)


@pytest.mark.acceptance(13, "2000x2000 grid maximization over [-6,6]^2 matches WC for logit/probit/cloglog (6e-3)")
def test_criterion_13_grid_oracle():
    problems = []
    g = np.linspace(-6.0, 6.0, 2000)
    res = g[1] - g[0]
    dists = {
        "logit": (stats.logistic.logpdf(g), stats.logistic.logcdf(g), stats.logistic.logsf(g), Logit()),
        "probit": (stats.norm.logpdf(g), stats.norm.logcdf(g), stats.norm.logsf(g), Probit()),
        "cloglog": (g - np.exp(g), np.log(-np.expm1(-np.exp(g))), -np.exp(g), Cloglog()),
    }
    for name, (lf, lF, lS, link) in dists.items():
        lw = 2 * lf - lF - lS
        with np.errstate(divide="ignore"):
            crit = lw[:, None] + lw[None, :] + 2 * np.log(np.abs(g[:, None] - g[None, :]))
        i, j = np.unravel_index(np.argmax(crit), crit.shape)
        grid = sorted((g[i], g[j]), reverse=True)
        wc = solve(link).etas
        check(problems, abs(grid[0] - wc[0]) <= max(res, 6e-3) and abs(grid[1] - wc[1]) <= max(res, 6e-3),
              f"{name}: grid {grid} vs WC {wc}")
    settle(problems)
