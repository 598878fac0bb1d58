"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected into the terminal summary (see conftest).
Run alone with ``pytest tests/test_acceptance.py -v`` (about five minutes on
one core, dominated by the six T = 500 simulations).
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, BOUNDS, figure_branch, figure_run
from oracles import dense_principal
from preytaxis import cli
from preytaxis.bifurcation import (classify_semitrivial, lambda_mu_bundle, lambda_star,
                                   nonexistence_lower_bound, sigma1, weighted_coefficients)
from preytaxis.continuation import HITS_GAMMA_U, LAMBDA_CAP, bifurcation_point_scan
from preytaxis.errors import ConvergenceError, StateMissing
from preytaxis.grid import build_grid
from preytaxis.model import ModelParams, figure_params, make_motility, make_response
from preytaxis.scalar import principal_eigen, solve_logistic
from preytaxis.steady import newton_solve
from preytaxis.timestepper import SimulationConfig, steady_limit

FIG = (-1.0, 1.5, 5.0)


def report(k, ok, detail, started):
    line = f"ACCEPTANCE {k:2d}: {'PASS' if ok else 'FAIL'} ({time.perf_counter() - started:.1f} s) {detail}"
    ACCEPTANCE[k] = line
    print(line)
    assert ok, line


def test_criterion_01_analytic_eigenvalue(tmp_path):
    t0 = time.perf_counter()
    code = cli.main(["eig", "--set", f"grid.L={math.pi!r}", "--set", "grid.n=400", "--out", str(tmp_path)])
    sigma = float((tmp_path / "eig.csv").read_text().splitlines()[1].split(",")[0])
    errs = [abs(principal_eigen(1.0, 0.0, 1.0, build_grid(math.pi, n)).sigma - 1.0) for n in (100, 200)]
    order = math.log2(errs[0] / errs[1])
    ok = code == 0 and abs(sigma - 1.0) < 1e-3 and order >= 1.9
    report(1, ok, f"sigma1={sigma:.10f} |err|={abs(sigma - 1):.2e} order(100->200)={order:.3f}", t0)


def _smooth(rng, x, L, k=4, amp=0.3):
    c = rng.uniform(-1, 1, k)
    return sum(c[j] * np.sin((j + 1) * np.pi * x / L + rng.uniform(0, np.pi)) for j in range(k)) * amp / k


def test_criterion_02_eigen_monotonicity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    L, n = 2.0, 96
    g = build_grid(L, n)
    xf = g.x_full
    bad = {"p": 0, "q": 0, "r": 0}
    for _ in range(100):
        p = 1.0 + np.abs(_smooth(rng, xf, L)) + 0.2
        bump = np.maximum(0.0, _smooth(rng, xf, L, amp=1.0)) + 0.05 * np.exp(-50 * (xf - rng.uniform(0.3, L - 0.3)) ** 2)
        q = 3 * _smooth(rng, g.x, L)
        s, s2 = principal_eigen(p, q, 1.0, g).sigma, principal_eigen(p + bump, q, 1.0, g).sigma
        bad["p"] += not (s2 > s)
        qb = np.maximum(0.0, _smooth(rng, g.x, L, amp=1.0)) + 0.05 * np.exp(-50 * (g.x - rng.uniform(0.3, L - 0.3)) ** 2)
        s3 = principal_eigen(p, q + qb, 1.0, g).sigma
        bad["q"] += not (s3 > s)
    # r-trichotomy: q shifted so that sigma1(p, q; 1) = c exactly
    for _ in range(34):
        p = 1.0 + np.abs(_smooth(rng, g.x_full, L))
        q0 = 3 * _smooth(rng, g.x, L)
        base = principal_eigen(p, q0, 1.0, g).sigma
        r = 1.0 + np.abs(_smooth(rng, g.x, L))
        rb = r + 0.5 + np.abs(_smooth(rng, g.x, L))
        for c in (0.7, -0.7, 0.0):
            q = q0 - base + c
            s1, s2 = principal_eigen(p, q, r, g).sigma, principal_eigen(p, q, rb, g).sigma
            if c > 0:
                bad["r"] += not (s2 < s1)
            elif c < 0:
                bad["r"] += not (s2 > s1)
            else:
                bad["r"] += not (abs(s1) < 1e-9 and abs(s2) < 1e-9)
    ok = sum(bad.values()) == 0
    report(2, ok, f"violations p={bad['p']}/100 q={bad['q']}/100 r={bad['r']}/102", t0)


def test_criterion_03_logistic():
    t0 = time.perf_counter()
    L, n = math.pi, 200
    g = build_grid(L, n)
    p = 1.0 + 0.5 * np.sin(g.x_full) ** 2
    b = 1.0 + g.x / L
    b0, bmax = float(b.min()), float(b.max())
    eig = principal_eigen(p, 0.0, 1.0, g)
    s1, phi = eig.sigma, eig.phi
    a_values = s1 * np.concatenate([np.linspace(0.5, 0.999, 10), np.linspace(1.001, 6.0, 10)])
    wrong_existence = sandwich = mono = 0
    prev = None
    for a in a_values:
        sol = solve_logistic(p, a, b, g)
        if (sol is not None) != (a > s1):
            wrong_existence += 1
        if sol is None:
            continue
        th = sol.theta
        lower = (a - s1) / (bmax * phi.max()) * phi
        sandwich += int(np.any(th < lower * (1 - 1e-10)) or np.any(th > a / b0 * (1 + 1e-12)))
        if prev is not None:
            mono += int(np.any(th <= prev))
        prev = th
    ok = wrong_existence == sandwich == mono == 0
    report(3, ok, f"existence errors={wrong_existence}/20 sandwich={sandwich} monotonicity={mono}", t0)


def test_criterion_04_a_priori_bounds(fig_grid):
    t0 = time.perf_counter()
    g = fig_grid
    p2, p4 = figure_params("lotka-volterra", 1.5), figure_params("holling3", 1.5)
    for p in (p2, p4):
        newton_solve(np.ones(g.n), np.ones(g.n), 1.5, p, g)
    figure_branch("lotka-volterra")
    figure_branch("holling3")
    # time-limit pathway: the simulated end state polished by Newton
    tr = figure_run("lotka-volterra", 1.5)
    st = newton_solve(tr.u, tr.v, 1.5, p2, g)
    cfg = SimulationConfig(p2.replace(D=0.5), build_grid(4.0, 64), np.full(64, 0.5), np.full(64, 0.5),
                           dt=2e-3, T=400.0)
    sl = steady_limit(cfg)
    ok = BOUNDS.checked > 0 and not BOUNDS.violations and st.is_positive and sl is not None
    report(4, ok, f"positive states checked so far={BOUNDS.checked} violations={len(BOUNDS.violations)} "
                  f"(pathways: newton, continuation, time-limit)", t0)


def test_criterion_05_bifurcation_point(fig_grid):
    t0 = time.perf_counter()
    g = fig_grid
    p = figure_params("lotka-volterra", 0.0)
    scan = bifurcation_point_scan(p, g)
    lm = lambda_mu_bundle(p, g).lambda_mu
    pf, q, r = weighted_coefficients(lambda_mu_bundle(p, g).omega, p, g)
    dense = dense_principal(pf, q, r, g.x_full, g.h)
    ok = len(scan) == 1 and abs(scan[0] - lm) <= 1e-8 and abs(dense - lm) <= 1e-9
    report(5, ok, f"scan={scan} lambda_mu={lm:.12f} |scan-bundle|={abs(scan[0] - lm):.1e} "
                  f"|jacobi-bundle|={abs(dense - lm):.1e}", t0)


def test_criterion_06_direction_formula(fig_grid):
    t0 = time.perf_counter()
    details, ok = [], True
    for resp in ("lotka-volterra", "holling3"):
        br = figure_branch(resp)
        lp = br.bundle.lambda_prime0
        s = br.projections()[:2]
        slopes = [(pt.lam - br.bundle.lambda_mu) / sk for pt, sk in zip(br.points[:2], s)]
        rel = max(abs(sl - lp) / abs(lp) for sl in slopes)
        ok &= rel < 0.2
        details.append(f"{resp}: lambda'(0)={lp:.5f} secants={slopes[0]:.5f},{slopes[1]:.5f} rel={rel:.1e}")
    signs = []
    for resp in ("lotka-volterra", "holling2", "holling3"):
        for gamma in (0.3, 0.6, 2.0):
            p = ModelParams(0.0, 2.0, gamma, 1.0, make_motility("constant", "zero"), make_response(resp))
            lp = lambda_mu_bundle(p, fig_grid).lambda_prime0
            signs.append(lp)
    ok &= min(signs) > 0
    details.append(f"taxis-free min lambda'(0)={min(signs):.4f} over {len(signs)} cases")
    report(6, ok, "; ".join(details), t0)


def test_criterion_07_branch_connectivity(fig_grid):
    t0 = time.perf_counter()
    br = figure_branch("lotka-volterra")
    p = figure_params("lotka-volterra", 0.0)
    ls = lambda_star(p.mu, p, fig_grid)
    end = br.points[-1].lam
    positive = all(pt.positive for pt in br.points)
    ok = br.endpoint == HITS_GAMMA_U and abs(end - ls) / abs(ls) < 0.02 and positive
    report(7, ok, f"endpoint={br.endpoint} lambda_end={end:.8f} lambda*={ls:.8f} "
                  f"rel={abs(end - ls) / abs(ls):.1e} points={len(br.points)} all positive={positive}", t0)


def test_criterion_08_unbounded_projection():
    t0 = time.perf_counter()
    br = figure_branch("holling3")
    lm = br.bundle.lambda_mu
    lo, hi = br.lambda_interval
    positive = all(pt.positive for pt in br.points)
    ok = br.endpoint == LAMBDA_CAP and hi > lm + 10 and positive
    report(8, ok, f"endpoint={br.endpoint} lambda range=({lo:.4f}, {hi:.4f}) cap={lm + 10:.4f} "
                  f"points={len(br.points)} all positive={positive}", t0)


def test_criterion_09_lambda_star_limits():
    t0 = time.perf_counter()
    g = build_grid(4.0, 256)
    p = figure_params("lotka-volterra", 0.0)
    mus = (0.8, 1.2, 2.0, 4.0)
    ls = [lambda_star(mu, p, g) for mu in mus]
    inc = all(b > a for a, b in zip(ls, ls[1:]))
    s1 = sigma1(g)
    near = lambda_star(p.D * s1 * (1 + 1e-3), p, g)
    gap = abs(near - float(p.d(0.0)) * s1)
    ok = inc and gap < 1e-2
    report(9, ok, f"lambda*={', '.join(f'{x:.6f}' for x in ls)} increasing={inc} "
                  f"|lambda*(D s1 (1+1e-3)) - d(0) s1|={gap:.2e}", t0)


def test_criterion_10_figure2(fig_grid):
    t0 = time.perf_counter()
    regimes = [figure_run("lotka-volterra", lam).regime for lam in FIG]
    p = figure_params("lotka-volterra", 1.5)
    tr = figure_run("lotka-volterra", 1.5)
    polished = newton_solve(tr.u, tr.v, 1.5, p, fig_grid)
    ref = newton_solve(np.ones(fig_grid.n), np.ones(fig_grid.n), 1.5, p, fig_grid)
    diff = max(np.abs(polished.u - ref.u).max(), np.abs(polished.v - ref.v).max())
    raw = max(np.abs(tr.u - ref.u).max(), np.abs(tr.v - ref.v).max())
    ok = regimes == ["prey-only", "coexistence", "predator-only"] and diff < 1e-4
    report(10, ok, f"regimes={regimes} polished-vs-Newton={diff:.1e} (unpolished end state {raw:.1e})", t0)


def test_criterion_11_figure4():
    t0 = time.perf_counter()
    regimes = [figure_run("holling3", lam).regime for lam in FIG]
    ok = regimes == ["prey-only", "coexistence", "coexistence"]
    report(11, ok, f"regimes={regimes}", t0)


def _predicted(lam, params, grid):
    prey = classify_semitrivial("prey-only", lam, params, grid)
    try:
        pred = classify_semitrivial("predator-only", lam, params, grid)
    except StateMissing:
        pred = None
    if prey.stable:
        return "prey-only", prey, pred
    if pred is not None and pred.stable:
        return "predator-only", prey, pred
    return "coexistence", prey, pred


def test_criterion_12_stability_vs_dynamics(fig_grid):
    t0 = time.perf_counter()
    rows, matches = [], 0
    for resp in ("lotka-volterra", "holling3"):
        p = figure_params(resp, 0.0)
        for lam in FIG:
            expected, prey, pred = _predicted(lam, p, fig_grid)
            realized = figure_run(resp, lam).regime
            matches += expected == realized
            rows.append(f"{resp}@{lam:g}: prey-only {prey.verdict}, predator-only "
                        f"{pred.verdict if pred else 'absent'} -> {expected}/{realized}")
    report(12, matches == 6, f"{matches}/6 match; " + "; ".join(rows), t0)


def _attempts(params, grid, lam, count, rng):
    found = 0
    for _ in range(count):
        scale_u, scale_v = rng.uniform(0.01, 5.0, 2)
        u0 = scale_u * (0.2 + rng.random(grid.n))
        v0 = scale_v * (0.2 + rng.random(grid.n))
        try:
            st = newton_solve(u0, v0, lam, params, grid)
        except ConvergenceError:
            continue
        found += st.kind == "coexistence" and st.is_positive
    return found


def test_criterion_13_nonexistence(fig_grid):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    g = build_grid(4.0, 128)
    p = figure_params("lotka-volterra", 0.0)
    lam = nonexistence_lower_bound(p, g) - 0.1
    a = _attempts(p, g, lam, 20, rng)
    pm = p.replace(mu=0.9 * p.D * sigma1(g))
    b = _attempts(pm, g, 1.5, 50, rng)
    report(13, a == 0 and b == 0, f"lambda=bound-0.1={lam:.4f}: {a}/20 coexistence roots; "
                                  f"mu=0.9 D sigma1: {b}/50 coexistence roots", t0)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
