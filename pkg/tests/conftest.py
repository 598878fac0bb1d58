"""Shared fixtures and the suite-wide a priori bound post-condition.

Every steady state produced through ``newton_solve`` (directly, through the
long-time limit, or through the CLI) and every continuation point is
checked against bounds computed by :func:`oracles.a_priori_bounds_quad`. The
wrappers are installed at import time so test modules pick them up.
"""

import sys
from functools import lru_cache, wraps
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
import preytaxis  # noqa: E402
from preytaxis import cli, continuation, steady, timestepper  # noqa: E402
from preytaxis.grid import build_grid  # noqa: E402
from preytaxis.model import figure_params  # noqa: E402

SLACK = 1e-8


class BoundLedger:
    def __init__(self):
        self.checked = 0
        self.violations = []

    def check(self, u, v, params, lam, where):
        if not (np.all(u > 0) and np.all(v > 0)):
            return
        ub, vb = oracles.a_priori_bounds_quad(params.with_lambda(lam))
        self.checked += 1
        if np.max(v) > vb * (1 + SLACK) or np.max(u) > ub * (1 + SLACK):
            self.violations.append((where, lam, float(np.max(u)), ub, float(np.max(v)), vb))
            raise AssertionError(f"a priori bound violated by {where} at lambda={lam}")


BOUNDS = BoundLedger()
ACCEPTANCE = {}

_newton = steady.newton_solve
_branch = continuation.branch_from_prey_bifurcation


@wraps(_newton)
def _checked_newton(u0, v0, lam, params, grid, **kw):
    st = _newton(u0, v0, lam, params, grid, **kw)
    BOUNDS.check(st.u, st.v, params, st.lam, "newton")
    return st


@wraps(_branch)
def _checked_branch(bundle, params, grid, controls=continuation.Controls()):
    br = _branch(bundle, params, grid, controls)
    for p in br.points:
        BOUNDS.check(p.u, p.v, params, p.lam, "continuation")
    return br


for mod in (steady, timestepper, cli, preytaxis):
    mod.newton_solve = _checked_newton
for mod in (continuation, cli, preytaxis):
    mod.branch_from_prey_bifurcation = _checked_branch


def pytest_terminal_summary(terminalreporter):
    terminalreporter.section("a priori bound post-condition")
    terminalreporter.write_line(f"positive steady states checked: {BOUNDS.checked}; "
                                f"violations: {len(BOUNDS.violations)}")
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])


@pytest.fixture(scope="session")
def fig_grid():
    return build_grid(4.0, 256)


@lru_cache(maxsize=None)
def figure_run(response, lam):
    """Full figure-protocol simulation (T = 500, dt = 1e-3, n = 256), cached across the session."""
    g = build_grid(4.0, 256)
    p = figure_params(response, lam)
    u0 = timestepper.figure_initial(g)
    return timestepper.simulate(timestepper.SimulationConfig(p, g, u0, u0.copy(), dt=1e-3, T=500.0))


@lru_cache(maxsize=None)
def figure_branch(response):
    g = build_grid(4.0, 256)
    p = figure_params(response, 0.0)
    bundle = preytaxis.lambda_mu_bundle(p, g)
    controls = continuation.Controls(lambda_cap=bundle.lambda_mu + 10.0)
    return continuation.branch_from_prey_bifurcation(bundle, p, g, controls)
