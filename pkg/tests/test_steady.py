import numpy as np
import pytest

from preytaxis.bifurcation import lambda_mu_bundle
from preytaxis.errors import ConvergenceError, InvariantBreach
from preytaxis.grid import build_grid
from preytaxis.model import ModelParams, figure_params, make_motility, make_response
from preytaxis.scalar import semitrivial_states
from preytaxis.steady import (a_priori_bounds, check_a_priori_bounds, classify_kind, jacobian, jacobian_w,
                              newton_solve, residual, residual_w, transform_w, untransform_w)


@pytest.fixture(scope="module")
def g():
    return build_grid(4.0, 256)


def _sup(r):
    return max(np.abs(r[0]).max(), np.abs(r[1]).max())


def test_trivial_and_semitrivial_residuals(g):
    p = figure_params("lotka-volterra", 5.0)
    z = np.zeros(g.n)
    assert _sup(residual(z, z, 5.0, p, g)) == 0.0
    theta, omega = semitrivial_states(p, g)
    for u, v in ((theta, z), (z, omega)):
        assert _sup(residual(u, v, 5.0, p, g)) <= 1e-10
        assert _sup(residual_w(transform_w(u, v, p), v, 5.0, p, g)) <= 1e-10


def test_transform_cases(g):
    rng = np.random.default_rng(0)
    u, v = rng.uniform(0.1, 3, g.n), rng.uniform(0.1, 2, g.n)
    taxis_free = ModelParams(1.0, 2.0, 0.6, 1.0, make_motility("constant", "zero"))
    np.testing.assert_array_equal(transform_w(u, v, taxis_free), u)
    p = figure_params()
    np.testing.assert_allclose(transform_w(v, v, p), v * np.exp(-v), rtol=1e-13)
    pd = ModelParams(1.0, 2.0, 0.6, 1.0, make_motility("decreasing", "constant", a=2, b=0.5))
    np.testing.assert_allclose(untransform_w(transform_w(u, v, pd), v, pd), u, rtol=1e-13)


MOTILITIES = [("constant", "constant"), ("decreasing", "constant"), ("decreasing", "minus-dprime")]
RESPONSES = ["lotka-volterra", "holling2", "holling3"]


@pytest.mark.parametrize("mot", MOTILITIES)
@pytest.mark.parametrize("resp", RESPONSES)
def test_jacobians_match_central_differences(mot, resp):
    g = build_grid(3.0, 40)
    p = ModelParams(1.3, 2.0, 0.6, 0.8, make_motility(*mot, a=1.0, b=1.0), make_response(resp))
    rng = np.random.default_rng(11)
    u = rng.uniform(0.2, 2.0, g.n)
    v = rng.uniform(0.2, 1.5, g.n)
    w = transform_w(u, v, p)
    J, Jw = jacobian(u, v, 1.3, p, g), jacobian_w(w, v, 1.3, p, g)
    eps = 1e-6
    for _ in range(20):
        d = rng.standard_normal(2 * g.n)
        du, dv = d[:g.n], d[g.n:]
        fd = (np.concatenate(residual(u + eps * du, v + eps * dv, 1.3, p, g))
              - np.concatenate(residual(u - eps * du, v - eps * dv, 1.3, p, g))) / (2 * eps)
        assert np.abs(J @ d - fd).max() <= 1e-5 * max(1.0, np.abs(fd).max())
        fdw = (np.concatenate(residual_w(w + eps * du, v + eps * dv, 1.3, p, g))
               - np.concatenate(residual_w(w - eps * du, v - eps * dv, 1.3, p, g))) / (2 * eps)
        assert np.abs(Jw @ d - fdw).max() <= 1e-5 * max(1.0, np.abs(fdw).max())


def test_jacobian_structure_at_trivial_and_predator_state(g):
    p = figure_params("lotka-volterra", 5.0)
    z = np.zeros(g.n)
    J = jacobian(z, z, 5.0, p, g).toarray()
    n = g.n
    assert np.all(J[:n, n:] == 0) and np.all(J[n:, :n] == 0)
    np.testing.assert_allclose(np.diag(J[:n, :n]), 2 / g.h ** 2 - 5.0)
    np.testing.assert_allclose(np.diag(J[n:, n:]), 2 / g.h ** 2 - 2.0)
    theta, _ = semitrivial_states(p, g)
    J = jacobian(theta, z, 5.0, p, g).toarray()
    # F(0) = 0: the prey equation does not see predator perturbations
    assert np.all(J[n:, :n] == 0)


def test_newton_collapses_to_predator_only(g):
    p = figure_params("lotka-volterra", 5.0)
    theta, omega = semitrivial_states(p, g)
    st = newton_solve(0.9 * theta, 1e-3 * omega, 5.0, p, g)
    assert st.kind == "predator-only"
    assert np.abs(st.u - theta).max() < 1e-8
    assert st.residual_norm <= 1e-9


def test_newton_near_bifurcation_gives_small_coexistence(g):
    p = figure_params("lotka-volterra", 0.0)
    b = lambda_mu_bundle(p, g)
    s = 1e-2
    lam = b.lambda_mu + s * b.lambda_prime0
    st = newton_solve(s * b.phi, b.omega + s * b.psi, lam, p, g)
    assert st.kind == "coexistence" and st.is_positive
    assert st.u.max() < 0.05
    ub, vb = a_priori_bounds(p.with_lambda(lam))
    assert st.u.max() <= ub and st.v.max() <= vb


def test_forms_agree_to_second_order():
    # the u-form residual evaluated at transformed-form roots shrinks like h^2
    p = ModelParams(1.5, 2.0, 0.6, 1.0, make_motility("decreasing", "minus-dprime", a=1.0, b=1.0))
    norms = []
    for n in (64, 128, 256):
        g = build_grid(4.0, n)
        st = newton_solve(np.ones(n), np.ones(n), 1.5, p, g)
        assert st.kind == "coexistence"
        norms.append(np.abs(residual(st.u, st.v, 1.5, p, g)[0]).max())
    orders = np.log2(np.array(norms[:-1]) / np.array(norms[1:]))
    assert np.all(orders > 1.7)


def test_newton_failure_carries_history(g):
    p = figure_params("lotka-volterra", 1.5)
    with pytest.raises(ConvergenceError) as info:
        newton_solve(np.full(g.n, 3.0), np.full(g.n, 3.0), 1.5, p, g, max_iter=1)
    assert len(info.value.history) >= 1
    u, v = info.value.last
    assert u.shape == v.shape == (g.n,)


def test_bounds_check_and_kind():
    p = figure_params("lotka-volterra", 1.5)
    ub, vb = a_priori_bounds(p)
    assert vb == 2.0 and ub == pytest.approx(np.exp(2.0) * (1.5 + 0.6 * 2.0))
    with pytest.raises(InvariantBreach):
        check_a_priori_bounds(np.ones(5), np.full(5, 2.5), p)
    z = np.zeros(3)
    assert classify_kind(z, z) == "trivial"
    assert classify_kind(np.ones(3), z) == "predator-only"
    assert classify_kind(z, np.ones(3)) == "prey-only"
    assert classify_kind(np.ones(3), np.full(3, 1e-9)) == "predator-only"
