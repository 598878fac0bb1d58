"""Principal eigenpairs and diffusive logistic solutions on a grid."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError

from .errors import CoefficientSignError, ConvergenceError
from .grid import Coefficient, Grid, TridiagonalOperator, assemble_div_form, integrate, interior


@dataclass(frozen=True)
class EigenPair:
    sigma: float
    phi: np.ndarray
    iterations: int = 0


def _rayleigh(A: TridiagonalOperator, r: np.ndarray, x: np.ndarray) -> float:
    return float(x @ (A @ x)) / float(x @ (r * x))


def principal_eigen(p: Coefficient, q: Coefficient, r: Coefficient, grid: Grid, *,
                    p_boundary=None, tol: float = 1e-12, max_iter: int = 10_000) -> EigenPair:
    """Smallest eigenvalue of ``-(p phi')' + q phi = sigma r phi`` with ``phi = 0`` on the boundary.

    Shifted inverse iteration from a Gershgorin lower bound, followed by
    Rayleigh-quotient steps once the fixed-shift phase has settled. The
    eigenvector is returned positive and normalized to ``int r phi^2 = 1``.
    """
    A = assemble_div_form(p, q, grid, p_boundary)
    rv = interior(r, grid)
    if np.any(rv <= 0):
        raise CoefficientSignError("eigenvalue weight r must be positive")
    return _principal(A, rv, grid, tol=tol, max_iter=max_iter)


def principal_eigen_operator(A: TridiagonalOperator, r: np.ndarray, grid: Grid, **kw) -> EigenPair:
    """Same as :func:`principal_eigen` for an already assembled operator."""
    return _principal(A, np.asarray(r, dtype=float) * np.ones(A.n), grid, **kw)


def _principal(A, rv, grid, tol=1e-12, max_iter=10_000):
    radius = np.abs(A.diag).copy() * 0
    radius[:-1] += np.abs(A.sup)
    radius[1:] += np.abs(A.sub)
    shift = float(np.min((A.diag - radius) / rv)) - 1.0
    scale = max(1.0, A.norm_inf() / float(rv.min()))

    x = np.sin(np.pi * grid.x / grid.L)
    sigma = _rayleigh(A, rv, x)
    fixed = A.shifted(-shift * rv)
    it = 0
    # fixed shift: monotone convergence to the principal pair from a positive start
    while it < max_iter:
        it += 1
        y = fixed.solve(rv * x)
        x = y / np.linalg.norm(y)
        new = _rayleigh(A, rv, x)
        done = abs(new - sigma) <= 1e-7 * scale
        sigma = new
        if done:
            break
    else:
        raise ConvergenceError("principal eigenvalue iteration did not converge", last=x)

    # Rayleigh refinement
    x_safe, sigma_safe = x.copy(), sigma
    for _ in range(8):
        it += 1
        try:
            y = A.shifted(-sigma * rv).solve(rv * x)
        except (LinAlgError, ValueError):
            break
        if not np.all(np.isfinite(y)):
            break
        y /= np.linalg.norm(y)
        if y.sum() < 0:
            y = -y
        new = _rayleigh(A, rv, y)
        x = y
        step = abs(new - sigma)
        sigma = new
        if step <= tol * scale:
            break

    if np.any(x <= 0) or abs(sigma - sigma_safe) > 1e-5 * scale:
        # refinement wandered off the principal pair; finish with the fixed shift
        x, sigma = x_safe, sigma_safe
        for _ in range(max_iter):
            it += 1
            y = fixed.solve(rv * x)
            x = y / np.linalg.norm(y)
            new = _rayleigh(A, rv, x)
            if abs(new - sigma) <= tol * scale:
                sigma = new
                break
            sigma = new
        else:
            raise ConvergenceError("principal eigenvalue iteration did not converge", last=x)
        if np.any(x <= 0):
            raise ConvergenceError("principal eigenvector is not positive", last=x)

    x = x / np.sqrt(integrate(rv * x * x, grid))
    return EigenPair(sigma, x, it)


@dataclass(frozen=True)
class LogisticSolution:
    theta: np.ndarray
    a: float
    p: object
    b: object
    sigma1: float
    residual: float


def logistic_residual(A: TridiagonalOperator, a: float, b: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return A @ theta - a * theta + b * theta * theta


def solve_logistic(p: Coefficient, a: float, b: Coefficient, grid: Grid, *, p_boundary=None,
                   tol: float = 1e-12, max_iter: int = 100) -> Optional[LogisticSolution]:
    """Positive solution of ``-(p theta')' = a theta - b theta^2``, or ``None`` if ``a <= sigma1(p, 0; 1)``.

    Newton from the constant super-solution ``a / min(b)``: the residual is
    convex and its Jacobian is inverse-positive above the solution, so the
    iterates decrease monotonically. A full step is kept while it remains a
    super-solution; otherwise the step is halved until the residual norm
    decreases. Iteration stops at ``tol`` on the residual sup-norm, or at the
    roundoff floor ``~ eps |A| |theta|`` of the stencil on fine grids.
    """
    A = assemble_div_form(p, 0.0, grid, p_boundary)
    bv = interior(b, grid)
    if np.any(bv <= 0):
        raise CoefficientSignError("logistic coefficient b must be positive")
    eig = principal_eigen_operator(A, np.ones(grid.n), grid)
    if a <= eig.sigma:
        return None
    theta = np.full(grid.n, a / bv.min())

    res = logistic_residual(A, a, bv, theta)
    rnorm = float(np.abs(res).max())
    history = [rnorm]
    # roundoff floor of the three-point residual
    accept = max(tol, 16 * np.finfo(float).eps * A.norm_inf() * a / bv.min())
    for _ in range(max_iter):
        if rnorm <= tol:
            break
        delta = A.shifted(-a + 2 * bv * theta).solve(-res)
        step = 1.0
        for _ in range(31):
            trial = np.maximum(theta + step * delta, 1e-14)
            tres = logistic_residual(A, a, bv, trial)
            tnorm = float(np.abs(tres).max())
            if tnorm < rnorm or (step == 1.0 and np.all(tres >= -tol) and np.all(trial <= theta)):
                break
            step *= 0.5
        else:
            if rnorm <= accept:
                break
            raise ConvergenceError("logistic Newton stalled", last=theta, history=history)
        theta, res, rnorm = trial, tres, tnorm
        history.append(rnorm)
    else:
        raise ConvergenceError("logistic Newton did not converge", last=theta, history=history)
    if rnorm > accept:
        raise ConvergenceError("logistic Newton stalled above tolerance", last=theta, history=history)
    if np.any(theta <= 0):
        raise ConvergenceError("logistic solution lost positivity", last=theta, history=history)
    return LogisticSolution(theta, float(a), p, b, eig.sigma, rnorm)


def semitrivial_states(params, grid: Grid):
    """``(theta_lambda, omega_mu)``: predator-only and prey-only profiles (``None`` if absent)."""
    d0 = float(params.d(0.0))
    pred = solve_logistic(d0, params.lam, 1.0, grid)
    prey = solve_logistic(params.D, params.mu, 1.0, grid)
    return (pred.theta if pred else None, prey.theta if prey else None)


def dirichlet_sigma1(grid: Grid) -> float:
    """Discrete ``sigma1(1, 0; 1)`` in closed form, ``(4/h^2) sin^2(pi h / (2L))``."""
    return 4.0 / grid.h ** 2 * np.sin(np.pi * grid.h / (2 * grid.L)) ** 2
