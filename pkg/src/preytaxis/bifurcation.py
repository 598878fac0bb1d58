"""Bifurcation quantities along the semitrivial branches.

The prey-only branch ``(lam, 0, omega_mu)`` loses stability at ``lambda_mu``,
the principal eigenvalue of the weighted problem

    -(d(omega) e^g Phi')' - gamma F(omega) e^g Phi = lambda_mu e^g Phi,  g = g(omega),

and coexistence states bifurcate there with slope ``lambda_prime0``. When
``F'(0) > 0`` the predator-only branch changes stability at ``lambda_star``,
where ``mu = sigma1(D, theta_lambda F'(0); 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DivergenceError, NotApplicable, StateMissing
from .grid import Grid, assemble_div_form, gradient, integrate
from .model import ModelParams
from .scalar import principal_eigen, solve_logistic


@dataclass(frozen=True)
class BifurcationBundle:
    lambda_mu: float
    Phi: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    lambda_prime0: float
    omega: np.ndarray
    expg: np.ndarray


@dataclass(frozen=True)
class StabilityVerdict:
    kind: str
    verdict: str
    margin: float

    @property
    def stable(self) -> bool:
        return self.verdict == "stable"


def prey_state(params: ModelParams, grid: Grid) -> np.ndarray:
    sol = solve_logistic(params.D, params.mu, 1.0, grid)
    if sol is None:
        raise StateMissing(f"no prey-only state: mu = {params.mu} <= D sigma1")
    return sol.theta


def predator_state(lam: float, params: ModelParams, grid: Grid) -> np.ndarray:
    sol = solve_logistic(float(params.d(0.0)), lam, 1.0, grid)
    if sol is None:
        raise StateMissing(f"no predator-only state: lambda = {lam} <= d(0) sigma1")
    return sol.theta


def weighted_coefficients(omega: np.ndarray, params: ModelParams, grid: Grid):
    """``(p, q, r)`` of the eigenproblem defining ``lambda_mu``; ``p`` includes boundary values."""
    V = grid.pad(omega)
    E = np.exp(params.g(V))
    p = params.d(V) * E
    q = -params.gamma * params.F(omega) * E[1:-1]
    return p, q, E[1:-1]


def lambda_mu_bundle(params: ModelParams, grid: Grid) -> BifurcationBundle:
    omega = prey_state(params, grid)
    p, q, r = weighted_coefficients(omega, params, grid)
    eig = principal_eigen(p, q, r, grid)
    Phi = eig.phi
    phi = r * Phi
    A = assemble_div_form(params.D, 2 * omega - params.mu, grid)
    psi = A.solve(-params.F(omega) * r * Phi)
    partial = BifurcationBundle(eig.sigma, Phi, phi, psi, float("nan"), omega, r)
    lp = lambda_prime0(partial, params, grid)
    return BifurcationBundle(eig.sigma, Phi, phi, psi, lp, omega, r)


def lambda_prime0(bundle: BifurcationBundle, params: ModelParams, grid: Grid) -> float:
    """Slope of ``lambda`` along the bifurcating curve at ``s = 0`` (trapezoid quadrature)."""
    om, E, Phi, psi = bundle.omega, bundle.expg, bundle.Phi, bundle.psi
    d, dd, chi = params.d(om), params.dd(om), params.chi(om)
    F, dF = params.F(om), params.dF(om)
    grad2 = gradient(Phi, grid) ** 2
    gp = chi / d
    num = (integrate((dd + chi) * E * psi * grad2, grid)
           + integrate(E * E * Phi ** 3, grid)
           - bundle.lambda_mu * integrate(gp * E * psi * Phi ** 2, grid)
           - params.gamma * integrate((dF + gp * F) * E * psi * Phi ** 2, grid))
    return num / integrate(E * Phi ** 2, grid)


def sigma1(grid: Grid) -> float:
    return principal_eigen(1.0, 0.0, 1.0, grid).sigma


def mu_lambda(lam: float, params: ModelParams, grid: Grid) -> float:
    """``sigma1(D, theta_lambda F'(0); 1)``; equals ``D sigma1`` at the predator threshold."""
    theta = predator_state(lam, params, grid)
    return principal_eigen(params.D, theta * params.response.slope0, 1.0, grid).sigma


def lambda_star(mu: float, params: ModelParams, grid: Grid, bracket=None, tol: float = 1e-8) -> float:
    """Predator growth rate at which ``(theta_lambda, 0)`` changes stability, for prey rate ``mu``.

    Bracketed root of ``mu_lambda - mu`` (``mu_lambda`` increases with
    ``lambda``); the upper end starts at ``d(0) sigma1 + mu`` and doubles its
    offset until the sign changes.
    """
    if params.response.slope0 <= 0:
        raise NotApplicable("lambda_star needs F'(0) > 0")
    s1 = sigma1(grid)
    if mu <= params.D * s1:
        raise StateMissing(f"mu = {mu} <= D sigma1 = {params.D * s1}")
    lo = float(params.d(0.0)) * s1

    def f(lam):
        if lam <= lo:
            return params.D * s1 - mu
        return mu_lambda(lam, params, grid) - mu

    if bracket is not None:
        lo, hi = bracket
    else:
        hi, step = lo + mu, mu
        for _ in range(60):
            if f(hi) > 0:
                break
            step *= 2
            hi = lo + step
        else:
            raise DivergenceError("could not bracket lambda_star")
    return brentq(f, lo, hi, xtol=tol, rtol=1e-14)


def classify_semitrivial(which: str, lam: float, params: ModelParams, grid: Grid) -> StabilityVerdict:
    """Linear stability of ``(theta_lambda, 0)`` (``predator-only``) or ``(0, omega_mu)`` (``prey-only``).

    The margin is the decisive principal eigenvalue: ``mu_lambda - mu`` for
    the predator-only state (``D sigma1 - mu`` when ``F'(0) = 0``) and
    ``lambda_mu - lambda`` for the prey-only state. Positive margin means stable.
    """
    if which == "predator-only":
        theta = predator_state(lam, params, grid)
        margin = principal_eigen(params.D, theta * params.response.slope0, 1.0, grid).sigma - params.mu
    elif which == "prey-only":
        margin = lambda_mu_bundle(params, grid).lambda_mu - lam
    else:
        raise ValueError(f"unknown semitrivial state {which!r}")
    return StabilityVerdict(which, "stable" if margin > 0 else "unstable", float(margin))


def nonexistence_lower_bound(params: ModelParams, grid: Grid, zero_tol: float = 1e-10) -> float:
    """A value of ``lambda`` at or below which no positive steady state exists."""
    mu = params.mu
    if mu <= params.D * sigma1(grid):
        raise StateMissing("mu <= D sigma1: there is no positive steady state for any lambda")
    s_grid = np.linspace(0.0, mu, 2001)
    fmax = float(np.max(params.F(s_grid)))
    eg = float(np.exp(params.g(np.array([mu]))[0]))
    dmu = float(params.d(mu))
    q = -params.gamma * eg * fmax
    s = principal_eigen(dmu, q, 1.0, grid).sigma
    if abs(s) <= zero_tol:
        return 0.0
    if s > 0:
        return principal_eigen(dmu, q, eg, grid).sigma
    return s
