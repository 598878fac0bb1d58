"""Pseudo-arclength continuation of the coexistence branch from ``(lambda_mu, 0, omega_mu)``.

Unknowns are ``X = (w, v, lambda)`` with ``w = exp(-g(v)) u``. Distances use
``|X|^2 = int e^{g(omega)} w^2 + int v^2 + lambda^2`` (trapezoid), the same
weighting that normalizes the bifurcation eigenfunction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import spsolve

from .bifurcation import BifurcationBundle, lambda_mu_bundle, predator_state, prey_state, weighted_coefficients
from .errors import BifurcationStartError, StateMissing
from .grid import Grid
from .model import ModelParams
from .scalar import principal_eigen
from .steady import check_a_priori_bounds, dresidual_dlambda_w, jacobian_w, residual_w, untransform_w

log = logging.getLogger(__name__)

HITS_GAMMA_U = "hits-gamma-u"
HITS_GAMMA_V = "hits-gamma-v"
LAMBDA_CAP = "reached-lambda-cap"
FOLD_COUNT = "fold-count"
STEP_FAILURE = "step-failure"


@dataclass
class Controls:
    ds0: float = 0.01
    ds_min: float = 1e-5
    ds_max: float = 0.1
    grow: float = 1.3
    grow_after: int = 3
    lambda_cap: float = 50.0
    max_steps: int = 10_000
    max_folds: int = 20
    tol: float = 1e-9
    corrector_iter: int = 12
    start_halvings: int = 10
    zero_sup: float = 1e-6
    semitrivial_dist: float = 1e-4


@dataclass
class BranchPoint:
    lam: float
    u: np.ndarray
    v: np.ndarray
    s: float
    residual: float = 0.0

    @property
    def positive(self) -> bool:
        return bool(np.all(self.u > 0) and np.all(self.v > 0))


@dataclass
class Branch:
    points: list
    origin: str
    endpoint: Optional[str] = None
    folds: int = 0
    bundle: Optional[BifurcationBundle] = None
    start: Optional[BranchPoint] = None
    h: float = 0.0

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])

    @property
    def lambda_interval(self):
        lams = self.lambdas
        return float(lams.min()), float(lams.max())

    def projections(self) -> np.ndarray:
        """Coordinate ``s`` of each point along the kernel direction, ``int u Phi_mu``."""
        return np.array([np.sum(p.u * self.bundle.Phi) for p in self.points]) * self.h


def count_folds(lams) -> int:
    dl = np.diff(np.asarray(lams, dtype=float))
    dl = dl[dl != 0]
    return int(np.sum(np.sign(dl[1:]) != np.sign(dl[:-1])))


def classify_endpoint(tail, params: ModelParams, grid: Grid, controls: Controls = Controls(),
                      omega: Optional[np.ndarray] = None) -> Optional[str]:
    """Numerical reading of where a branch ends, from its last points.

    Returns one of the endpoint labels, or ``None`` for an interior point.
    """
    last = tail[-1]
    zs, dist = controls.zero_sup, controls.semitrivial_dist
    if np.max(np.abs(last.u)) < zs:
        if omega is None:
            omega = prey_state(params, grid)
        if np.max(np.abs(last.v - omega)) < dist:
            return HITS_GAMMA_V
    if np.max(np.abs(last.v)) < zs:
        try:
            theta = predator_state(last.lam, params, grid)
        except StateMissing:
            theta = None
        if theta is not None and np.max(np.abs(last.u - theta)) < dist:
            return HITS_GAMMA_U
    if last.lam > controls.lambda_cap:
        return LAMBDA_CAP
    if count_folds([p.lam for p in tail]) > controls.max_folds:
        return FOLD_COUNT
    return None


def bifurcation_point_scan(params: ModelParams, grid: Grid, lambda_range=None, samples: int = 41,
                           tol: float = 1e-12) -> list:
    """Values of ``lambda`` where the predator linearization at ``(0, omega_mu)`` becomes singular.

    ``kappa(lambda)`` is the principal eigenvalue (unit weight) of the
    transformed predator Jacobian block at ``u = 0``; it decreases strictly in
    ``lambda``. Sign changes on a uniform scan of ``lambda_range`` (default
    ``[-mu - 10, mu + 10]``) are refined by Brent's method.
    """
    omega = prey_state(params, grid)
    p, q0, E = weighted_coefficients(omega, params, grid)

    def kappa(lam):
        return principal_eigen(p, q0 - lam * E, 1.0, grid).sigma

    if lambda_range is None:
        lambda_range = (-params.mu - 10.0, params.mu + 10.0)
    lams = np.linspace(lambda_range[0], lambda_range[1], samples)
    ks = np.array([kappa(l) for l in lams])
    found = []
    for i in range(samples - 1):
        if ks[i] == 0.0:
            found.append(float(lams[i]))
        elif ks[i] * ks[i + 1] < 0:
            found.append(float(brentq(kappa, lams[i], lams[i + 1], xtol=tol, rtol=4 * np.finfo(float).eps)))
    if ks[-1] == 0.0:
        found.append(float(lams[-1]))
    return found


class _System:
    """Extended (pseudo-arclength) system around a fixed parameter set."""

    def __init__(self, params: ModelParams, grid: Grid, weight: np.ndarray, controls: Controls):
        self.params, self.grid, self.c = params, grid, controls
        n = grid.n
        self.n = n
        self.W = np.concatenate([grid.h * weight, np.full(n, grid.h), [1.0]])

    def split(self, X):
        n = self.n
        return X[:n], X[n:2 * n], X[-1]

    def norm(self, X) -> float:
        return float(np.sqrt(np.sum(self.W * X * X)))

    def residual(self, X) -> np.ndarray:
        w, v, lam = self.split(X)
        r1, r2 = residual_w(w, v, lam, self.params, self.grid)
        return np.concatenate([r1, r2])

    def correct(self, Xp, Xprev, t, ds):
        """Newton on ``R(X) = 0``, ``<t, X - Xprev>_W = ds`` from predictor ``Xp``."""
        X = Xp.copy()
        tw = self.W * t
        for _ in range(self.c.corrector_iter):
            w, v, lam = self.split(X)
            R = self.residual(X)
            N = float(tw @ (X - Xprev)) - ds
            rnorm = float(np.abs(R).max())
            if rnorm <= self.c.tol and abs(N) <= 1e-12:
                return X, rnorm
            J = jacobian_w(w, v, lam, self.params, self.grid)
            col = dresidual_dlambda_w(w, v, self.params)[:, None]
            M = sp.bmat([[J, sp.csr_matrix(col)],
                         [sp.csr_matrix(tw[None, :-1]), sp.csr_matrix([[tw[-1]]])]], format="csc")
            dX = spsolve(M, -np.concatenate([R, [N]]))
            if not np.all(np.isfinite(dX)):
                return None, np.inf
            X = X + dX
        R = self.residual(X)
        rnorm = float(np.abs(R).max())
        N = float(tw @ (X - Xprev)) - ds
        if rnorm <= self.c.tol and abs(N) <= 1e-10:
            return X, rnorm
        return None, rnorm

    def point(self, X, s, rnorm) -> BranchPoint:
        w, v, lam = self.split(X)
        return BranchPoint(float(lam), untransform_w(w, v, self.params), v.copy(), float(s), rnorm)


def branch_from_prey_bifurcation(bundle: Optional[BifurcationBundle], params: ModelParams, grid: Grid,
                                 controls: Controls = Controls()) -> Branch:
    """Trace the coexistence branch emanating from ``(lambda_mu, 0, omega_mu)`` in the ``+s`` direction."""
    if bundle is None:
        bundle = lambda_mu_bundle(params, grid)
    c = controls
    sysm = _System(params, grid, bundle.expg, c)
    n = grid.n
    X0 = np.concatenate([np.zeros(n), bundle.omega, [bundle.lambda_mu]])
    t = np.concatenate([bundle.Phi, bundle.psi, [bundle.lambda_prime0]])
    t /= sysm.norm(t)

    branch = Branch([], "bifurcation-from-gamma-v", bundle=bundle, h=grid.h)
    branch.start = BranchPoint(bundle.lambda_mu, np.zeros(n), bundle.omega.copy(), 0.0)

    # first step: local curve predictor, halved until the corrector lands on a positive state
    ds = c.ds0
    for _ in range(c.start_halvings + 1):
        X, rn = sysm.correct(X0 + ds * t, X0, t, ds)
        if X is not None and _positive(sysm, X):
            break
        ds *= 0.5
    else:
        raise BifurcationStartError("could not leave the bifurcation point")
    arclen = ds
    pts = [sysm.point(X, arclen, rn)]
    Xprev, Xcur = X0, X
    successes = 0
    ds = min(max(ds, c.ds_min), c.ds_max)

    for _ in range(c.max_steps):
        t = Xcur - Xprev
        t /= sysm.norm(t)
        Xn, rn = sysm.correct(Xcur + ds * t, Xcur, t, ds)
        if Xn is None:
            if ds <= c.ds_min:
                branch.endpoint = STEP_FAILURE
                break
            ds = max(0.5 * ds, c.ds_min)
            successes = 0
            continue

        if not _positive(sysm, Xn):
            end = _locate_crossing(sysm, Xcur, t, ds, Xn)
            if end is None:
                if ds <= c.ds_min:
                    branch.endpoint = STEP_FAILURE
                    break
                ds = max(0.5 * ds, c.ds_min)
                continue
            Xe, dse, rne = end
            pts.append(sysm.point(Xe, arclen + dse, rne))
            branch.endpoint = classify_endpoint(pts[-3:], params, grid, c, bundle.omega) or STEP_FAILURE
            break

        arclen += ds
        pts.append(sysm.point(Xn, arclen, rn))
        check_a_priori_bounds(pts[-1].u, pts[-1].v, params.with_lambda(pts[-1].lam))
        Xprev, Xcur = Xcur, Xn
        label = classify_endpoint(pts[-max(3, 2 * c.max_folds + 3):], params, grid, c, bundle.omega)
        if label is None and count_folds([p.lam for p in pts]) > c.max_folds:
            label = FOLD_COUNT
        if label is not None:
            branch.endpoint = label
            break
        successes += 1
        if successes >= c.grow_after:
            ds = min(ds * c.grow, c.ds_max)
            successes = 0
    else:
        branch.endpoint = STEP_FAILURE

    branch.points = pts
    branch.folds = count_folds([branch.start.lam] + [p.lam for p in pts])
    return branch


def _positive(sysm: _System, X) -> bool:
    w, v, _ = sysm.split(X)
    return bool(np.all(w > 0) and np.all(v > 0))


def _locate_crossing(sysm: _System, Xcur, t, ds, Xbad):
    """Shorten the last step so the branch ends next to the semitrivial branch it crossed.

    The signed coordinate is the integral of whichever component lost
    positivity; its zero along the step is bracketed and solved for, then the
    step is backed off until the point is positive with that component's
    sup-norm below ``zero_sup``. Returns ``None`` when no clean crossing is
    found (the caller then shortens the step).
    """
    n = sysm.n
    sl = slice(n, 2 * n) if Xbad[n:2 * n].min() <= 0 else slice(0, n)
    if np.sum(Xbad[sl]) >= 0:
        return None
    zs = sysm.c.zero_sup

    def m(a):
        X, _ = sysm.correct(Xcur + a * t, Xcur, t, a)
        if X is None:
            raise _Fail
        return float(np.sum(X[sl]))

    try:
        a_star = brentq(m, 0.0, ds, xtol=1e-13 * ds, rtol=4 * np.finfo(float).eps)
    except (_Fail, ValueError):
        return None
    delta = a_star * 0.1 * zs / float(np.max(Xcur[sl]))
    for _ in range(60):
        b = a_star - delta
        X, rn = sysm.correct(Xcur + b * t, Xcur, t, b)
        if X is None:
            return None
        p = sysm.point(X, 0.0, rn)
        comp = p.v if sl.start == n else p.u
        if not p.positive:
            delta *= 2.0
        elif np.max(comp) >= zs:
            delta *= 0.5
        else:
            return X, b, rn
    return None


class _Fail(Exception):
    pass
