"""Coupled steady system: residuals, Jacobians, and the damped Newton solver.

Two discretizations of the predator equation are provided. The central
form discretizes the flux ``d(v) u' - u chi(v) v'`` with averaged face
values. The transformed form works with ``w = exp(-g(v)) u``, where the flux
becomes ``d(v) e^{g(v)} w'`` and the principal part is self-adjoint. Newton
runs on the transformed form, and all returned states are its roots. The two
forms agree to O(h^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .errors import ConvergenceError, InvariantBreach, SignChangingRoot
from .grid import Grid, face_average
from .model import ModelParams

ZERO_THRESHOLD = 1e-8


def transform_w(u, v, params: ModelParams) -> np.ndarray:
    return np.exp(-params.g(v)) * u


def untransform_w(w, v, params: ModelParams) -> np.ndarray:
    return np.exp(params.g(v)) * w


def _pad(a):
    out = np.zeros(a.size + 2)
    out[1:-1] = a
    return out


def _laplacian(D: float, grid: Grid) -> sp.csr_matrix:
    h2 = grid.h ** 2
    n = grid.n
    return sp.diags([np.full(n - 1, -D / h2), np.full(n, 2 * D / h2), np.full(n - 1, -D / h2)],
                    [-1, 0, 1], format="csr")


def _div_of_faces(dL: np.ndarray, dR: np.ndarray, h: float) -> sp.csr_matrix:
    """Jacobian of ``-(J_{i+1/2} - J_{i-1/2})/h`` given face derivatives.

    ``dL[j]``, ``dR[j]`` are the derivatives of the flux at face ``j`` (between
    full-grid nodes ``j`` and ``j+1``) with respect to its left and right node.
    """
    diag = -(dL[1:] - dR[:-1]) / h
    sup = -dR[1:-1] / h
    sub = dL[1:-1] / h
    return sp.diags([sub, diag, sup], [-1, 0, 1], format="csr")


def prey_residual(u, v, params: ModelParams, grid: Grid) -> np.ndarray:
    V = _pad(v)
    lap = (V[2:] - 2 * V[1:-1] + V[:-2]) / grid.h ** 2
    return -params.D * lap - params.mu * v + v * v + u * params.F(v)


def residual(u, v, lam, params: ModelParams, grid: Grid):
    """Central-flux residual of the steady system in ``(u, v)`` variables."""
    h = grid.h
    U, V = _pad(u), _pad(v)
    df = face_average(params.d(V))
    cf = face_average(params.chi(V))
    flux = df * np.diff(U) / h - face_average(U) * cf * np.diff(V) / h
    r1 = -np.diff(flux) / h - lam * u + u * u - params.gamma * u * params.F(v)
    return r1, prey_residual(u, v, params, grid)


def residual_w(w, v, lam, params: ModelParams, grid: Grid):
    """Residual in ``(w, v)`` variables with the self-adjoint predator flux."""
    h = grid.h
    W, V = _pad(w), _pad(v)
    E = np.exp(params.g(V))
    cf = face_average(params.d(V) * E)
    flux = cf * np.diff(W) / h
    u = E[1:-1] * w
    r1 = -np.diff(flux) / h - lam * u + u * u - params.gamma * u * params.F(v)
    return r1, prey_residual(u, v, params, grid)


def jacobian(u, v, lam, params: ModelParams, grid: Grid) -> sp.csr_matrix:
    """Analytic Jacobian of :func:`residual` with respect to ``(u, v)``, as a ``2n x 2n`` sparse matrix."""
    h = grid.h
    U, V = _pad(u), _pad(v)
    dU, dV = np.diff(U) / h, np.diff(V) / h
    dn, ddn = params.d(V), params.dd(V)
    chin, dchin = params.chi(V), params.dchi(V)
    df, cf, uf = face_average(dn), face_average(chin), face_average(U)

    # flux = df*dU - uf*cf*dV
    Juu = _div_of_faces(-df / h - 0.5 * cf * dV, df / h - 0.5 * cf * dV, h)
    Juv = _div_of_faces(0.5 * ddn[:-1] * dU - uf * (0.5 * dchin[:-1] * dV - cf / h),
                        0.5 * ddn[1:] * dU - uf * (0.5 * dchin[1:] * dV + cf / h), h)
    F, dF = params.F(v), params.dF(v)
    g = params.gamma
    Juu = Juu + sp.diags(-lam + 2 * u - g * F)
    Juv = Juv + sp.diags(-g * u * dF)
    Jvu = sp.diags(F)
    Jvv = _laplacian(params.D, grid) + sp.diags(-params.mu + 2 * v + u * dF)
    return sp.bmat([[Juu, Juv], [Jvu, Jvv]], format="csr")


def jacobian_w(w, v, lam, params: ModelParams, grid: Grid) -> sp.csr_matrix:
    """Analytic Jacobian of :func:`residual_w` with respect to ``(w, v)``."""
    h = grid.h
    W, V = _pad(w), _pad(v)
    E = np.exp(params.g(V))
    dn = params.d(V)
    chin = params.chi(V)
    C = dn * E
    dC = (params.dd(V) + chin) * E
    dW = np.diff(W) / h
    cf = face_average(C)

    Jww = _div_of_faces(-cf / h, cf / h, h)
    Jwv = _div_of_faces(0.5 * dC[:-1] * dW, 0.5 * dC[1:] * dW, h)
    Ei, gp = E[1:-1], (chin / dn)[1:-1]
    u = Ei * w
    F, dF = params.F(v), params.dF(v)
    g = params.gamma
    kin = lam - 2 * u + g * F
    Jww = Jww + sp.diags(-Ei * kin)
    Jwv = Jwv + sp.diags(-gp * u * kin - g * u * dF)
    Jvw = sp.diags(Ei * F)
    Jvv = _laplacian(params.D, grid) + sp.diags(-params.mu + 2 * v + gp * u * F + u * dF)
    return sp.bmat([[Jww, Jwv], [Jvw, Jvv]], format="csr")


def dresidual_dlambda_w(w, v, params: ModelParams) -> np.ndarray:
    u = untransform_w(w, v, params)
    return np.concatenate([-u, np.zeros_like(v)])


def a_priori_bounds(params: ModelParams):
    """Sup-norm bounds on positive steady states: ``(u_max, v_max)``.

    ``v <= mu`` and ``u <= exp(g(mu)) (|lam| + gamma max_{[0,mu]} F)``.
    """
    s = np.linspace(0.0, params.mu, 2001)
    fmax = float(np.max(params.F(s)))
    gmu = float(params.g(np.array([params.mu]))[0])
    return float(np.exp(gmu) * (abs(params.lam) + params.gamma * fmax)), float(params.mu)


def check_a_priori_bounds(u, v, params: ModelParams, slack: float = 1e-8):
    ub, vb = a_priori_bounds(params)
    if np.max(v) > vb * (1 + slack) or np.max(u) > ub * (1 + slack):
        raise InvariantBreach(
            f"a priori bound violated: max u = {np.max(u):.6g} (bound {ub:.6g}), "
            f"max v = {np.max(v):.6g} (bound {vb:.6g})")


def classify_kind(u, v, threshold: float = ZERO_THRESHOLD) -> str:
    up, vp = np.max(np.abs(u)) > threshold, np.max(np.abs(v)) > threshold
    if up and vp:
        return "coexistence"
    if up:
        return "predator-only"
    if vp:
        return "prey-only"
    return "trivial"


@dataclass
class SteadyState:
    lam: float
    u: np.ndarray
    v: np.ndarray
    residual_norm: float
    kind: str
    iterations: int = 0
    history: list = field(default_factory=list)

    @property
    def is_positive(self) -> bool:
        return bool(np.all(self.u > 0) and np.all(self.v > 0))


def _norm_w(w, v, lam, params, grid):
    r1, r2 = residual_w(w, v, lam, params, grid)
    return r1, r2, max(float(np.abs(r1).max()), float(np.abs(r2).max()))


def newton_solve(u0, v0, lam: float, params: ModelParams, grid: Grid, *, tol: float = 1e-9,
                 max_iter: int = 50, threshold: float = ZERO_THRESHOLD,
                 check_bounds: bool = True) -> SteadyState:
    """Damped Newton on the transformed system from the initial guess ``(u0, v0)``.

    Steps are halved (at most 30 times) until the residual sup-norm
    decreases. Raises :class:`ConvergenceError` carrying the last iterate and
    the residual history on failure, and :class:`SignChangingRoot` when the
    root found has negative nodal values.
    """
    params = params.with_lambda(lam)
    n = grid.n
    v = np.array(v0, dtype=float)
    w = transform_w(np.asarray(u0, dtype=float), v, params)
    r1, r2, rnorm = _norm_w(w, v, lam, params, grid)
    history = [rnorm]
    it = 0
    while rnorm > tol:
        if it >= max_iter:
            raise ConvergenceError(f"Newton did not converge in {max_iter} iterations (residual {rnorm:.3e})",
                                   last=(untransform_w(w, v, params), v), history=history)
        it += 1
        J = jacobian_w(w, v, lam, params, grid)
        delta = spsolve(J.tocsc(), -np.concatenate([r1, r2]))
        if not np.all(np.isfinite(delta)):
            raise ConvergenceError("singular Newton system", last=(untransform_w(w, v, params), v),
                                   history=history)
        step = 1.0
        for _ in range(31):
            wt, vt = w + step * delta[:n], v + step * delta[n:]
            # overshooting trials may overflow; a non-finite norm just fails the test below
            with np.errstate(over="ignore", invalid="ignore"):
                t1, t2, tn = _norm_w(wt, vt, lam, params, grid)
            if tn < rnorm:
                break
            step *= 0.5
        else:
            raise ConvergenceError(f"Newton line search failed (residual {rnorm:.3e})",
                                   last=(untransform_w(w, v, params), v), history=history)
        w, v, r1, r2, rnorm = wt, vt, t1, t2, tn
        history.append(rnorm)

    u = untransform_w(w, v, params)
    kind = classify_kind(u, v, threshold)
    if min(u.min(), v.min()) < -threshold:
        raise SignChangingRoot("Newton converged to a root with negative values", last=(u, v), history=history)
    # components classified as absent are roundoff; store them as exact zeros
    if kind in ("prey-only", "trivial"):
        u = np.zeros(n)
    if kind in ("predator-only", "trivial"):
        v = np.zeros(n)
    if kind != "coexistence":
        rnorm = max(rnorm, _norm_w(transform_w(u, v, params), v, lam, params, grid)[2])
    elif check_bounds:
        check_a_priori_bounds(u, v, params)
    return SteadyState(float(lam), u, v, rnorm, kind, it, history)
