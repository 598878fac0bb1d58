"""IMEX integrator for the time-dependent predator-prey system with prey-taxis.

Per step, with ``v`` frozen at the old level: implicit diffusion (three-point,
face-averaged ``d(v)`` for the predator, constant ``D`` for the prey),
explicit first-order upwind taxis flux ``u chi(v) v_x``, explicit reaction.
Under the step restriction checked every step, the explicit part is a
nonnegative combination and the implicit matrices are M-matrices, so
densities stay nonnegative up to roundoff.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg.lapack import dgtsv, dgttrf, dgttrs

from .errors import InvariantBreach, PositivityError, UnstableStep
from .grid import Grid, face_average
from .model import ModelParams
from .steady import SteadyState, newton_solve

log = logging.getLogger(__name__)

REGIME_THRESHOLD = 1e-2
CLAMP_TOL = 1e-12
# densities below this are flushed to zero every FLUSH_EVERY steps (avoids subnormal arithmetic)
TINY = 1e-250
FLUSH_EVERY = 64


def figure_initial(grid: Grid) -> np.ndarray:
    """``0.1 + 0.1 sin(5x)`` at the interior nodes (boundary values are zero)."""
    return 0.1 + 0.1 * np.sin(5 * grid.x)


@dataclass
class SimulationConfig:
    params: ModelParams
    grid: Grid
    u0: np.ndarray
    v0: np.ndarray
    dt: float = 1e-3
    T: float = 500.0
    stride: int = 1000
    auto_halve: bool = True
    steady_tol: Optional[float] = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.T < self.dt:
            raise ValueError("T must be at least dt")
        self.u0 = np.asarray(self.u0, dtype=float)
        self.v0 = np.asarray(self.v0, dtype=float)
        if self.u0.shape != (self.grid.n,) or self.v0.shape != (self.grid.n,):
            raise ValueError("initial data must have one value per interior node")
        if self.u0.min() < 0 or self.v0.min() < 0:
            raise ValueError("initial data must be nonnegative")


@dataclass
class Trajectory:
    times: np.ndarray
    u_snapshots: np.ndarray
    v_snapshots: np.ndarray
    u: np.ndarray
    v: np.ndarray
    t_final: float
    dt: float
    regime: str
    max_v: float
    rate: float = np.inf
    converged: bool = False
    steps: int = 0


def classify_regime(u, v, threshold: float = REGIME_THRESHOLD) -> str:
    up, vp = np.max(u) > threshold, np.max(v) > threshold
    if up and vp:
        return "coexistence"
    if up:
        return "predator-only"
    if vp:
        return "prey-only"
    return "trivial"


class IMEXStepper:
    """One IMEX step of fixed size ``dt``.

    With constant ``d`` and ``chi`` (catalog ``constant/constant`` or
    ``constant/zero`` motility) both implicit matrices are factored once.
    """

    def __init__(self, params: ModelParams, grid: Grid, dt: float):
        self.p, self.grid, self.dt = params, grid, dt
        n, h2 = grid.n, grid.h ** 2
        self.vfac = _factor(np.full(n - 1, -dt * params.D / h2), np.full(n, 1.0 + 2 * dt * params.D / h2))
        label = params.motility.label
        self.const_d = label.startswith("constant/")
        self.const_chi = label.split("/")[-1] in ("constant", "zero")
        self.chi0 = float(params.chi(0.0))
        if self.const_d:
            d0 = float(params.d(0.0))
            self.ufac = _factor(np.full(n - 1, -dt * d0 / h2), np.full(n, 1.0 + 2 * dt * d0 / h2))
        self.U = np.zeros(n + 2)
        self.V = np.zeros(n + 2)

    def taxis_flux(self, U: np.ndarray, V: np.ndarray):
        """Upwind face fluxes ``u chi(v) v_x`` on the ``n+1`` faces, and the face velocities."""
        dv = np.diff(V) / self.grid.h
        a = self.chi0 * dv if self.const_chi else face_average(self.p.chi(V)) * dv
        return a * np.where(a > 0, U[:-1], U[1:]), a

    def step(self, u: np.ndarray, v: np.ndarray):
        p, dt, h = self.p, self.dt, self.grid.h
        U, V = self.U, self.V
        U[1:-1] = u
        V[1:-1] = v
        J, a = self.taxis_flux(U, V)
        Fr = p.response.reduced(v)
        F = v * Fr
        ru = p.lam - u + p.gamma * F
        # explicit-part coefficients of u_i and v_i must stay nonnegative
        out = (np.maximum(a[1:], 0) - np.minimum(a[:-1], 0)) / h
        worst = dt * max(float((out + np.maximum(-ru, 0)).max()),
                         float(np.max(u * Fr + v - p.mu, initial=0.0)))
        if worst > 1.0:
            raise UnstableStep(f"explicit step restriction exceeded (factor {worst:.3g}); reduce dt")

        ustar = u + dt * (u * ru - np.diff(J) / h)
        vstar = v + dt * (v * (p.mu - v) - u * F)
        if self.const_d:
            un = _solve(self.ufac, ustar)
        else:
            df = face_average(p.d(V))
            off = -dt * df[1:-1] / (h * h)
            diag = 1.0 + dt * (df[:-1] + df[1:]) / (h * h)
            _, _, _, un, info = dgtsv(off, diag, off.copy(), ustar, overwrite_b=True)
            if info:
                raise UnstableStep("tridiagonal solve failed")
        vn = _solve(self.vfac, vstar)
        for name, arr in (("u", un), ("v", vn)):
            lo = arr.min()
            if lo < 0:
                if lo < -CLAMP_TOL:
                    raise PositivityError(f"{name} dropped to {lo:.3e} below zero")
                np.maximum(arr, 0.0, out=arr)
        return un, vn


def _factor(off, diag):
    fac = dgttrf(off, diag, off.copy())
    if fac[-1]:
        raise UnstableStep("tridiagonal factorization failed")
    return fac[:-1]


def _solve(fac, b):
    x, info = dgttrs(*fac, b)
    return x


def simulate(config: SimulationConfig) -> Trajectory:
    """Integrate to ``T`` (or until the time derivative is below ``steady_tol``).

    On an explicit step-restriction violation the step is halved and the
    run restarted when ``auto_halve`` is set.
    """
    dt = config.dt
    while True:
        try:
            return _run(config, dt)
        except UnstableStep:
            if not config.auto_halve or dt < 1e-8:
                raise
            dt *= 0.5
            log.info("halving dt to %g", dt)


def _run(config: SimulationConfig, dt: float) -> Trajectory:
    p = config.params
    stepper = IMEXStepper(p, config.grid, dt)
    u, v = config.u0.copy(), config.v0.copy()
    vcap = max(float(v.max(initial=0.0)), p.mu) * (1 + 1e-6)
    nsteps = int(round(config.T / dt))
    stride = max(1, int(config.stride * config.dt / dt))
    times, us, vs = [0.0], [u.copy()], [v.copy()]
    max_v = float(v.max(initial=0.0))
    rate = np.inf
    converged = False
    k = 0
    for k in range(1, nsteps + 1):
        un, vn = stepper.step(u, v)
        if config.steady_tol is not None:
            rate = max(float(np.abs(un - u).max()), float(np.abs(vn - v).max())) / dt
        u, v = un, vn
        if k % FLUSH_EVERY == 0:
            u[u < TINY] = 0.0
            v[v < TINY] = 0.0
        vm = float(v.max())
        if vm > max_v:
            max_v = vm
            if vm > vcap:
                raise InvariantBreach(f"prey exceeded its comparison bound: {vm} > {vcap}")
        if k % stride == 0:
            times.append(k * dt)
            us.append(u.copy())
            vs.append(v.copy())
        if config.steady_tol is not None and rate < config.steady_tol:
            converged = True
            break
    if times[-1] != k * dt:
        times.append(k * dt)
        us.append(u.copy())
        vs.append(v.copy())
    return Trajectory(np.array(times), np.array(us), np.array(vs), u, v, k * dt, dt,
                      classify_regime(u, v), max_v, rate, converged, k)


def steady_limit(config: SimulationConfig, tolerance: float = 1e-8) -> Optional[SteadyState]:
    """Long-time limit polished by Newton, or ``None`` if the run did not settle by ``T``."""
    cfg = SimulationConfig(config.params, config.grid, config.u0, config.v0, config.dt, config.T,
                           config.stride, config.auto_halve, steady_tol=tolerance)
    traj = simulate(cfg)
    if not traj.converged:
        return None
    return newton_solve(traj.u, traj.v, config.params.lam, config.params, config.grid)
