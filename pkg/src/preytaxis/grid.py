"""Uniform 1D Dirichlet grid, conservative three-point operators and quadrature.

Nodal fields are plain ``numpy`` arrays holding the ``n`` interior values;
the homogeneous Dirichlet boundary values are implicit and never stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.linalg import solve_banded

from .errors import CoefficientSignError, InvalidArgument

Coefficient = Union[float, np.ndarray, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class Grid:
    """Interior nodes ``x_i = i*h``, ``i = 1..n``, of ``(0, L)`` with ``h = L/(n+1)``."""

    L: float
    n: int

    def __post_init__(self):
        if not (self.L > 0) or not math.isfinite(self.L):
            raise InvalidArgument(f"domain length must be positive, got {self.L}")
        if int(self.n) != self.n or self.n < 3:
            raise InvalidArgument(f"need at least 3 interior nodes, got {self.n}")

    @property
    def h(self) -> float:
        return self.L / (self.n + 1)

    @property
    def x(self) -> np.ndarray:
        return self.h * np.arange(1, self.n + 1)

    @property
    def x_full(self) -> np.ndarray:
        """Nodes including both boundary points."""
        return self.h * np.arange(0, self.n + 2)

    def refined(self) -> "Grid":
        """Grid with half the spacing (every old node is still a node)."""
        return Grid(self.L, 2 * self.n + 1)

    def pad(self, values: np.ndarray) -> np.ndarray:
        """Interior values with the zero boundary values attached."""
        out = np.zeros(self.n + 2)
        out[1:-1] = values
        return out


def build_grid(L: float, n: int) -> Grid:
    return Grid(float(L), int(n))


@dataclass(frozen=True)
class TridiagonalOperator:
    """``n x n`` tridiagonal matrix stored by diagonals.

    ``sub[i]`` couples row ``i+1`` to column ``i``; ``sup[i]`` couples row ``i``
    to column ``i+1``.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    def __matmul__(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[:-1] += self.sup * x[1:]
        y[1:] += self.sub * x[:-1]
        return y

    def shifted(self, d: Union[float, np.ndarray]) -> "TridiagonalOperator":
        """Return ``self + diag(d)``."""
        return TridiagonalOperator(self.sub, self.diag + d, self.sup)

    def banded(self) -> np.ndarray:
        ab = np.zeros((3, self.n))
        ab[0, 1:] = self.sup
        ab[1] = self.diag
        ab[2, :-1] = self.sub
        return ab

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return solve_banded((1, 1), self.banded(), rhs, check_finite=False)

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sup, 1) + np.diag(self.sub, -1)

    def norm_inf(self) -> float:
        row = np.abs(self.diag).copy()
        row[:-1] += np.abs(self.sup)
        row[1:] += np.abs(self.sub)
        return float(row.max())

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.sub, self.sup))


def full_nodal(coef: Coefficient, grid: Grid, boundary=None) -> np.ndarray:
    """Coefficient values on all ``n+2`` nodes.

    Accepts a scalar, a callable of ``x``, an array over all nodes, or an
    array of interior values. For the last form the boundary values come
    from ``boundary=(left, right)``; without it the adjacent interior value
    is reused.
    """
    if callable(coef):
        return np.asarray(coef(grid.x_full), dtype=float) * np.ones(grid.n + 2)
    arr = np.asarray(coef, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.n + 2, float(arr))
    if arr.shape == (grid.n + 2,):
        return arr.copy()
    if arr.shape == (grid.n,):
        out = np.empty(grid.n + 2)
        out[1:-1] = arr
        if boundary is None:
            out[0], out[-1] = arr[0], arr[-1]
        else:
            out[0], out[-1] = boundary
        return out
    raise InvalidArgument(f"coefficient of shape {arr.shape} does not fit a grid with n={grid.n}")


def interior(coef: Coefficient, grid: Grid) -> np.ndarray:
    """Coefficient values on the interior nodes."""
    if callable(coef):
        return np.asarray(coef(grid.x), dtype=float) * np.ones(grid.n)
    arr = np.asarray(coef, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.n, float(arr))
    if arr.shape == (grid.n,):
        return arr.copy()
    if arr.shape == (grid.n + 2,):
        return arr[1:-1].copy()
    raise InvalidArgument(f"coefficient of shape {arr.shape} does not fit a grid with n={grid.n}")


def face_average(full: np.ndarray) -> np.ndarray:
    return 0.5 * (full[:-1] + full[1:])


def assemble_div_form(p: Coefficient, q: Coefficient, grid: Grid, p_boundary=None) -> TridiagonalOperator:
    """Symmetric three-point discretization of ``-(p u')' + q u`` with zero Dirichlet data.

    Face values of ``p`` are arithmetic means of the adjacent nodal values;
    at the two boundary faces the boundary value of ``p`` enters the mean
    (see :func:`full_nodal` for how it is obtained).
    """
    pf = face_average(full_nodal(p, grid, p_boundary))
    if np.any(pf <= 0) or np.any(full_nodal(p, grid, p_boundary)[1:-1] <= 0):
        raise CoefficientSignError("diffusion coefficient must be positive at every node")
    h2 = grid.h ** 2
    diag = (pf[:-1] + pf[1:]) / h2 + interior(q, grid)
    off = -pf[1:-1] / h2
    return TridiagonalOperator(off, diag, off.copy())


def integrate(values: np.ndarray, grid: Grid, boundary=(0.0, 0.0)) -> float:
    """Composite trapezoid rule; ``boundary`` gives the integrand at ``0`` and ``L``."""
    return grid.h * (float(np.sum(values)) + 0.5 * (boundary[0] + boundary[1]))


def gradient(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Nodal first derivative of a Dirichlet field.

    Centered differences, except one-sided second-order stencils at the
    first and last interior node.
    """
    f = grid.pad(values)
    h = grid.h
    out = (f[2:] - f[:-2]) / (2 * h)
    out[0] = (-3 * f[1] + 4 * f[2] - f[3]) / (2 * h)
    out[-1] = (3 * f[-2] - 4 * f[-3] + f[-4]) / (2 * h)
    return out


def _simpson(f, a, fa, b, fb):
    m = 0.5 * (a + b)
    fm = f(m)
    return m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-14, depth: int = 40) -> float:
    fa, fb = f(a), f(b)
    m, fm, whole = _simpson(f, a, fa, b, fb)
    return _asr(f, a, fa, b, fb, tol, whole, m, fm, depth)


def _asr(f, a, fa, b, fb, tol, whole, m, fm, depth):
    lm, flm, left = _simpson(f, a, fa, m, fm)
    rm, frm, right = _simpson(f, m, fm, b, fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    return (_asr(f, a, fa, m, fm, 0.5 * tol, left, lm, flm, depth - 1)
            + _asr(f, m, fm, b, fb, 0.5 * tol, right, rm, frm, depth - 1))


class TaxisPotential:
    """``g(v) = int_0^v chi/d``, tabulated once and interpolated.

    The table holds ``g`` at equally spaced nodes (adaptive Simpson per
    cell, accumulated); evaluation uses cubic Hermite interpolation with the
    exact slopes ``chi/d``, so a lookup costs O(1) per node. The table grows
    to ``1.25 *`` any argument beyond its range, up to ``table_cap``; larger
    arguments add a 32-point Gauss-Legendre integral from the table end.
    Negative arguments and very large ones only occur in intermediate Newton
    iterates; negative ones use the tangent line at 0.
    """

    table_cap = 16.0

    def __init__(self, d: Callable, chi: Callable, v_max: float = 1.0, spacing: float = 1e-3):
        self.d = d
        self.chi = chi
        self.spacing = spacing
        self.nodes = np.zeros(1)
        self.values = np.zeros(1)
        self._extend(max(float(v_max), spacing))

    def slope(self, v):
        v = np.asarray(v, dtype=float)
        d = np.asarray(self.d(v), dtype=float)
        if np.any(d <= 0):
            raise CoefficientSignError("motility d(v) must stay positive")
        return np.asarray(self.chi(v), dtype=float) / d

    def _integrand(self, t: float) -> float:
        dt = float(self.d(t))
        if dt <= 0:
            raise CoefficientSignError(f"motility d({t}) = {dt} is not positive")
        return float(self.chi(t)) / dt

    def _extend(self, v_max: float):
        top = self.nodes[-1]
        if v_max <= top or top >= self.table_cap:
            return
        v_max = min(v_max, self.table_cap / 1.25)
        ncell = int(math.ceil((1.25 * v_max - top) / self.spacing))
        new_nodes = top + self.spacing * np.arange(1, ncell + 1)
        acc = self.values[-1]
        new_vals = np.empty(ncell)
        left = top
        for k, right in enumerate(new_nodes):
            acc += adaptive_simpson(self._integrand, left, right, tol=1e-16)
            new_vals[k] = acc
            left = right
        self.nodes = np.concatenate([self.nodes, new_nodes])
        self.values = np.concatenate([self.values, new_vals])
        self._slopes = self.slope(self.nodes)

    @property
    def v_max(self) -> float:
        return float(self.nodes[-1])

    def __call__(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        vmax = float(np.max(v, initial=0.0))
        if vmax > self.nodes[-1]:
            self._extend(vmax)
        out = np.empty_like(v)
        neg = v < 0
        out[neg] = self._slopes[0] * v[neg]
        pos = ~neg
        vp = v[pos]
        dx = self.spacing
        k = np.minimum((vp / dx).astype(int), self.nodes.size - 2)
        t = (vp - self.nodes[k]) / dx
        t2, t3 = t * t, t * t * t
        h00 = 2 * t3 - 3 * t2 + 1
        h10 = t3 - 2 * t2 + t
        h01 = -2 * t3 + 3 * t2
        h11 = t3 - t2
        out[pos] = (h00 * self.values[k] + h10 * dx * self._slopes[k]
                    + h01 * self.values[k + 1] + h11 * dx * self._slopes[k + 1])
        top = float(self.nodes[-1])
        far = v > top
        if np.any(far):
            out[far] = self.values[-1] + self._tail(top, v[far])
        return out

    def _tail(self, a: float, b: np.ndarray) -> np.ndarray:
        x, w = np.polynomial.legendre.leggauss(32)
        half = 0.5 * (b - a)
        pts = (a + half)[:, None] + half[:, None] * x[None, :]
        return half * (self.slope(pts) @ w)


def quadrature_g(d: Callable, chi: Callable, v: np.ndarray, potential: TaxisPotential | None = None) -> np.ndarray:
    """Nodal values of ``g(v) = int_0^v chi(t)/d(t) dt``."""
    v = np.asarray(v, dtype=float)
    if potential is None:
        potential = TaxisPotential(d, chi, v_max=max(float(np.max(v, initial=0.0)), 1.0))
    return potential(v)
