"""Model functions ``d``, ``chi``, ``F`` and the scalar parameters.

Response functions carry their analytic derivative and the reduced form
``Fr`` with ``F(v) = v * Fr(v)``; at ``v = 0`` the reduced form equals
``F'(0)``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import InvalidArgument
from .grid import TaxisPotential

RESPONSE_LABELS = ("lotka-volterra", "holling2", "holling3", "holling4")


def _const(c):
    return lambda v: np.full(np.shape(v), float(c)) if np.ndim(v) else float(c)


@dataclass(frozen=True)
class ResponseFunction:
    label: str
    F: Callable
    dF: Callable
    reduced: Callable
    zeta: Optional[float] = None

    def __call__(self, v):
        return self.F(v)

    @property
    def slope0(self) -> float:
        """``F'(0)``; zero for Holling III."""
        return float(self.dF(0.0))


def make_response(label: str, zeta: float = 1.0) -> ResponseFunction:
    """Catalog response function by label."""
    if label == "lotka-volterra":
        return ResponseFunction(label, lambda v: v * 1.0, _const(1.0), _const(1.0))
    if not zeta > 0:
        raise InvalidArgument(f"zeta must be positive, got {zeta}")
    z = float(zeta)
    if label == "holling2":
        return ResponseFunction(label, lambda v: v / (z + v), lambda v: z / (z + v) ** 2,
                                lambda v: 1.0 / (z + v), z)
    if label == "holling3":
        return ResponseFunction(label, lambda v: v * v / (z + v * v),
                                lambda v: 2 * z * v / (z + v * v) ** 2,
                                lambda v: v / (z + v * v), z)
    if label == "holling4":
        return ResponseFunction(label, lambda v: v / (z + v * v),
                                lambda v: (z - v * v) / (z + v * v) ** 2,
                                lambda v: 1.0 / (z + v * v), z)
    raise InvalidArgument(f"unknown response function {label!r}")


def custom_response(F: Callable, dF: Callable, reduced: Callable | None = None) -> ResponseFunction:
    """Wrap user closures; ``reduced`` defaults to ``F(v)/v`` with value ``F'(0)`` at 0."""
    if reduced is None:
        def reduced(v):
            v = np.asarray(v, dtype=float)
            safe = np.where(v == 0, 1.0, v)
            return np.where(v == 0, dF(0.0), F(safe) / safe)
    return ResponseFunction("custom", F, dF, reduced)


@dataclass(frozen=True)
class Motility:
    """Predator motility ``d(v)`` with derivative, and taxis sensitivity ``chi(v)``.

    ``dchi`` is needed only by the Jacobian of the central-flux residual;
    when omitted it is approximated by a central difference.
    """

    d: Callable
    dd: Callable
    chi: Callable
    dchi: Optional[Callable] = None
    label: str = "custom"

    def chi_prime(self, v):
        if self.dchi is not None:
            return self.dchi(v)
        eps = 1e-6
        return (np.asarray(self.chi(v + eps)) - np.asarray(self.chi(v - eps))) / (2 * eps)

    @cached_property
    def potential(self) -> TaxisPotential:
        return TaxisPotential(self.d, self.chi, v_max=4.0)

    def g(self, v):
        return self.potential(v)


def make_motility(d: str = "constant", chi: str = "constant", *, d_value: float = 1.0,
                  a: float = 1.0, b: float = 1.0, chi_value: float = 1.0) -> Motility:
    """Catalog motility.

    ``d``: ``constant`` (``d_value``) or ``decreasing`` (``1 + a/(1 + b v)``).
    ``chi``: ``constant`` (``chi_value``), ``zero``, or ``minus-dprime`` (``chi = -d'``).
    """
    if d == "constant":
        if not d_value > 0:
            raise InvalidArgument("d_value must be positive")
        dfun, ddfun = _const(d_value), _const(0.0)
    elif d == "decreasing":
        if not (a > 0 and b > 0):
            raise InvalidArgument("a and b must be positive")
        dfun = lambda v: 1.0 + a / (1.0 + b * v)
        ddfun = lambda v: -a * b / (1.0 + b * v) ** 2
    else:
        raise InvalidArgument(f"unknown motility {d!r}")

    if chi == "constant":
        chifun, dchifun = _const(chi_value), _const(0.0)
    elif chi == "zero":
        chifun, dchifun = _const(0.0), _const(0.0)
    elif chi == "minus-dprime":
        chifun = lambda v: -np.asarray(ddfun(v)) * 1.0
        if d == "decreasing":
            dchifun = lambda v: -2.0 * a * b * b / (1.0 + b * v) ** 3
        else:
            dchifun = _const(0.0)
    else:
        raise InvalidArgument(f"unknown taxis sensitivity {chi!r}")
    return Motility(dfun, ddfun, chifun, dchifun, label=f"{d}/{chi}")


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the predator (u) / prey (v) system.

    ``lam`` is the predator growth rate (the bifurcation parameter), ``mu``
    the prey growth rate, ``gamma`` the predation gain, ``D`` the prey
    diffusion rate.
    """

    lam: float
    mu: float
    gamma: float
    D: float
    motility: Motility = field(default_factory=make_motility)
    response: ResponseFunction = field(default_factory=lambda: make_response("lotka-volterra"))

    def __post_init__(self):
        for name in ("mu", "D"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be positive, got {getattr(self, name)}")
        # gamma = 0 decouples the predator from the prey; kept as a limiting case
        if not self.gamma >= 0:
            raise InvalidArgument(f"gamma must be nonnegative, got {self.gamma}")

    def with_lambda(self, lam: float) -> "ModelParams":
        return dataclasses.replace(self, lam=float(lam))

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    # shorthands used throughout the solvers
    def d(self, v):
        return np.asarray(self.motility.d(v), dtype=float) * np.ones(np.shape(v))

    def dd(self, v):
        return np.asarray(self.motility.dd(v), dtype=float) * np.ones(np.shape(v))

    def chi(self, v):
        return np.asarray(self.motility.chi(v), dtype=float) * np.ones(np.shape(v))

    def dchi(self, v):
        return np.asarray(self.motility.chi_prime(v), dtype=float) * np.ones(np.shape(v))

    def g(self, v):
        return self.motility.g(v)

    def F(self, v):
        return np.asarray(self.response.F(v), dtype=float) * np.ones(np.shape(v))

    def dF(self, v):
        return np.asarray(self.response.dF(v), dtype=float) * np.ones(np.shape(v))


def figure_params(response: str = "lotka-volterra", lam: float = 1.5) -> ModelParams:
    """Parameter set of the published simulations on ``(0, 4)``.

    ``d = 1``, ``chi = 1``, ``D = 1``, ``mu = 2``, ``gamma = 0.6``; response
    ``v`` or ``v^2/(1+v^2)``.
    """
    return ModelParams(lam=lam, mu=2.0, gamma=0.6, D=1.0,
                       motility=make_motility("constant", "constant"),
                       response=make_response(response, 1.0))


@dataclass
class HypothesisCheck:
    name: str
    passed: bool
    first_violation: Optional[float] = None
    detail: str = ""


@dataclass
class HypothesisReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> HypothesisCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self):
        return [c for c in self.checks if not c.passed]


def _first(mask, samples):
    idx = np.flatnonzero(mask)
    return float(samples[idx[0]]) if idx.size else None


def validate_hypotheses(params: ModelParams, v_max: float, samples: int = 1000) -> HypothesisReport:
    """Sample ``d, d', chi, F, Fr`` on ``[0, v_max]`` and report each sign hypothesis."""
    if not v_max > 0:
        raise InvalidArgument("v_max must be positive")
    s = np.linspace(0.0, v_max, samples)
    m, r = params.motility, params.response
    d = np.asarray(m.d(s)) * np.ones_like(s)
    dd = np.asarray(m.dd(s)) * np.ones_like(s)
    chi = np.asarray(m.chi(s)) * np.ones_like(s)
    F = np.asarray(r.F(s)) * np.ones_like(s)
    Fr = np.asarray(r.reduced(s)) * np.ones_like(s)

    bad_d = (d <= 0) | (dd > 0)
    bad_chi = chi < 0
    bad_F = (F[1:] <= 0)
    checks = [
        HypothesisCheck("H_d", not bad_d.any(), _first(bad_d, s), "d > 0 and d' <= 0"),
        HypothesisCheck("H_chi", not bad_chi.any(), _first(bad_chi, s), "chi >= 0"),
    ]
    f0 = float(np.asarray(r.F(0.0)))
    if f0 != 0.0:
        checks.append(HypothesisCheck("H_F", False, 0.0, "F(0) must vanish"))
    else:
        checks.append(HypothesisCheck("H_F", not bad_F.any(), _first(bad_F, s[1:]), "F(0) = 0, F > 0"))
    bad_red = np.abs(F - s * Fr) > 1e-12 * np.maximum(1.0, np.abs(F))
    checks.append(HypothesisCheck("F=vFr", not bad_red.any(), _first(bad_red, s), "F(v) = v Fr(v)"))
    return HypothesisReport(checks)
