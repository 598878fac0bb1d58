"""Flat ``section.key = value`` run configuration.

Grammar (one entry per line)::

    # comment
    section.key = value

Blank lines and ``#`` comments are ignored; a key may appear once; unknown
keys and malformed values are errors carrying the line number. Every key
has a default, listed in :data:`SCHEMA`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .errors import ConfigError, InvalidArgument
from .grid import Grid
from .model import (RESPONSE_LABELS, ModelParams, make_motility, make_response, validate_hypotheses)

COMMANDS = ("eig", "logistic", "thresholds", "steady", "branch", "simulate", "sweep", "figure2", "figure4")


def _float(text: str) -> float:
    x = float(text)
    if not math.isfinite(x):
        raise ValueError("value must be finite")
    return x


def _int(text: str) -> int:
    return int(text)


def _floats(text: str) -> tuple:
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(_float(s) for s in items)


def _choice(*options) -> Callable:
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    parse.options = options
    return parse


def _start(text: str):
    """Initial profile: ``figure`` (``0.1 + 0.1 sin 5x``) or a constant."""
    if text == "figure":
        return text
    return _float(text)


def _str(text: str) -> str:
    return text


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


# (parser, default, description)
SCHEMA = {
    "run.command": (_choice("", *COMMANDS), "", "command used when none is given on the command line"),
    "model.F": (_choice(*RESPONSE_LABELS), "lotka-volterra", "response function"),
    "model.zeta": (_float, 1.0, "half-saturation constant of the Holling responses"),
    "model.d": (_choice("constant", "decreasing"), "constant", "predator motility d(v)"),
    "model.d_value": (_float, 1.0, "value of a constant d"),
    "model.a": (_float, 1.0, "a in d = 1 + a/(1 + b v)"),
    "model.b": (_float, 1.0, "b in d = 1 + a/(1 + b v)"),
    "model.chi": (_choice("constant", "zero", "minus-dprime"), "constant", "taxis sensitivity chi(v)"),
    "model.chi_value": (_float, 1.0, "value of a constant chi"),
    "model.lambda": (_float, 1.5, "predator growth rate"),
    "model.mu": (_float, 2.0, "prey growth rate"),
    "model.gamma": (_float, 0.6, "conversion rate"),
    "model.D": (_float, 1.0, "prey diffusion rate"),
    "grid.L": (_float, 4.0, "domain length"),
    "grid.n": (_int, 256, "number of interior nodes"),
    "solver.tol": (_float, 1e-9, "Newton and corrector residual tolerance"),
    "solver.max_iter": (_int, 50, "Newton iteration cap"),
    "solver.threshold": (_float, 1e-8, "sup-norm below which a component counts as absent"),
    "solver.ds0": (_float, 0.01, "initial arclength step"),
    "solver.ds_min": (_float, 1e-5, "smallest arclength step"),
    "solver.ds_max": (_float, 0.1, "largest arclength step"),
    "solver.lambda_cap": (_float, 50.0, "continuation stops beyond this lambda"),
    "solver.max_steps": (_int, 10000, "continuation step budget"),
    "solver.max_folds": (_int, 20, "continuation fold budget"),
    "time.dt": (_float, 1e-3, "time step"),
    "time.T": (_float, 500.0, "final time"),
    "time.stride": (_int, 1000, "steps between stored snapshots"),
    "time.steady_tol": (_float, 1e-8, "time-derivative tolerance of the long-time limit"),
    "time.regime_threshold": (_float, 1e-2, "sup-norm threshold of the regime classification"),
    "time.u0": (_start, "figure", "initial predator density: figure or a constant"),
    "time.v0": (_start, "figure", "initial prey density: figure or a constant"),
    "steady.u0": (_start, 1.0, "Newton start for the predator: figure or a constant"),
    "steady.v0": (_start, 1.0, "Newton start for the prey: figure or a constant"),
    "eig.p": (_float, 1.0, "diffusion coefficient"),
    "eig.q": (_float, 0.0, "potential"),
    "eig.r": (_float, 1.0, "weight"),
    "logistic.p": (_float, 1.0, "diffusion coefficient"),
    "logistic.a": (_float, 2.0, "growth rate"),
    "logistic.b": (_float, 1.0, "crowding coefficient"),
    "sweep.command": (_choice("eig", "logistic", "thresholds", "steady", "branch", "simulate"), "steady",
                      "command repeated over the lambda ladder"),
    "sweep.lambdas": (_floats, (-1.0, 1.5, 5.0), "lambda ladder of sweep and of the thresholds stability table"),
    "output.dir": (_str, "out", "output directory"),
}

_HYPOTHESIS_KEYS = {"H_d": "model.d", "H_chi": "model.chi", "H_F": "model.F", "F=vFr": "model.F"}


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: {k: v[1] for k, v in SCHEMA.items()})
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def command(self) -> str:
        return self.values["run.command"]

    def with_values(self, **changes) -> "RunConfig":
        new = dict(self.values)
        for k, v in changes.items():
            new[k.replace("__", ".")] = v
        return RunConfig(new, dict(self.lines))

    @property
    def params(self) -> ModelParams:
        v = self.values
        try:
            return ModelParams(
                lam=v["model.lambda"], mu=v["model.mu"], gamma=v["model.gamma"], D=v["model.D"],
                motility=make_motility(v["model.d"], v["model.chi"], d_value=v["model.d_value"],
                                       a=v["model.a"], b=v["model.b"], chi_value=v["model.chi_value"]),
                response=make_response(v["model.F"], v["model.zeta"]))
        except InvalidArgument as exc:
            raise ConfigError(str(exc)) from None

    @property
    def grid(self) -> Grid:
        try:
            return Grid(self.values["grid.L"], self.values["grid.n"])
        except ValueError as exc:
            line = self.lines.get("grid.n") if "nodes" in str(exc) else self.lines.get("grid.L")
            raise ConfigError(str(exc), line) from None

    def validate(self) -> "RunConfig":
        """Instantiate the grid and model functions and check the sign hypotheses on ``[0, mu]``."""
        self.grid
        try:
            params = self.params
        except ConfigError as exc:
            raise ConfigError(str(exc), self._model_line()) from None
        report = validate_hypotheses(params, v_max=params.mu)
        for check in report.failures():
            key = _HYPOTHESIS_KEYS[check.name]
            raise ConfigError(f"hypothesis {check.name} ({check.detail}) fails at v = {check.first_violation}",
                              self.lines.get(key))
        return self

    def _model_line(self):
        rows = [n for k, n in self.lines.items() if k.startswith("model.")]
        return max(rows) if rows else None


def parse_config(text: str, validate: bool = True) -> RunConfig:
    """Parse configuration text; see the module docstring for the grammar."""
    cfg = RunConfig()
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        set_entry(cfg, line, number)
    return cfg.validate() if validate else cfg


def set_entry(cfg: RunConfig, entry: str, line=None) -> None:
    """Apply one ``section.key = value`` entry in place."""
    if "=" not in entry:
        raise ConfigError(f"expected 'section.key = value', got {entry!r}", line)
    key, value = (s.strip() for s in entry.split("=", 1))
    if key not in SCHEMA:
        raise ConfigError(f"unknown key {key!r}", line)
    if line is not None and key in cfg.lines:
        raise ConfigError(f"duplicate key {key!r} (first on line {cfg.lines[key]})", line)
    parser = SCHEMA[key][0]
    try:
        cfg.values[key] = parser(value)
    except ValueError as exc:
        raise ConfigError(f"bad value {value!r} for {key}: {exc}", line) from None
    if line is not None:
        cfg.lines[key] = line


def serialize_config(cfg: RunConfig) -> str:
    """Text that parses back to an equal configuration (every key written)."""
    out, section = [], None
    for key in SCHEMA:
        sec = key.split(".")[0]
        if sec != section:
            if section is not None:
                out.append("")
            section = sec
        out.append(f"{key} = {_fmt(cfg.values[key])}")
    return "\n".join(out) + "\n"
