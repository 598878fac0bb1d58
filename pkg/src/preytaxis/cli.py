"""Command-line front end.

    preytaxis COMMAND [--config FILE] [--set section.key=value ...] [--out DIR] [--workers K]

Numeric results go to CSV files with 17 significant digits; profiles go to
two-column ``x value`` text files. Errors end the run with a nonzero exit
code (2 configuration, 3 convergence, 4 precondition, 5 invariant breach)
and one ``error code=... type=... message=...`` line on standard error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .bifurcation import (classify_semitrivial, lambda_mu_bundle, lambda_star, nonexistence_lower_bound)
from .config import COMMANDS, RunConfig, parse_config, serialize_config, set_entry
from .continuation import Controls, branch_from_prey_bifurcation
from .errors import ConfigError, NotApplicable, PreytaxisError, StateMissing
from .grid import Grid, integrate
from .scalar import principal_eigen, solve_logistic
from .steady import newton_solve
from .timestepper import SimulationConfig, classify_regime, figure_initial, simulate

log = logging.getLogger(__name__)

FIGURE_LAMBDAS = (-1.0, 1.5, 5.0)


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])
    return path


def write_profile(path: Path, grid: Grid, values) -> Path:
    """Two-column ``x value`` file including the zero boundary values."""
    x = grid.x_full
    y = grid.pad(np.asarray(values, dtype=float))
    with open(path, "w") as fh:
        for a, b in zip(x, y):
            fh.write(f"{fmt(a)} {fmt(b)}\n")
    return path


def _start(value, grid: Grid):
    if value == "figure":
        return figure_initial(grid)
    return np.full(grid.n, float(value))


def _controls(cfg: RunConfig, **over) -> Controls:
    c = Controls(ds0=cfg["solver.ds0"], ds_min=cfg["solver.ds_min"], ds_max=cfg["solver.ds_max"],
                 lambda_cap=cfg["solver.lambda_cap"], max_steps=cfg["solver.max_steps"],
                 max_folds=cfg["solver.max_folds"], tol=cfg["solver.tol"])
    for k, v in over.items():
        setattr(c, k, v)
    return c


# commands: each takes (cfg, out_dir) and returns a list of summary rows (header, row)

def cmd_eig(cfg: RunConfig, out: Path):
    grid = cfg.grid
    eig = principal_eigen(cfg["eig.p"], cfg["eig.q"], cfg["eig.r"], grid)
    header, row = ["sigma1", "iterations"], [eig.sigma, eig.iterations]
    write_csv(out / "eig.csv", header, [row])
    write_profile(out / "eig_phi.dat", grid, eig.phi)
    return header, row


def cmd_logistic(cfg: RunConfig, out: Path):
    grid = cfg.grid
    sol = solve_logistic(cfg["logistic.p"], cfg["logistic.a"], cfg["logistic.b"], grid)
    header = ["a", "exists", "sigma1", "max_theta", "residual"]
    if sol is None:
        sigma = principal_eigen(cfg["logistic.p"], 0.0, 1.0, grid).sigma
        row = [cfg["logistic.a"], 0, sigma, 0.0, 0.0]
    else:
        row = [cfg["logistic.a"], 1, sol.sigma1, float(sol.theta.max()), sol.residual]
        write_profile(out / "logistic_theta.dat", grid, sol.theta)
    write_csv(out / "logistic.csv", header, [row])
    return header, row


def cmd_thresholds(cfg: RunConfig, out: Path):
    params, grid = cfg.params, cfg.grid
    bundle = lambda_mu_bundle(params, grid)
    try:
        lstar = lambda_star(params.mu, params, grid)
    except NotApplicable:
        lstar = float("nan")
    lower = nonexistence_lower_bound(params, grid)
    header = ["lambda_mu", "lambda_star", "nonexistence_lower", "lambda_prime0"]
    row = [bundle.lambda_mu, lstar, lower, bundle.lambda_prime0]
    write_csv(out / "thresholds.csv", header, [row])
    table = []
    for lam in cfg["sweep.lambdas"]:
        prey = classify_semitrivial("prey-only", lam, params, grid)
        try:
            pred = classify_semitrivial("predator-only", lam, params, grid)
            pv, pm = pred.verdict, pred.margin
        except StateMissing:
            pv, pm = "absent", float("nan")
        table.append([lam, prey.verdict, prey.margin, pv, pm])
    write_csv(out / "stability.csv",
              ["lambda", "prey_only", "prey_only_margin", "predator_only", "predator_only_margin"], table)
    write_profile(out / "bifurcation_Phi.dat", grid, bundle.Phi)
    write_profile(out / "bifurcation_psi.dat", grid, bundle.psi)
    return header, row


def cmd_steady(cfg: RunConfig, out: Path):
    params, grid = cfg.params, cfg.grid
    st = newton_solve(_start(cfg["steady.u0"], grid), _start(cfg["steady.v0"], grid), params.lam, params, grid,
                      tol=cfg["solver.tol"], max_iter=cfg["solver.max_iter"], threshold=cfg["solver.threshold"])
    header = ["lambda", "kind", "residual", "iterations", "max_u", "max_v"]
    row = [st.lam, st.kind, st.residual_norm, st.iterations, float(st.u.max()), float(st.v.max())]
    write_csv(out / "steady.csv", header, [row])
    write_profile(out / "steady_u.dat", grid, st.u)
    write_profile(out / "steady_v.dat", grid, st.v)
    return header, row


def cmd_branch(cfg: RunConfig, out: Path):
    params, grid = cfg.params, cfg.grid
    br = branch_from_prey_bifurcation(None, params, grid, _controls(cfg))
    proj = br.projections()
    write_csv(out / "branch.csv", ["index", "s", "lambda", "max_u", "max_v", "projection", "residual"],
              [[i, p.s, p.lam, float(p.u.max()), float(p.v.max()), proj[i], p.residual]
               for i, p in enumerate(br.points)])
    x = grid.x
    rows = ([i, p.lam, x[j], p.u[j], p.v[j]] for i, p in enumerate(br.points) for j in range(grid.n))
    write_csv(out / "branch_profiles.csv", ["index", "lambda", "x", "u", "v"], rows)
    with open(out / "branch_diagram.dat", "w") as fh:
        for p in br.points:
            fh.write(f"{fmt(p.lam)} {fmt(float(p.u.max()))}\n")
    lo, hi = br.lambda_interval
    header = ["origin", "endpoint", "points", "folds", "lambda_mu", "lambda_prime0", "lambda_min", "lambda_max"]
    row = [br.origin, br.endpoint, len(br.points), br.folds, br.bundle.lambda_mu, br.bundle.lambda_prime0, lo, hi]
    write_csv(out / "branch_summary.csv", header, [row])
    return header, row


def _simulate_row(cfg: RunConfig, out: Path, tag: str = ""):
    params, grid = cfg.params, cfg.grid
    u0, v0 = _start(cfg["time.u0"], grid), _start(cfg["time.v0"], grid)
    sc = SimulationConfig(params, grid, u0, v0, dt=cfg["time.dt"], T=cfg["time.T"], stride=cfg["time.stride"])
    tr = simulate(sc)
    regime = classify_regime(tr.u, tr.v, cfg["time.regime_threshold"])
    write_profile(out / f"simulate{tag}_u.dat", grid, tr.u)
    write_profile(out / f"simulate{tag}_v.dat", grid, tr.v)
    x = grid.x
    rows = ([t, x[j], us[j], vs[j]] for t, us, vs in zip(tr.times, tr.u_snapshots, tr.v_snapshots)
            for j in range(grid.n))
    write_csv(out / f"simulate{tag}_snapshots.csv", ["t", "x", "u", "v"], rows)
    header = ["lambda", "regime", "t_final", "dt", "max_u", "max_v", "sup_v_run", "mass_u", "mass_v"]
    row = [params.lam, regime, tr.t_final, tr.dt, float(tr.u.max()), float(tr.v.max()), tr.max_v,
           integrate(tr.u, grid), integrate(tr.v, grid)]
    return header, row


def cmd_simulate(cfg: RunConfig, out: Path):
    header, row = _simulate_row(cfg, out)
    write_csv(out / "simulate.csv", header, [row])
    return header, row


def _sweep_job(args):
    text, command, lam, sub = args
    cfg = parse_config(text, validate=False)
    cfg = cfg.with_values(**{"model__lambda": lam})
    sub = Path(sub)
    sub.mkdir(parents=True, exist_ok=True)
    return SINGLE[command](cfg, sub)


def _pool_map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def cmd_sweep(cfg: RunConfig, out: Path, workers: int = 1):
    command = cfg["sweep.command"]
    text = serialize_config(cfg)
    lams = cfg["sweep.lambdas"]
    jobs = [(text, command, lam, str(out / f"{command}_{i:03d}")) for i, lam in enumerate(lams)]
    results = _pool_map(_sweep_job, jobs, workers)
    header = ["index"] + list(results[0][0])
    rows = [[i] + list(r[1]) for i, r in enumerate(results)]
    write_csv(out / "sweep.csv", header, rows)
    return header, rows[-1]


def _figure_job(args):
    text, lam, out, tag = args
    cfg = parse_config(text, validate=False).with_values(model__lambda=lam)
    return _simulate_row(cfg, Path(out), tag)


def cmd_figure(cfg: RunConfig, out: Path, response: str, name: str, workers: int = 1):
    """Canned reproduction: published parameters, lambda in {-1, 1.5, 5}; grid and time keys are honored."""
    fig = cfg.with_values(model__F=response, model__zeta=1.0, model__d="constant", model__d_value=1.0,
                          model__chi="constant", model__chi_value=1.0, model__mu=2.0, model__gamma=0.6,
                          model__D=1.0, time__u0="figure", time__v0="figure")
    text = serialize_config(fig)
    jobs = [(text, lam, str(out), f"_{name}_{i}") for i, lam in enumerate(FIGURE_LAMBDAS)]
    results = _pool_map(_figure_job, jobs, workers)
    header = results[0][0]
    rows = [r[1] for r in results]
    write_csv(out / f"{name}.csv", header, rows)
    for r in rows:
        print(f"{name} lambda={fmt(r[0])} regime={r[1]}")
    return header, rows[-1]


SINGLE = {"eig": cmd_eig, "logistic": cmd_logistic, "thresholds": cmd_thresholds, "steady": cmd_steady,
          "branch": cmd_branch, "simulate": cmd_simulate}


def run(command: str, cfg: RunConfig, out: Path, workers: int = 1):
    """Execute ``command``; returns the summary ``(header, row)``."""
    out.mkdir(parents=True, exist_ok=True)
    if command in SINGLE:
        return SINGLE[command](cfg, out)
    if command == "sweep":
        return cmd_sweep(cfg, out, workers)
    if command == "figure2":
        return cmd_figure(cfg, out, "lotka-volterra", "figure2", workers)
    if command == "figure4":
        return cmd_figure(cfg, out, "holling3", "figure4", workers)
    raise ConfigError(f"unknown command {command!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="preytaxis", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", nargs="?", choices=COMMANDS, help="command (defaults to run.command)")
    ap.add_argument("--config", help="configuration file (section.key = value lines)")
    ap.add_argument("--set", action="append", default=[], metavar="section.key=value", help="override one key")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--workers", type=int, default=1, help="worker processes for sweep and figure commands")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text, validate=False)
        for entry in args.set:
            set_entry(cfg, entry)
        cfg.validate()
        command = args.command or cfg.command
        if not command:
            raise ConfigError("no command given")
        out = Path(args.out or cfg["output.dir"])
        header, row = run(command, cfg, out, max(1, args.workers))
        print(",".join(header))
        print(",".join(fmt(x) for x in row))
        return 0
    except PreytaxisError as exc:
        code = exc.exit_code
        print(f"error code={code} type={type(exc).__name__} message={exc}", file=sys.stderr)
        return code
    except OSError as exc:
        print(f"error code=2 type={type(exc).__name__} message={exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
