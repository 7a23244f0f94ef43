"""Command-line interface: ``symphonic solve | oracle | residual | sweep``.

Every option can come from a flag or from a flat JSON object passed with
``--config`` (field names as printed by ``--help`` with dashes replaced by
underscores); explicit flags win over the file, and the file wins over the
built-in defaults.  A report written by ``solve`` is accepted as ``--config``
too, through its ``config`` member.

Exit codes: 0 success, 1 usage or invalid input, 2 numerical failure
(non-convergence, no shooting bracket), 3 cross-check failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import multiprocessing
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .euler_lagrange import DEFAULT_MARGIN, nodal_slopes, residual, residual_sup
from .functional import DEFAULT_QUAD_POINTS, Grid, Profile, evaluate_J, make_grid
from .geometry import HALF_PI, ProblemConfig
from .shooting import BracketFailure, ShootingOptions, compare, shoot
from .solver import InvalidInit, SolverOptions, minimize

log = logging.getLogger("symphonic")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_XCHECK = 0, 1, 2, 3
PROFILE_HEADER = ["t", "phi", "phi_prime", "residual"]
TRAJECTORY_HEADER = ["t", "phi", "psi"]
ENDPOINT_TOL = 1e-9
THREADS_ENV = "SYMPHONIC_THREADS"

# name -> (type, default, help); a default of None marks a required value
CONFIG_OPTIONS = {
    "mode": (str, "join", "join or hopf"),
    "m1": (int, None, "dimension of the first sphere factor (required)"),
    "m2": (int, None, "dimension of the second sphere factor (required)"),
    "a": (float, 1.0, "first axis of the domain ellipsoid"),
    "b": (float, 1.0, "second axis of the domain ellipsoid"),
    "c": (float, 1.0, "first axis of the target ellipsoid"),
    "d": (float, 1.0, "second axis of the target ellipsoid"),
    "norm1": (float, 0.0, "squared pullback norm of the first input map"),
    "norm2": (float, 0.0, "squared pullback norm of the second input map"),
    "r1": (float, 1.0, "radius of the first factor (bookkeeping only)"),
    "r2": (float, 1.0, "radius of the second factor (bookkeeping only)"),
}
GRID_OPTIONS = {
    "n": (int, 200, "number of grid cells"),
    "grading": (str, "uniform", "uniform or graded"),
    "strength": (float, 1.0, "grading strength (graded grids only)"),
    "quad_points": (int, DEFAULT_QUAD_POINTS, "Gauss-Legendre points per cell"),
    "delta": (float, DEFAULT_MARGIN, "endpoint margin of the reported residual"),
}
SOLVER_OPTIONS = {
    "init": (str, "linear", "initial profile: linear or random"),
    "seed": (int, 0, "seed of the random initial profile"),
    "max_iters": (int, SolverOptions.max_iters, "iteration cap"),
    "grad_tol": (float, SolverOptions.grad_tol, "projected-gradient tolerance"),
    "metric": (str, SolverOptions.metric, "descent metric: curvature or euclidean"),
}
SHOOT_OPTIONS = {
    "eps": (float, ShootingOptions.eps, "integration starts at eps and ends at pi/2 - eps"),
    "rk_steps": (int, ShootingOptions.rk_steps, "number of RK4 steps"),
    "slope_lo": (float, ShootingOptions.slope_lo, "lower end of the amplitude bracket"),
    "slope_hi": (float, ShootingOptions.slope_hi, "upper end of the amplitude bracket"),
    "bisect_tol": (float, ShootingOptions.bisect_tol, "relative bracket width that stops bisection"),
    "target_tol": (float, ShootingOptions.target_tol, "end-value tolerance that stops bisection"),
    "ansatz": (str, ShootingOptions.ansatz, "start ansatz: linear or power"),
    "xcheck_tol": (float, 2e-2, "largest accepted shooting/minimizer sup-difference"),
}
ALL_OPTIONS = {**CONFIG_OPTIONS, **GRID_OPTIONS, **SOLVER_OPTIONS, **SHOOT_OPTIONS}
NUMERIC_AXES = ("m1", "m2", "a", "b", "c", "d", "norm1", "norm2", "r1", "r2")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_options(parser, table, title):
    group = parser.add_argument_group(title)
    for name, (kind, default, text) in table.items():
        shown = "required" if default is None else f"default: {default}"
        group.add_argument(
            "--" + name.replace("_", "-"), dest=name, type=kind, default=None,
            help=f"{text} ({shown})",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="symphonic", description="Reduced symphonic maps between ellipsoids.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, shooting=False):
        p.add_argument("--config", type=Path, help="JSON file with option values (flags win)")
        _add_options(p, CONFIG_OPTIONS, "problem")
        _add_options(p, GRID_OPTIONS, "grid")
        _add_options(p, SOLVER_OPTIONS, "solver")
        if shooting:
            _add_options(p, SHOOT_OPTIONS, "shooting")

    p = sub.add_parser("solve", help="minimize the discrete energy and export the profile")
    common(p)
    p.add_argument("--out", required=True, help="output prefix")

    p = sub.add_parser("oracle", help="cross-check the minimizer against shooting")
    common(p, shooting=True)
    p.add_argument("--out", required=True, help="output prefix")

    p = sub.add_parser("residual", help="evaluate residual and energy of a profile CSV")
    p.add_argument("profile", type=Path, help="CSV with header t,phi,phi_prime,residual")
    p.add_argument("--config", type=Path, help="JSON file with option values (flags win)")
    _add_options(p, CONFIG_OPTIONS, "problem")
    _add_options(p, {k: GRID_OPTIONS[k] for k in ("quad_points", "delta")}, "evaluation")
    p.add_argument("--out", help="optional output prefix for a JSON report")

    p = sub.add_parser("sweep", help="solve along one numeric config axis")
    common(p, shooting=True)
    p.add_argument("--axis", required=True, help="numeric config field to vary")
    values = p.add_mutually_exclusive_group(required=True)
    values.add_argument("--values", type=float, nargs="+", help="explicit axis values")
    values.add_argument("--range", type=float, nargs=3, metavar=("LO", "HI", "COUNT"), help="linear range")
    p.add_argument("--with-oracle", action="store_true", help="also shoot and report s_star per row")
    p.add_argument("--out", required=True, help="output prefix")
    return parser


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if isinstance(data, dict) and isinstance(data.get("config"), dict):
        data = data["config"]
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    unknown = sorted(set(data) - set(ALL_OPTIONS))
    if unknown:
        raise UsageError(f"unknown config fields: {', '.join(unknown)}")
    return data


def resolve(args: argparse.Namespace, names) -> dict:
    """Effective option values: defaults, then the config file, then explicit flags."""
    from_file = _load_config(getattr(args, "config", None))
    out = {}
    for name in names:
        kind, default, _ = ALL_OPTIONS[name]
        value = getattr(args, name, None)
        if value is None:
            value = from_file.get(name, default)
        if value is None:
            raise UsageError(f"missing required option --{name.replace('_', '-')}")
        try:
            if kind is int and isinstance(value, float) and not value.is_integer():
                raise ValueError
            out[name] = kind(value)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"option {name} expects {kind.__name__}, got {value!r}") from exc
    return out


def _problem(opts: dict) -> ProblemConfig:
    try:
        return ProblemConfig(**{k: opts[k] for k in CONFIG_OPTIONS})
    except ValueError as exc:
        raise UsageError(f"invalid problem: {exc}") from exc


def _grid(opts: dict) -> Grid:
    try:
        return make_grid(opts["n"], opts["grading"], opts["strength"], opts["quad_points"])
    except ValueError as exc:
        raise UsageError(f"invalid grid: {exc}") from exc


def _solver_options(opts: dict) -> SolverOptions:
    try:
        return SolverOptions(max_iters=opts["max_iters"], grad_tol=opts["grad_tol"], seed=opts["seed"],
                             metric=opts["metric"])
    except ValueError as exc:
        raise UsageError(f"invalid solver options: {exc}") from exc


def _shooting_options(opts: dict) -> ShootingOptions:
    try:
        return ShootingOptions(**{k: opts[k] for k in SHOOT_OPTIONS if k != "xcheck_tol"})
    except ValueError as exc:
        raise UsageError(f"invalid shooting options: {exc}") from exc


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_profile(path: Path, profile: Profile, cfg: ProblemConfig) -> np.ndarray:
    """Write ``t,phi,phi_prime,residual``; the residual column is ``nan`` at the two endpoints."""
    res = np.full(profile.grid.n + 1, np.nan)
    res[1:-1] = residual(profile, cfg)
    slopes = nodal_slopes(profile)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PROFILE_HEADER)
        for row in zip(profile.grid.nodes, profile.values, slopes, res):
            writer.writerow([_fmt(x) for x in row])
    return res


def read_profile(path: Path, quad_points: int = DEFAULT_QUAD_POINTS) -> Profile:
    """Load a profile CSV, rejecting malformed headers, unordered nodes or unpinned ends."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read profile {path}: {exc}") from exc
    if not rows or [c.strip() for c in rows[0]] != PROFILE_HEADER:
        raise UsageError(f"profile header must be {','.join(PROFILE_HEADER)}")
    try:
        data = np.array([[float(c) for c in row[:2]] for row in rows[1:] if row], dtype=float)
    except (ValueError, IndexError) as exc:
        raise UsageError(f"malformed profile row: {exc}") from exc
    if data.ndim != 2 or data.shape[0] < 9:
        raise UsageError("profile needs at least 9 nodes")
    t, phi = data[:, 0].copy(), data[:, 1].copy()
    if not np.all(np.isfinite(data)):
        raise UsageError("profile contains non-finite t or phi")
    if np.any(np.diff(t) <= 0.0):
        raise UsageError("t must be strictly increasing")
    for value, pinned, what in ((t[0], 0.0, "t[0]"), (t[-1], HALF_PI, "t[-1]"),
                                (phi[0], 0.0, "phi[0]"), (phi[-1], HALF_PI, "phi[-1]")):
        if abs(value - pinned) > ENDPOINT_TOL:
            raise UsageError(f"{what} = {value!r} is not pinned to {pinned!r}")
    t[0], t[-1], phi[0], phi[-1] = 0.0, HALF_PI, 0.0, HALF_PI
    if np.any(phi < 0.0) or np.any(phi > HALF_PI):
        raise UsageError("phi leaves [0, pi/2]")
    grid = Grid(len(t) - 1, t, grading="custom", quad_points=quad_points)
    return Profile(grid, phi)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _run_solve(cfg, grid, opts):
    report = minimize(cfg, grid, init=opts["init"], opts=_solver_options(opts))
    report.residual_sup = residual_sup(report.profile, cfg, opts["delta"])
    return report


def _solve_fields(report) -> dict:
    return {
        "j_value": report.j_value,
        "iterations": report.iterations,
        "converged": report.converged,
        "residual_sup": report.residual_sup,
        "projected_grad_norm": report.projected_grad_norm,
        "stop_reason": report.stop_reason,
        "descent_violations": report.descent_violations,
        "feasibility_violations": report.feasibility_violations,
    }


def cmd_solve(args) -> int:
    names = [*CONFIG_OPTIONS, *GRID_OPTIONS, *SOLVER_OPTIONS]
    opts = resolve(args, names)
    cfg, grid = _problem(opts), _grid(opts)
    try:
        report = _run_solve(cfg, grid, opts)
    except InvalidInit as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.out)
    res = write_profile(out.with_name(out.name + ".profile.csv"), report.profile, cfg)
    payload = {"command": "solve", "config": opts, **_solve_fields(report),
               "residual_max": float(np.nanmax(np.abs(res)))}
    _write_json(out.with_name(out.name + ".report.json"), payload)
    print(f"solve: J={report.j_value:.12g} iterations={report.iterations} converged={report.converged} "
          f"residual_sup={report.residual_sup:.3e}")
    return EXIT_OK if report.converged else EXIT_NUMERICAL


def cmd_residual(args) -> int:
    opts = resolve(args, [*CONFIG_OPTIONS, "quad_points", "delta"])
    cfg = _problem(opts)
    if not 1 <= opts["quad_points"] <= 8:
        raise UsageError("quad_points must lie in [1, 8]")
    profile = read_profile(args.profile, opts["quad_points"])
    res = residual(profile, cfg)
    stats = {
        "j_value": evaluate_J(profile, cfg),
        "residual_sup": residual_sup(profile, cfg, opts["delta"]),
        "residual_max": float(np.max(np.abs(res))),
        "n": profile.grid.n,
    }
    print(f"residual: J={stats['j_value']:.17g} residual_sup={stats['residual_sup']:.17g} "
          f"residual_max={stats['residual_max']:.17g} n={stats['n']}")
    if args.out:
        out = Path(args.out)
        _write_json(out.with_name(out.name + ".report.json"),
                    {"command": "residual", "config": opts, "profile": str(args.profile), **stats})
    return EXIT_OK


def cmd_oracle(args) -> int:
    opts = resolve(args, [*CONFIG_OPTIONS, *GRID_OPTIONS, *SOLVER_OPTIONS, *SHOOT_OPTIONS])
    cfg, grid, shoot_opts = _problem(opts), _grid(opts), _shooting_options(opts)
    try:
        report = _run_solve(cfg, grid, opts)
    except InvalidInit as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.out)
    write_profile(out.with_name(out.name + ".profile.csv"), report.profile, cfg)
    payload = {"command": "oracle", "config": opts, **_solve_fields(report)}
    try:
        result = shoot(cfg, shoot_opts)
    except BracketFailure as exc:
        payload["error"] = str(exc)
        _write_json(out.with_name(out.name + ".report.json"), payload)
        print(f"oracle: bracket failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    traj = result.trajectory
    with open(out.with_name(out.name + ".trajectory.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for row in zip(traj.t, traj.phi, traj.psi):
            writer.writerow([_fmt(x) for x in row])
    diff = compare(report, traj)
    payload.update({
        "s_star": result.slope,
        "hit": traj.hit,
        "blown_up": traj.blown_up,
        "bisections": result.iterations,
        "non_monotone": result.non_monotone,
        "sup_diff": diff,
    })
    _write_json(out.with_name(out.name + ".report.json"), payload)
    print(f"oracle: s*={result.slope:.12g} sup_diff={diff:.3e} converged={report.converged}")
    if not report.converged:
        return EXIT_NUMERICAL
    return EXIT_OK if diff < opts["xcheck_tol"] else EXIT_XCHECK


def _sweep_row(task):
    """One sweep row; never raises, failures become a non-converged row."""
    opts, with_oracle = task
    row = {"j_value": math.nan, "residual_sup": math.nan, "converged": False, "s_star": math.nan, "error": ""}
    try:
        cfg, grid = _problem(opts), _grid(opts)
        report = _run_solve(cfg, grid, opts)
        row.update(j_value=report.j_value, residual_sup=report.residual_sup, converged=report.converged)
        if with_oracle:
            row["s_star"] = shoot(cfg, _shooting_options(opts)).slope
    except (UsageError, InvalidInit, BracketFailure, ValueError) as exc:
        row["error"] = str(exc)
    return row


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise UsageError(f"{THREADS_ENV} must be a positive integer") from exc
    if value < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer")
    return value


def cmd_sweep(args) -> int:
    if args.axis not in NUMERIC_AXES:
        raise UsageError(f"axis must be one of {', '.join(NUMERIC_AXES)}, got {args.axis!r}")
    if args.values is not None:
        values = list(args.values)
    else:
        lo, hi, count = args.range
        if not float(count).is_integer():
            raise UsageError("range count must be an integer")
        values = list(np.linspace(lo, hi, int(count)))
    if len(values) < 2:
        raise UsageError("a sweep needs at least 2 values")
    names = [*CONFIG_OPTIONS, *GRID_OPTIONS, *SOLVER_OPTIONS, *SHOOT_OPTIONS]
    base = resolve(args, [n for n in names if n != args.axis])
    kind = CONFIG_OPTIONS[args.axis][0]
    tasks = []
    for v in values:
        if kind is int and not float(v).is_integer():
            raise UsageError(f"axis {args.axis} takes integer values, got {v!r}")
        tasks.append(({**base, args.axis: kind(v)}, args.with_oracle))
    workers = min(_threads(), len(tasks))
    if workers > 1:
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]

    out = Path(args.out)
    header = ["axis_value", "j_value", "residual_sup", "converged"] + (["s_star"] if args.with_oracle else [])
    with open(out.with_name(out.name + ".sweep.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for (task_opts, _), row in zip(tasks, rows):
            line = [_fmt(task_opts[args.axis]), _fmt(row["j_value"]), _fmt(row["residual_sup"]),
                    str(row["converged"]).lower()]
            if args.with_oracle:
                line.append(_fmt(row["s_star"]))
            writer.writerow(line)
    for (task_opts, _), row in zip(tasks, rows):
        if row["error"]:
            print(f"sweep: {args.axis}={task_opts[args.axis]}: {row['error']}", file=sys.stderr)
    _write_json(out.with_name(out.name + ".report.json"), {
        "command": "sweep", "config": base, "axis": args.axis,
        "values": [t[0][args.axis] for t in tasks], "with_oracle": args.with_oracle,
        "all_converged": all(r["converged"] for r in rows),
    })
    done = sum(r["converged"] for r in rows)
    print(f"sweep: {done}/{len(rows)} rows converged")
    return EXIT_OK if done == len(rows) else EXIT_NUMERICAL


COMMANDS = {"solve": cmd_solve, "oracle": cmd_oracle, "residual": cmd_residual, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"symphonic {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
