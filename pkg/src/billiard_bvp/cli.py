"""``billiard-bvp`` command line.

Every command reads a TOML problem config and writes CSV to ``-o`` (default
standard output); summaries and diagnostics go to standard error. Exit
codes: 0 success, 1 usage or config error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import contextlib
import io
import logging
import math
import sys
from typing import Optional, Sequence

import numpy as np

from .config import ProblemConfig, parse_config
from .degree import (SweepEntry, SweepResult, attainable_set, degree_sweep, normal_ray_solutions,
                     uniform_deviation, winding_number, write_attainable_csv, write_sweep_csv)
from .exceptions import BilliardError, MeshBudgetExceeded, OriginTooClose, SchemaError
from .integrator import integrate_cauchy, write_impacts_csv, write_trajectory_csv
from .shooting import (LOST_PREFIX, enumerate_solutions, find_brackets, rest_solution,
                       write_shots_csv, write_solutions_csv)

logger = logging.getLogger("billiard_bvp.cli")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2

# Fallbacks used when neither a flag nor the config's command block sets a value.
DEFAULTS = {
    "simulate": {"samples_per_step": 1},
    "shoot": {"grid": None},
    "solve": {"max_count": 3, "v_min": None, "v_max": None, "grid": None},
    "attainable": {"samples": 64},
    "winding": {"samples": 64},
    "sweep": {"samples": 64},
    "deviation": {"dirs": 16},
}

COMMANDS = ("simulate", "shoot", "solve", "attainable", "winding", "sweep", "normal-rays",
            "deviation")


class UsageError(Exception):
    """A request that cannot be run with the given config."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list:
    return [float(x) for x in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="billiard-bvp", description="Dirichlet problems for forced billiards.")
    parser.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="TOML problem config")
        p.add_argument("-o", "--output", help="CSV destination (default: stdout)")
        return p

    p = command("simulate", "integrate one trajectory")
    p.add_argument("--v", type=float, nargs="+", help="initial velocity components")
    p.add_argument("--samples-per-step", type=int)
    p.add_argument("--impacts", help="also write the impact log to this CSV")

    p = command("shoot", "scan the endpoint map on a speed grid (1-D)")
    p.add_argument("--v-min", type=float)
    p.add_argument("--v-max", type=float)
    p.add_argument("--grid", type=int)

    p = command("solve", "enumerate Dirichlet solutions (1-D)")
    p.add_argument("--max-count", type=int)
    p.add_argument("--v-min", type=float)
    p.add_argument("--v-max", type=float)
    p.add_argument("--grid", type=int)

    for name, text in (("attainable", "sample the attainable curve on a speed shell"),
                       ("winding", "winding number of one speed shell")):
        p = command(name, text)
        p.add_argument("--d", type=float)
        p.add_argument("--samples", type=int)

    p = command("sweep", "winding numbers over a speed grid")
    p.add_argument("--d-grid", type=_float_list, help="speeds, comma or space separated")
    p.add_argument("--samples", type=int)

    command("normal-rays", "force-free single-bounce solutions (2-D)")

    p = command("deviation", "deviation from force-free motion at one speed")
    p.add_argument("--d", type=float)
    p.add_argument("--dirs", type=int)
    return parser


def _setting(cfg: ProblemConfig, command: str, key: str, given):
    if given is not None:
        return given
    block = cfg.command(command)
    if key in block:
        return block[key]
    if key in DEFAULTS.get(command, {}):
        return DEFAULTS[command][key]
    raise UsageError(f"{command}: --{key.replace('_', '-')} is required (flag or [{command}] block)")


def _need_dim(cfg: ProblemConfig, dim: int, command: str):
    if cfg.table.dim != dim:
        raise UsageError(f"{command} needs a {dim}-D table, config has {cfg.table.dim}-D")


def _simulate(cfg, out, v=None, samples_per_step=None, impacts=None, **_):
    v = _setting(cfg, "simulate", "v", v)
    if len(v) != cfg.table.dim:
        raise UsageError(f"simulate: --v needs {cfg.table.dim} component(s), got {len(v)}")
    spp = _setting(cfg, "simulate", "samples_per_step", samples_per_step)
    if spp < 1:
        raise UsageError("simulate: --samples-per-step must be at least 1")
    traj = integrate_cauchy(cfg.table, cfg.force, np.zeros(cfg.table.dim), v, cfg.T, cfg.options)
    write_trajectory_csv(traj, out, spp)
    if impacts:
        with open(impacts, "w", newline="") as fh:
            write_impacts_csv(traj, fh)
    end = ", ".join(format(float(c), ".17g") for c in traj.endpoint)
    print(f"status {traj.status.value}; {len(traj.impacts)} impacts; x(T) = ({end})", file=sys.stderr)
    return EXIT_OK if traj.completed else EXIT_NUMERICAL


def _speed_range(command, v_min, v_max):
    if not 0 <= v_min < v_max:
        raise UsageError(f"{command}: need 0 <= v-min < v-max")
    return (v_min, v_max)


def _shoot(cfg, out, v_min=None, v_max=None, grid=None, **_):
    _need_dim(cfg, 1, "shoot")
    rng = _speed_range("shoot", _setting(cfg, "shoot", "v_min", v_min),
                       _setting(cfg, "shoot", "v_max", v_max))
    scan = find_brackets(cfg.table, cfg.force, cfg.T, rng, _setting(cfg, "shoot", "grid", grid),
                         cfg.options)
    write_shots_csv(scan.shots, out)
    print(f"{len(scan.shots)} shots; {len(scan.brackets)} sign changes; {len(scan.failed)} failed",
          file=sys.stderr)
    return EXIT_OK


def _solve(cfg, out, max_count=None, v_min=None, v_max=None, grid=None, **_):
    _need_dim(cfg, 1, "solve")
    max_count = _setting(cfg, "solve", "max_count", max_count)
    if max_count < 1:
        raise UsageError("solve: --max-count must be at least 1")
    lo = _setting(cfg, "solve", "v_min", v_min)
    hi = _setting(cfg, "solve", "v_max", v_max)
    if (lo is None) != (hi is None):
        raise UsageError("solve: give both --v-min and --v-max or neither")
    rng = None if lo is None else _speed_range("solve", lo, hi)
    diagnostics = []
    sols = enumerate_solutions(cfg.table, cfg.force, cfg.T, max_count, rng,
                               _setting(cfg, "solve", "grid", grid), cfg.tolerances["tol_v"],
                               cfg.tolerances["tol_residual"], cfg.options, diagnostics=diagnostics)
    write_solutions_csv(sols, out)
    rest = rest_solution(cfg.table, cfg.force, cfg.T, cfg.tolerances["tol_residual"], cfg.options)
    print(f"{len(sols)} solution(s) with v != 0; rest solution v = 0: {'yes' if rest else 'no'}",
          file=sys.stderr)
    for s in sols:
        print(f"  v = {s.v:.12g}  impacts = {s.impact_count}  residual = {s.residual:.3e}",
              file=sys.stderr)
    for d in diagnostics:
        print(f"  note: {d}", file=sys.stderr)
    if not sols and any(d.startswith(LOST_PREFIX) for d in diagnostics):
        return EXIT_NUMERICAL
    return EXIT_OK


def _shell_args(cfg, command, d, samples):
    _need_dim(cfg, 2, command)
    d = _setting(cfg, command, "d", d)
    samples = _setting(cfg, command, "samples", samples)
    if d < 0 or samples < 8:
        raise UsageError(f"{command}: need --d >= 0 and --samples >= 8")
    return d, samples


def _attainable(cfg, out, d=None, samples=None, **_):
    d, samples = _shell_args(cfg, "attainable", d, samples)
    aset = attainable_set(cfg.table, cfg.force, cfg.T, d, samples, cfg.options)
    write_attainable_csv(aset, out)
    return EXIT_OK


def _winding(cfg, out, d=None, samples=None, **_):
    d, samples = _shell_args(cfg, "winding", d, samples)
    aset = attainable_set(cfg.table, cfg.force, cfg.T, d, samples, cfg.options)
    code = EXIT_OK
    try:
        wr = winding_number(aset)
        entry = SweepEntry(d, wr.winding, wr.min_dist_to_origin, "")
        print(f"winding {wr.winding} at d = {d:g}", file=sys.stderr)
    except OriginTooClose as exc:
        entry = SweepEntry(d, None, exc.min_dist, "origin")
        print(f"endpoint within {exc.min_dist:.3e} of the origin at theta = {exc.theta:.12g}: "
              f"solution candidate on this shell", file=sys.stderr)
    except MeshBudgetExceeded as exc:
        entry = SweepEntry(d, None, math.nan, "mesh")
        print(str(exc), file=sys.stderr)
        code = EXIT_NUMERICAL
    write_sweep_csv(SweepResult([entry]), out)
    return code


def _sweep(cfg, out, d_grid=None, samples=None, **_):
    _need_dim(cfg, 2, "sweep")
    d_grid = _setting(cfg, "sweep", "d_grid", d_grid)
    samples = _setting(cfg, "sweep", "samples", samples)
    if not d_grid or samples < 8:
        raise UsageError("sweep: need a non-empty --d-grid and --samples >= 8")
    try:
        result = degree_sweep(cfg.table, cfg.force, cfg.T, d_grid, samples, cfg.options)
    except ValueError as exc:
        raise UsageError(f"sweep: {exc}") from exc
    write_sweep_csv(result, out)
    for lo, hi in result.annuli:
        print(f"winding changes between d = {lo:g} and d = {hi:g}", file=sys.stderr)
    for d, theta in result.origin_hits:
        print(f"origin hit at d = {d:g}, theta = {theta:.12g}", file=sys.stderr)
    return EXIT_NUMERICAL if any(e.flag == "mesh" for e in result.entries) else EXIT_OK


def _normal_rays(cfg, out, **_):
    _need_dim(cfg, 2, "normal-rays")
    if not cfg.force.is_zero:
        print("note: normal rays solve the force-free problem; the configured force is ignored",
              file=sys.stderr)
    try:
        rays = normal_ray_solutions(cfg.table, cfg.T, cfg.tolerances["tol_residual"], cfg.options)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc
    write_solutions_csv(rays.solutions, out)
    msg = f"{len(rays.solutions)} normal-ray solution(s)"
    if rays.continuum:
        msg += " (every direction is normal; one representative shown)"
    print(msg, file=sys.stderr)
    return EXIT_OK


def _deviation(cfg, out, d=None, dirs=None, **_):
    d = _setting(cfg, "deviation", "d", d)
    dirs = _setting(cfg, "deviation", "dirs", dirs)
    if d <= 0 or dirs < 1:
        raise UsageError("deviation: need --d > 0 and --dirs >= 1")
    rep = uniform_deviation(cfg.table, cfg.force, cfg.T, d, dirs, opts=cfg.options)
    dim = cfg.table.dim
    out.write(",".join([f"v{i + 1}" for i in range(dim)] + ["first_impact", "full_horizon"]) + "\n")
    for v, dev1, dev2 in rep.per_direction:
        out.write(",".join([format(float(c), ".17g") for c in v]
                           + [format(dev1, ".17g"), format(dev2, ".17g")]) + "\n")
    print(f"d = {d:g}: max first-impact deviation {rep.first_impact:.6e}, "
          f"max full-horizon deviation {rep.full_horizon:.6e}", file=sys.stderr)
    return EXIT_OK


_HANDLERS = {
    "simulate": _simulate, "shoot": _shoot, "solve": _solve, "attainable": _attainable,
    "winding": _winding, "sweep": _sweep, "normal-rays": _normal_rays, "deviation": _deviation,
}


def run(command: str, config, output: Optional[str] = None, **options) -> int:
    """Run one command and return its exit code.

    ``config`` is a ProblemConfig or a path; ``options`` are the command's
    flags with underscores (``v_min=0.5``). CSV goes to ``output`` or stdout.
    """
    if command not in _HANDLERS:
        print(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = config if isinstance(config, ProblemConfig) else parse_config(config)
    except SchemaError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    buf = io.StringIO()
    try:
        code = _HANDLERS[command](cfg, buf, **options)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BilliardError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    try:
        with (open(output, "w", newline="") if output else contextlib.nullcontext(sys.stdout)) as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = vars(build_parser().parse_args(argv))
    logging.basicConfig(level=logging.INFO if args.pop("verbose") else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    command = args.pop("command")
    config = args.pop("config")
    output = args.pop("output")
    return run(command, config, output, **args)


if __name__ == "__main__":
    sys.exit(main())
