"""Shooting on the initial velocity for ``x(0) = x(T) = 0``.

The endpoint map ``v -> x_v(T)`` is continuous in 1-D, so sign changes on a
velocity grid bracket Dirichlet solutions, which bisection then pins down.
Scaling the velocity by the explicit factor from the impact-count argument
adds at least two impacts, and between two velocities whose impact counts
differ by two or more the endpoint must cross zero; ``enumerate_solutions``
walks up these levels.
"""
from __future__ import annotations

import csv
import functools
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from ._parallel import parallel_map
from .dynamics import ForceField, m_l1
from .exceptions import BracketLost, EscalationFailed
from .geometry import BilliardTable
from .integrator import DEFAULT_OPTIONS, IntegratorOptions, Status, Trajectory, integrate_cauchy

logger = logging.getLogger(__name__)

LOST_PREFIX = "bracket lost"

CELLS_PER_DECADE = 256
CELLS_PER_ZERO_SPACING = 8
MIN_CELLS = 16
DISTINCT_V = 1e-6
MAX_DOUBLINGS = 20
BOUND_MARGIN = 1.001


@dataclass(frozen=True)
class ShotResult:
    v: object
    endpoint: object
    impact_count: int
    impact_times: list
    status: Status
    trajectory: Optional[Trajectory] = field(default=None, repr=False, compare=False)

    @property
    def completed(self) -> bool:
        return self.status == Status.COMPLETED


@dataclass(frozen=True)
class DirichletSolution:
    v: object
    trajectory: Trajectory = field(repr=False)
    residual: float

    @property
    def impact_count(self) -> int:
        return len(self.trajectory.impacts)

    @property
    def impact_times(self) -> list:
        return self.trajectory.impact_times


class Bracket(NamedTuple):
    v_lo: float
    v_hi: float
    e_lo: Optional[float] = None
    e_hi: Optional[float] = None


@dataclass
class BracketScan:
    """Sign-change brackets from a velocity scan, plus the cells that failed."""

    brackets: list
    failed: list
    shots: list = field(default_factory=list, repr=False)

    def __iter__(self):
        return iter(self.brackets)

    def __len__(self):
        return len(self.brackets)

    def __getitem__(self, i):
        return self.brackets[i]


def endpoint_map(table: BilliardTable, field: ForceField, v, T: float,
                 opts: IntegratorOptions = DEFAULT_OPTIONS) -> ShotResult:
    """Shoot from the origin with velocity ``v`` and report ``x_v(T)``.

    In 1-D ``v`` and the endpoint are floats, otherwise arrays.
    """
    traj = integrate_cauchy(table, field, np.zeros(table.dim), v, T, opts)
    if table.dim == 1:
        v_out = float(np.ravel(v)[0])
        end = float(traj.endpoint[0]) if traj.completed else math.nan
    else:
        v_out = np.asarray(v, dtype=float)
        end = traj.endpoint if traj.completed else np.full(table.dim, math.nan)
    return ShotResult(v_out, end, len(traj.impacts), traj.impact_times, traj.status, traj)


def count_impacts(table: BilliardTable, field: ForceField, v, T: float,
                  opts: IntegratorOptions = DEFAULT_OPTIONS) -> int:
    return endpoint_map(table, field, v, T, opts).impact_count


def default_grid(table: BilliardTable, T: float, v_min: float, v_max: float) -> int:
    """Cells for a scan of ``[v_min, v_max]``.

    At least 256 per decade of speed, and at least 8 per ``diameter / T``
    (the spacing of free-flight zeros, which the endpoint's oscillation
    roughly follows at large speed).
    """
    decades = math.log10(v_max / v_min)
    per_spacing = (v_max - v_min) * T / table.diameter()
    return max(MIN_CELLS, math.ceil(CELLS_PER_DECADE * decades),
               math.ceil(CELLS_PER_ZERO_SPACING * per_spacing))


def _shoot(table, field, T, opts, v):
    return endpoint_map(table, field, v, T, opts)


def find_brackets(table: BilliardTable, field: ForceField, T: float, v_range,
                  n_grid: Optional[int] = None, opts: IntegratorOptions = DEFAULT_OPTIONS,
                  signs=(-1, 1)) -> BracketScan:
    """Scan speeds ``[v_min, v_max]`` for each sign and bracket sign changes of ``x_v(T)``.

    Cells with a failed shot at either end are skipped and listed in ``failed``.
    """
    if table.dim != 1:
        raise ValueError("velocity bracketing is one-dimensional")
    v_min, v_max = map(float, v_range)
    if not 0 < v_min < v_max:
        raise ValueError("need 0 < v_min < v_max")
    if n_grid is None:
        n_grid = default_grid(table, T, v_min, v_max)
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    threshold = m_l1(field, table, T)
    if v_min <= threshold:
        logger.info("v_min=%g is below ||m||_1=%g; relying on 1-D continuity of the endpoint map",
                    v_min, threshold)
    speeds = np.linspace(v_min, v_max, n_grid + 1)
    shoot = functools.partial(_shoot, table, field, T, opts)
    brackets, failed, shots = [], [], []
    for sign in signs:
        vs = [float(sign * s) for s in speeds]
        if sign < 0:
            vs.reverse()
        results = parallel_map(shoot, vs)
        shots.extend(results)
        for a, b in zip(results, results[1:]):
            if not (a.completed and b.completed):
                failed.append((a.v, b.v))
                continue
            if (a.endpoint > 0) != (b.endpoint > 0):
                brackets.append(Bracket(a.v, b.v, a.endpoint, b.endpoint))
    if failed:
        logger.warning("%d grid cells discarded after failed shots", len(failed))
    return BracketScan(brackets, failed, shots)


def bisect_solution(table: BilliardTable, field: ForceField, T: float, bracket,
                    tol_v: float = 1e-12, tol_residual: float = 1e-8,
                    opts: IntegratorOptions = DEFAULT_OPTIONS) -> DirichletSolution:
    """Bisect a sign bracket of the endpoint map down to width ``tol_v``.

    Bisection keeps going after the residual tolerance is met, so the
    velocity is resolved to ``tol_v``; ``tol_residual`` is the acceptance
    test on the final shot. A failed midpoint is replaced by the quarter
    points of the bracket; if both fail too, BracketLost is raised.
    """
    br = bracket if isinstance(bracket, Bracket) else Bracket(*bracket)
    lo, hi = sorted((float(br.v_lo), float(br.v_hi)))
    r_lo = endpoint_map(table, field, lo, T, opts)
    r_hi = endpoint_map(table, field, hi, T, opts)
    if not (r_lo.completed and r_hi.completed):
        raise BracketLost("bracket end shot failed")
    if (r_lo.endpoint > 0) == (r_hi.endpoint > 0):
        raise BracketLost("bracket ends have the same endpoint sign")
    best = min((r_lo, r_hi), key=lambda r: abs(r.endpoint))

    while hi - lo > tol_v and best.endpoint != 0.0:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        r = endpoint_map(table, field, mid, T, opts)
        if not r.completed:
            w = hi - lo
            r = None
            for q in (lo + 0.25 * w, lo + 0.75 * w):
                cand = endpoint_map(table, field, q, T, opts)
                if cand.completed:
                    r = cand
                    break
            if r is None:
                raise BracketLost(f"shots at and around v={mid!r} failed ({w:.3e} wide bracket)")
        if abs(r.endpoint) < abs(best.endpoint):
            best = r
        if (r.endpoint > 0) == (r_lo.endpoint > 0):
            lo, r_lo = r.v, r
        else:
            hi, r_hi = r.v, r
    # Best of the final bracket ends (a discontinuity leaves both far from zero).
    best = min((r_lo, r_hi, best), key=lambda r: abs(r.endpoint))
    if abs(best.endpoint) > tol_residual:
        raise BracketLost(f"no root in [{lo!r}, {hi!r}]: residual {abs(best.endpoint):.3e}")
    return DirichletSolution(best.v, best.trajectory, abs(best.endpoint))


def scaling_escalation(table: BilliardTable, field: ForceField, T: float, v,
                       target_extra: int = 2, opts: IntegratorOptions = DEFAULT_OPTIONS,
                       max_doublings: int = MAX_DOUBLINGS):
    """Scale ``v`` until the trajectory gains at least ``target_extra`` impacts.

    Each round multiplies the velocity by just over
    ``max(m/|v| + 6 r/(|v| t1), (2 m + |v|)/|v|)``, where ``m`` is the L1
    force bound, ``r`` the table half-width and ``t1`` the first impact time,
    and gains two impacts. If the result still falls short numerically the
    factor is doubled, at most ``max_doublings`` times.
    """
    if target_extra < 0 or target_extra % 2:
        raise ValueError("target_extra must be a non-negative even integer")
    if target_extra == 0:
        return v
    if not np.any(np.asarray(v, dtype=float)):
        raise ValueError("v must be nonzero")
    base = endpoint_map(table, field, v, T, opts)
    if base.impact_count == 0:
        raise ValueError("the trajectory of v needs at least one impact")
    m = m_l1(field, table, T)
    r = table.diameter() / 2
    u, shot = v, base
    for _ in range(target_extra // 2):
        if shot.impact_count == 0:
            break
        speed = float(np.linalg.norm(u))
        t1 = shot.impact_times[0]
        c = BOUND_MARGIN * max(m / speed + 6 * r / (speed * t1), (2 * m + speed) / speed)
        u = _scale(u, c)
        shot = endpoint_map(table, field, u, T, opts)
    goal = base.impact_count + target_extra
    for _ in range(max_doublings + 1):
        if shot.completed and shot.impact_count >= goal:
            return u
        u = _scale(u, 2.0)
        shot = endpoint_map(table, field, u, T, opts)
    raise EscalationFailed(f"no velocity with {goal} impacts after {max_doublings} doublings")


def _scale(v, c):
    if np.ndim(v) == 0:
        return c * float(v)
    return c * np.asarray(v, dtype=float)


def rest_solution(table: BilliardTable, field: ForceField, T: float,
                  tol_residual: float = 1e-8,
                  opts: IntegratorOptions = DEFAULT_OPTIONS) -> Optional[DirichletSolution]:
    """The impact-free solution with ``v = 0``, if the force admits it."""
    shot = endpoint_map(table, field, 0.0 if table.dim == 1 else np.zeros(table.dim), T, opts)
    if shot.completed and shot.impact_count == 0 and np.all(np.abs(shot.endpoint) <= tol_residual):
        return DirichletSolution(shot.v, shot.trajectory, float(np.max(np.abs(shot.endpoint))))
    return None


def _solve_brackets(table, field, T, brackets, tol_v, tol_residual, opts, diagnostics):
    out = []
    for br in brackets:
        try:
            out.append(bisect_solution(table, field, T, br, tol_v, tol_residual, opts))
        except BracketLost as exc:
            diagnostics.append(f"{LOST_PREFIX} ({br.v_lo:.17g}, {br.v_hi:.17g}): {exc}")
            logger.warning("bracket (%r, %r) dropped: %s", br.v_lo, br.v_hi, exc)
    return out


def _distinct(solutions):
    solutions = sorted(solutions, key=lambda s: s.v)
    out = []
    for s in solutions:
        if out and abs(s.v - out[-1].v) <= DISTINCT_V:
            if s.residual < out[-1].residual:
                out[-1] = s
            continue
        out.append(s)
    return sorted(out, key=lambda s: (abs(s.v), s.v))


def enumerate_solutions(table: BilliardTable, field: ForceField, T: float, max_count: int,
                        v_range=None, n_grid: Optional[int] = None, tol_v: float = 1e-12,
                        tol_residual: float = 1e-8, opts: IntegratorOptions = DEFAULT_OPTIONS,
                        max_levels: int = 40, diagnostics: Optional[list] = None) -> list:
    """Up to ``max_count`` distinct nonzero-velocity solutions, sorted by ``|v|``.

    With ``v_range`` the given speed band is scanned for both signs. Without
    it, each sign walks speed levels from ``0.01 * diameter / T``: a level
    ends where ``scaling_escalation`` guarantees two more impacts (or at the
    doubled speed while no impact happens yet), and every level is
    bracketed and bisected. Problems met along the way are appended to
    ``diagnostics`` when a list is passed.
    """
    if max_count < 1:
        raise ValueError("max_count must be at least 1")
    diagnostics = [] if diagnostics is None else diagnostics
    if v_range is not None:
        scan = find_brackets(table, field, T, v_range, n_grid, opts)
        if scan.failed:
            diagnostics.append(f"{len(scan.failed)} grid cells failed")
        sols = _distinct(_solve_brackets(table, field, T, scan, tol_v, tol_residual, opts, diagnostics))
        if len(sols) < max_count:
            diagnostics.append(f"found {len(sols)} of {max_count} requested solutions in range")
        return sols[:max_count]

    start = 0.01 * table.diameter() / T
    frontier = {-1: start, 1: start}
    found = []
    for _ in range(max_levels):
        reached = min(frontier.values())
        if len([s for s in _distinct(found) if abs(s.v) <= reached]) >= max_count:
            break
        sign = min(frontier, key=lambda s: (frontier[s], s))
        lo = frontier[sign]
        try:
            hi = _next_level(table, field, T, sign * lo, opts)
        except EscalationFailed as exc:
            diagnostics.append(str(exc))
            logger.warning("escalation from v=%g failed: %s", sign * lo, exc)
            frontier[sign] = math.inf
            if all(math.isinf(f) for f in frontier.values()):
                break
            continue
        scan = find_brackets(table, field, T, (lo, hi), n_grid, opts, signs=(sign,))
        if scan.failed:
            diagnostics.append(f"{len(scan.failed)} grid cells failed in [{lo:g}, {hi:g}]")
        found.extend(_solve_brackets(table, field, T, scan, tol_v, tol_residual, opts, diagnostics))
        frontier[sign] = hi
    else:
        diagnostics.append(f"stopped after {max_levels} levels")
    reached = min(frontier.values())
    sols = [s for s in _distinct(found) if abs(s.v) <= reached]
    if len(sols) < max_count:
        diagnostics.append(f"found {len(sols)} of {max_count} requested solutions")
    return sols[:max_count]


def _next_level(table, field, T, v, opts):
    shot = endpoint_map(table, field, v, T, opts)
    if shot.impact_count == 0:
        return 2 * abs(v)
    return abs(scaling_escalation(table, field, T, v, 2, opts))


def write_solutions_csv(solutions, fh) -> None:
    """Write ``v,residual,impact_count,impact_times`` (times joined by ';').

    Vector velocities get one column each (``v1,v2``).
    """
    solutions = list(solutions)
    dim = 1 if not solutions or np.ndim(solutions[0].v) == 0 else len(solutions[0].v)
    w = csv.writer(fh, lineterminator="\n")
    vcols = ["v"] if dim == 1 else [f"v{i + 1}" for i in range(dim)]
    w.writerow(vcols + ["residual", "impact_count", "impact_times"])
    for s in solutions:
        vs = np.atleast_1d(np.asarray(s.v, dtype=float))
        w.writerow([format(float(c), ".17g") for c in vs]
                   + [format(s.residual, ".17g"), s.impact_count,
                      ";".join(format(t, ".17g") for t in s.impact_times)])


def write_shots_csv(shots, fh) -> None:
    """Write ``v,endpoint,impact_count,status`` rows for 1-D shots."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["v", "endpoint", "impact_count", "status"])
    for s in shots:
        w.writerow([format(float(s.v), ".17g"), format(float(s.endpoint), ".17g"),
                    s.impact_count, s.status.value])
