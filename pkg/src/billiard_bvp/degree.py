"""Planar machinery: attainable curves on speed shells and their winding numbers.

For a speed ``d`` the map ``theta -> x_v(T)`` with ``v = d (cos theta, sin theta)``
traces a closed curve. A nonzero winding number about the origin forces a
Dirichlet solution with ``|v| < d``, and a change of winding between two
speeds forces one in the annulus between them. Endpoints landing on the
origin are reported through OriginTooClose because they mark solutions.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .dynamics import ConstantForce, ForceField
from .exceptions import MeshBudgetExceeded, OriginTooClose, ZeroForce
from .geometry import Ball, BilliardTable, Interval, StarShaped2D
from .integrator import DEFAULT_OPTIONS, IntegratorOptions, Status, integrate_cauchy
from .shooting import DirichletSolution, endpoint_map

logger = logging.getLogger(__name__)

DELTA_DEG = 1e-6
MAX_DOUBLINGS = 6
MAX_INCREMENT = math.pi / 2
ROOT_TOL = 1e-10
GRID_SIZE = 4096


@dataclass(frozen=True)
class AttainableSample:
    theta: float
    d: float
    endpoint: np.ndarray
    status: Status

    @property
    def completed(self) -> bool:
        return self.status == Status.COMPLETED


@dataclass
class AttainableSet:
    """Samples of ``A_d`` ordered by shell angle, with what is needed to add more."""

    table: BilliardTable
    field: ForceField
    T: float
    d: float
    samples: list
    opts: IntegratorOptions = DEFAULT_OPTIONS

    def shoot(self, theta: float) -> AttainableSample:
        v = (self.d * math.cos(theta), self.d * math.sin(theta))
        shot = endpoint_map(self.table, self.field, v, self.T, self.opts)
        return AttainableSample(theta, self.d, np.asarray(shot.endpoint, dtype=float), shot.status)

    @property
    def endpoints(self) -> np.ndarray:
        return np.array([s.endpoint for s in self.samples])

    @property
    def thetas(self) -> np.ndarray:
        return np.array([s.theta for s in self.samples])

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


class WindingResult(NamedTuple):
    d: float
    winding: int
    min_dist_to_origin: float
    samples_used: int


def attainable_set(table: BilliardTable, field: ForceField, T: float, d: float,
                   n_samples: int = 64, opts: IntegratorOptions = DEFAULT_OPTIONS) -> AttainableSet:
    """Shoot ``n_samples`` equally spaced directions at speed ``d``."""
    if table.dim != 2:
        raise ValueError("attainable sets are computed for planar tables")
    if d < 0:
        raise ValueError("speed must be non-negative")
    if n_samples < 8:
        raise ValueError("need at least 8 samples")
    aset = AttainableSet(table, field, T, float(d), [], opts)
    aset.samples = [aset.shoot(2 * math.pi * k / n_samples) for k in range(n_samples)]
    failed = sum(not s.completed for s in aset.samples)
    if failed:
        logger.warning("%d of %d shots failed on the shell d=%g", failed, n_samples, d)
    return aset


def _increments(points):
    a = points
    b = np.roll(points, -1, axis=0)
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    dot = np.einsum("ij,ij->i", a, b)
    return np.arctan2(cross, dot)


def winding_number(aset: AttainableSet, delta: Optional[float] = None,
                   max_doublings: int = MAX_DOUBLINGS) -> WindingResult:
    """Winding number of the attainable curve about the origin.

    Consecutive endpoints must turn by at most pi/2 around the origin; any
    wider step gets its angular interval halved by a fresh shot, up to
    ``max_doublings`` times. Failed shots are left out.

    Raises OriginTooClose when an endpoint is within ``delta`` (default
    ``1e-6 * diameter``) of the origin, MeshBudgetExceeded when refinement
    runs out.
    """
    delta = DELTA_DEG * aset.table.diameter() if delta is None else delta
    tried = sorted(s.theta for s in aset.samples)
    good = sorted((s for s in aset.samples if s.completed), key=lambda s: s.theta)
    if len(good) < 3:
        raise MeshBudgetExceeded("fewer than three completed samples on the shell")

    for level in range(max_doublings + 1):
        pts = np.array([s.endpoint for s in good])
        dist = np.hypot(pts[:, 0], pts[:, 1])
        i_min = int(np.argmin(dist))
        if dist[i_min] < delta:
            raise OriginTooClose(
                f"attainable curve at d={aset.d:g} passes within {dist[i_min]:.3e} of the origin",
                float(dist[i_min]), good[i_min].theta)
        inc = _increments(pts)
        bad = np.flatnonzero(np.abs(inc) > MAX_INCREMENT)
        if bad.size == 0:
            total = float(inc.sum()) / (2 * math.pi)
            w = round(total)
            if abs(total - w) >= 0.05:
                raise MeshBudgetExceeded(f"winding sum {total:.4f} is not near an integer")
            return WindingResult(aset.d, int(w), float(dist[i_min]), len(good))
        if level == max_doublings:
            break
        new = []
        for i in bad:
            a = good[i].theta
            b = good[(i + 1) % len(good)].theta
            if b <= a:
                b += 2 * math.pi
            inside = [a] + [t for t in tried if a < t < b] + \
                     [t + 2 * math.pi for t in tried if a < t + 2 * math.pi < b] + [b]
            inside.sort()
            for lo, hi in zip(inside, inside[1:]):
                new.append((0.5 * (lo + hi)) % (2 * math.pi))
        for theta in new:
            s = aset.shoot(theta)
            tried.append(theta)
            if s.completed:
                good.append(s)
        tried.sort()
        good.sort(key=lambda s: s.theta)
    raise MeshBudgetExceeded(f"angular refinement exceeded {max_doublings} doublings at d={aset.d:g}")


class SweepEntry(NamedTuple):
    d: float
    winding: Optional[int]
    min_dist: float
    # "origin": endpoint on the origin (solution candidate on this shell);
    # "change": winding differs from the previous speed (solution in the annulus);
    # "mesh": refinement failed.
    flag: str


@dataclass
class SweepResult:
    entries: list
    origin_hits: list = field(default_factory=list)
    annuli: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    @property
    def windings(self):
        return [e.winding for e in self.entries]


def degree_sweep(table: BilliardTable, field: ForceField, T: float, d_grid,
                 n_samples: int = 64, opts: IntegratorOptions = DEFAULT_OPTIONS) -> SweepResult:
    """Winding number on each shell of an increasing speed grid."""
    d_grid = [float(d) for d in d_grid]
    if any(b <= a for a, b in zip(d_grid, d_grid[1:])) or any(d < 0 for d in d_grid):
        raise ValueError("d_grid must be increasing and non-negative")
    result = SweepResult([])
    prev = None
    for d in d_grid:
        aset = attainable_set(table, field, T, d, n_samples, opts)
        try:
            wr = winding_number(aset)
        except OriginTooClose as exc:
            result.entries.append(SweepEntry(d, None, exc.min_dist, "origin"))
            result.origin_hits.append((d, exc.theta))
            continue
        except MeshBudgetExceeded:
            result.entries.append(SweepEntry(d, None, math.nan, "mesh"))
            continue
        flag = ""
        if prev is not None and prev.winding != wr.winding:
            flag = "change"
            result.annuli.append((prev.d, d))
        result.entries.append(SweepEntry(d, wr.winding, wr.min_dist_to_origin, flag))
        prev = wr
    return result


@dataclass(frozen=True)
class ReducedProblem:
    """A constant-force disc problem restricted to the invariant line through the force."""

    table: Interval
    field: ConstantForce
    direction: np.ndarray
    T: float

    def embed_velocity(self, s: float) -> np.ndarray:
        return float(s) * self.direction

    def embed_point(self, s) -> np.ndarray:
        return np.multiply.outer(np.asarray(s, dtype=float), self.direction)


def reduce_constant_force(table: Ball, a, T: float) -> ReducedProblem:
    """1-D problem along ``a / |a|`` for a disc of radius ``r`` with constant force ``a``."""
    if not isinstance(table, Ball) or table.dim != 2:
        raise ValueError("reduction needs a planar Ball table")
    a = np.ravel(a.value if isinstance(a, ConstantForce) else a).astype(float)
    norm = float(np.hypot(*a))
    if norm == 0.0:
        raise ZeroForce("every line through the origin is invariant; use normal_ray_solutions")
    return ReducedProblem(Interval(table.r), ConstantForce(norm), a / norm, float(T))


class NormalRays(NamedTuple):
    solutions: list
    # True when every direction is a normal ray (a disc); one representative is returned.
    continuum: bool


def _profile_critical_angles(table: StarShaped2D):
    thetas = 2 * math.pi * np.arange(GRID_SIZE) / GRID_SIZE
    g = np.array([table.slope(float(t)) for t in thetas])
    scale = float(np.max(table._grid_values))
    if np.max(np.abs(g)) <= 1e-12 * scale:
        return None
    roots = []
    for i in range(GRID_SIZE):
        a, b = thetas[i], thetas[i] + 2 * math.pi / GRID_SIZE
        ga, gb = g[i], g[(i + 1) % GRID_SIZE]
        if ga == 0.0:
            roots.append(float(a))
            continue
        if gb == 0.0 or (ga > 0) == (gb > 0):
            continue
        while b - a > ROOT_TOL:
            m = 0.5 * (a + b)
            gm = table.slope(m)
            if gm == 0.0:
                a = b = m
                break
            if (gm > 0) == (ga > 0):
                a, ga = m, gm
            else:
                b = m
        roots.append(float(0.5 * (a + b)) % (2 * math.pi))
    roots.sort()
    out = []
    for r in roots:
        if out and min(abs(r - out[-1]), 2 * math.pi - abs(r - out[-1])) < 1e-8:
            continue
        out.append(r)
    if len(out) > 1 and 2 * math.pi - (out[-1] - out[0]) < 1e-8:
        out.pop()
    return out


def normal_ray_solutions(table: BilliardTable, T: float, tol_residual: float = 1e-8,
                         opts: IntegratorOptions = DEFAULT_OPTIONS) -> NormalRays:
    """Force-free solutions ``x(t) = 2 z t / T`` bouncing once at a boundary point ``z``.

    ``z`` must have its outer normal along ``z`` itself; for a radial profile
    that is a critical point of the radius. Each candidate is re-integrated
    and kept only with one impact and residual at most ``tol_residual``.
    """
    if table.dim != 2:
        raise ValueError("normal rays are computed for planar tables")
    zero = ConstantForce((0.0, 0.0))
    if isinstance(table, Ball):
        angles, continuum = [0.0], True
    elif isinstance(table, StarShaped2D):
        angles = _profile_critical_angles(table)
        continuum = angles is None
        if continuum:
            angles = [0.0]
    else:
        raise TypeError(f"unsupported table {type(table).__name__}")
    sols = []
    for theta in angles:
        z = np.array(table._project((math.cos(theta), math.sin(theta))))
        v = 2.0 * z / T
        traj = integrate_cauchy(table, zero, (0.0, 0.0), v, T, opts)
        residual = float(np.linalg.norm(traj.endpoint))
        if traj.completed and len(traj.impacts) == 1 and residual <= tol_residual:
            sols.append(DirichletSolution(v, traj, residual))
        else:
            logger.warning("normal ray at theta=%.12g rejected: %d impacts, residual %.3e",
                           theta, len(traj.impacts), residual)
    return NormalRays(sols, continuum)


@dataclass
class DeviationReport:
    d: float
    first_impact: float
    full_horizon: float
    per_direction: list
    statuses: list


def _zero_field(dim):
    return ConstantForce((0.0,) * dim)


def uniform_deviation(table: BilliardTable, field: ForceField, T: float, d: float,
                      n_dirs: int = 16, n_times: int = 1000,
                      opts: IntegratorOptions = DEFAULT_OPTIONS) -> DeviationReport:
    """How far trajectories at speed ``d`` stray from force-free motion.

    ``first_impact`` is ``sup |x_v(t) - v t|`` up to the first impact of
    ``x_v``; ``full_horizon`` is ``sup |x_v(t) - z_v(t)|`` over ``[0, T]``
    with ``z_v`` the force-free billiard trajectory. Both are maxima over
    ``n_dirs`` directions (two in 1-D).
    """
    if d <= 0:
        raise ValueError("speed must be positive")
    if table.dim == 1:
        dirs = [np.array([1.0]), np.array([-1.0])]
    else:
        dirs = [np.array([math.cos(a), math.sin(a)])
                for a in 2 * math.pi * np.arange(n_dirs) / n_dirs]
    zero = _zero_field(table.dim)
    x0 = np.zeros(table.dim)
    per_dir, statuses = [], []
    first_max = full_max = 0.0
    for u in dirs:
        v = d * u
        x = integrate_cauchy(table, field, x0, v, T, opts)
        z = integrate_cauchy(table, zero, x0, v, T, opts)
        statuses.append((x.status, z.status))
        t1 = x.impact_times[0] if x.impacts else x.t_end
        ts = np.linspace(0.0, t1, n_times)
        xs, _ = x.sample(ts)
        dev1 = float(np.max(np.linalg.norm(xs - np.outer(ts, v), axis=1)))
        dev2 = math.nan
        if x.completed and z.completed:
            ts = np.linspace(0.0, T, n_times)
            xs, _ = x.sample(ts)
            zs, _ = z.sample(ts)
            dev2 = float(np.max(np.linalg.norm(xs - zs, axis=1)))
            full_max = max(full_max, dev2)
        first_max = max(first_max, dev1)
        per_dir.append((v, dev1, dev2))
    return DeviationReport(float(d), first_max, full_max, per_dir, statuses)


def _fmt(x):
    return format(float(x), ".17g")


def write_attainable_csv(aset: AttainableSet, fh) -> None:
    """Write ``theta,d,y1,y2,status`` rows."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["theta", "d", "y1", "y2", "status"])
    for s in aset.samples:
        w.writerow([_fmt(s.theta), _fmt(s.d), _fmt(s.endpoint[0]), _fmt(s.endpoint[1]), s.status.value])


def write_sweep_csv(sweep: SweepResult, fh) -> None:
    """Write ``d,winding,min_dist,flag`` rows."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["d", "winding", "min_dist", "flag"])
    for e in sweep.entries:
        w.writerow([_fmt(e.d), "" if e.winding is None else e.winding, _fmt(e.min_dist), e.flag])
