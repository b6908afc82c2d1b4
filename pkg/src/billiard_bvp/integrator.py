"""Impulsive Cauchy problem: ``x'' = f(t, x)`` with elastic reflection on the boundary.

Between impacts the ODE is advanced with the Dormand-Prince 5(4) pair and its
quartic continuous extension. Boundary crossings are found by checking the
sign of the table's signed distance at the step end and ``subdivisions - 1``
interior dense-output samples, then localised by bisection in time. The state
at the impact is recomputed with a shortened RK step, snapped radially onto
the boundary and reflected.

Work happens on tuples of floats: the problems are 1-D or 2-D and numpy's
per-call overhead would dominate.
"""
from __future__ import annotations

import bisect
import csv
import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import EPS_ABS, EPS_GRAZE, ForceField, _reflect
from .exceptions import GrazingImpact, NoImpactBeforeT
from .geometry import BilliardTable, as_point

# Dormand-Prince 5(4) tableau.
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
# Continuous extension: y(t + s h) = y + h sum_i K_i sum_j P[i][j] s^(j+1).
P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


class Status(str, enum.Enum):
    COMPLETED = "completed"
    GRAZING = "grazing"
    BUDGET = "impact_budget"


@dataclass(frozen=True)
class IntegratorOptions:
    rtol: float = 1e-10
    atol: float = 1e-10
    max_impacts: int = 10000
    # None means T / 32.
    max_step: Optional[float] = None
    subdivisions: int = 8
    bisection_iters: int = 60
    time_tol: float = 1e-12
    eps_graze: float = EPS_GRAZE
    eps_abs: float = EPS_ABS

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_impacts < 0:
            raise ValueError("max_impacts must be non-negative")
        if self.subdivisions < 1:
            raise ValueError("subdivisions must be at least 1")


DEFAULT_OPTIONS = IntegratorOptions()


(_, P01, P02, P03), _, (_, P21, P22, P23), (_, P31, P32, P33), \
    (_, P41, P42, P43), (_, P51, P52, P53), (_, P61, P62, P63) = P


class _Step:
    """One accepted RK step with its dense-output polynomial.

    Component ``i`` of the state at ``t0 + s h`` is
    ``y0[i] + s (c1 + s (c2 + s (c3 + s c4)))``; coefficients are built on
    first use of a component.
    """

    __slots__ = ("t0", "h", "y0", "K", "coef")

    def __init__(self, t0, h, y0, K):
        self.t0, self.h, self.y0, self.K = t0, h, y0, K
        self.coef = [None] * len(y0)

    def _coef(self, i):
        K, h = self.K, self.h
        k0, k2, k3, k4, k5, k6 = K[0][i], K[2][i], K[3][i], K[4][i], K[5][i], K[6][i]
        c = (h * k0,
             h * (P01 * k0 + P21 * k2 + P31 * k3 + P41 * k4 + P51 * k5 + P61 * k6),
             h * (P02 * k0 + P22 * k2 + P32 * k3 + P42 * k4 + P52 * k5 + P62 * k6),
             h * (P03 * k0 + P23 * k2 + P33 * k3 + P43 * k4 + P53 * k5 + P63 * k6))
        self.coef[i] = c
        return c

    def at(self, s, i):
        c = self.coef[i] or self._coef(i)
        return self.y0[i] + s * (c[0] + s * (c[1] + s * (c[2] + s * c[3])))

    def state(self, t):
        if self.h == 0.0:
            return self.y0
        s = (t - self.t0) / self.h
        return tuple(self.at(s, i) for i in range(len(self.y0)))


@dataclass(frozen=True)
class Segment:
    """Smooth piece of the trajectory between two impacts."""

    t_start: float
    t_end: float
    steps: tuple
    y_end: tuple

    def state(self, t: float) -> tuple:
        if t >= self.t_end or not self.steps:
            return self.y_end
        starts = [s.t0 for s in self.steps]
        i = max(0, bisect.bisect_right(starts, t) - 1)
        return self.steps[i].state(t)


@dataclass(frozen=True)
class ImpactRecord:
    t: float
    point: np.ndarray
    v_in: np.ndarray
    v_out: np.ndarray
    # +1 / -1 for the two ends of a 1-D table, None in 2-D.
    side: Optional[int] = None


@dataclass(frozen=True)
class Trajectory:
    dim: int
    T: float
    segments: tuple
    impacts: tuple
    status: Status
    grazing_time: Optional[float] = None

    @property
    def completed(self) -> bool:
        return self.status == Status.COMPLETED

    @property
    def impact_times(self) -> list:
        return [imp.t for imp in self.impacts]

    @property
    def t_end(self) -> float:
        return self.segments[-1].t_end

    def _segment_at(self, t):
        starts = [seg.t_start for seg in self.segments]
        i = max(0, bisect.bisect_right(starts, t) - 1)
        return self.segments[i]

    def state(self, t: float):
        """``(x, v)`` at ``t``; at an impact time the post-impact velocity."""
        y = self._segment_at(t).state(t)
        return np.array(y[:self.dim]), np.array(y[self.dim:])

    def position(self, t: float) -> np.ndarray:
        return self.state(t)[0]

    @property
    def endpoint(self) -> np.ndarray:
        return np.array(self.segments[-1].y_end[:self.dim])

    @property
    def final_velocity(self) -> np.ndarray:
        return np.array(self.segments[-1].y_end[self.dim:])

    def sample(self, ts):
        """Positions and velocities at the times ``ts`` as two ``(len, dim)`` arrays."""
        ys = np.array([self._segment_at(t).state(t) for t in ts])
        return ys[:, :self.dim], ys[:, self.dim:]

    def nodes(self):
        """Yield ``(t, y, segment_index)`` at every accepted step start and segment end."""
        for j, seg in enumerate(self.segments):
            for st in seg.steps:
                yield st.t0, st.y0, j
            yield seg.t_end, seg.y_end, j


class _Problem:
    """Right-hand side and boundary test bound to one table/field pair."""

    def __init__(self, table: BilliardTable, field: ForceField):
        if field.dim != table.dim:
            raise ValueError(f"force dimension {field.dim} does not match table dimension {table.dim}")
        self.table = table
        self.field = field
        self.n = table.dim
        force = field._eval
        n = self.n

        if n == 1:
            def rhs(t, y):
                return (y[1], force(t, (y[0],))[0])
        else:
            def rhs(t, y):
                a = force(t, y[:n])
                return (*y[n:], *a)
        self.rhs = rhs

    def step(self, t, y, k1, h):
        rhs = self.rhs
        k2 = rhs(t + C2 * h, tuple(yi + h * A21 * a for yi, a in zip(y, k1)))
        k3 = rhs(t + C3 * h, tuple(yi + h * (A31 * a + A32 * b) for yi, a, b in zip(y, k1, k2)))
        k4 = rhs(t + C4 * h, tuple(yi + h * (A41 * a + A42 * b + A43 * c)
                                   for yi, a, b, c in zip(y, k1, k2, k3)))
        k5 = rhs(t + C5 * h, tuple(yi + h * (A51 * a + A52 * b + A53 * c + A54 * d)
                                   for yi, a, b, c, d in zip(y, k1, k2, k3, k4)))
        k6 = rhs(t + h, tuple(yi + h * (A61 * a + A62 * b + A63 * c + A64 * d + A65 * e)
                              for yi, a, b, c, d, e in zip(y, k1, k2, k3, k4, k5)))
        y_new = tuple(yi + h * (B1 * a + B3 * c + B4 * d + B5 * e + B6 * g)
                      for yi, a, c, d, e, g in zip(y, k1, k3, k4, k5, k6))
        k7 = rhs(t + h, y_new)
        err = tuple(h * (E1 * a + E3 * c + E4 * d + E5 * e + E6 * g + E7 * q)
                    for a, c, d, e, g, q in zip(k1, k3, k4, k5, k6, k7))
        return y_new, (k1, k2, k3, k4, k5, k6, k7), err

    def initial_step(self, t, y, f0, opts, h_cap):
        scale = [opts.atol + opts.rtol * abs(yi) for yi in y]
        d0 = math.sqrt(sum((yi / s) ** 2 for yi, s in zip(y, scale)) / len(y))
        d1 = math.sqrt(sum((fi / s) ** 2 for fi, s in zip(f0, scale)) / len(y))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, h_cap)
        y1 = tuple(yi + h0 * fi for yi, fi in zip(y, f0))
        f1 = self.rhs(t + h0, y1)
        d2 = math.sqrt(sum(((a - b) / s) ** 2 for a, b, s in zip(f1, f0, scale)) / len(y)) / h0
        if d1 <= 1e-15 and d2 <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** 0.2
        return min(100 * h0, h1, h_cap)

    def positions_sd(self, st: _Step, s):
        """Signed distance at fraction ``s`` of a step (dense output)."""
        if self.n == 1:
            return self.table._sd((st.at(s, 0),))
        return self.table._sd((st.at(s, 0), st.at(s, 1)))


@dataclass
class _Crossing:
    t: float
    y: tuple
    step: _Step


def _advance(prob: _Problem, t, y, T, opts: IntegratorOptions, h_max):
    """Integrate from ``(t, y)`` until the first boundary crossing or ``T``.

    Returns ``(steps, crossing, y_last)``; ``crossing`` is None when ``T`` is
    reached, in which case ``y_last`` is the state at ``T``.
    """
    steps = []
    f0 = prob.rhs(t, y)
    remaining = T - t
    if remaining <= 0:
        return steps, None, y
    h = prob.initial_step(t, y, f0, opts, min(h_max, remaining))
    sub = opts.subdivisions
    sd = prob.table._sd
    n = prob.n
    while True:
        remaining = T - t
        last = h >= remaining * (1 - 1e-12)
        if last:
            h = remaining
        y_new, K, err = prob.step(t, y, f0, h)
        en = math.sqrt(sum(
            (e / (opts.atol + opts.rtol * max(abs(a), abs(b)))) ** 2
            for e, a, b in zip(err, y, y_new)) / len(y))
        if en > 1.0 and h > 16 * math.ulp(max(1.0, abs(t))):
            h *= max(MIN_FACTOR, SAFETY * en ** -0.2)
            continue
        st = _Step(t, h, y, K)
        hit = None
        for j in range(1, sub + 1):
            if j == sub:
                gap = sd(y_new[:n])
            else:
                gap = prob.positions_sd(st, j / sub)
            if gap > 0.0:
                hit = j
                break
        if hit is not None:
            lo, hi = (hit - 1) / sub, hit / sub
            for _ in range(opts.bisection_iters):
                if (hi - lo) * h <= opts.time_tol:
                    break
                mid = 0.5 * (lo + hi)
                if prob.positions_sd(st, mid) > 0.0:
                    hi = mid
                else:
                    lo = mid
            s_hit = 0.5 * (lo + hi)
            h_hit = s_hit * h
            y_hit, K_hit, _ = prob.step(t, y, f0, h_hit)
            part = _Step(t, h_hit, y, K_hit)
            steps.append(part)
            return steps, _Crossing(t + h_hit, y_hit, part), y_hit
        steps.append(st)
        if last:
            return steps, None, y_new
        t, y, f0 = t + h, y_new, K[6]
        factor = MAX_FACTOR if en == 0.0 else min(MAX_FACTOR, SAFETY * en ** -0.2)
        h = min(h * factor, h_max)


def _side(table, point):
    if table.dim == 1:
        return 1 if point[0] > 0 else -1
    return None


def integrate_cauchy(table: BilliardTable, field: ForceField, x0, v, T: float,
                     opts: IntegratorOptions = DEFAULT_OPTIONS, t0: float = 0.0) -> Trajectory:
    """Integrate the impulsive Cauchy problem on ``[t0, T]``.

    ``x0`` must lie in the interior of ``table``. Grazing contacts and impact
    budgets end the run early; the returned trajectory then carries the
    corresponding ``status`` and stops at the failure time.
    """
    n = table.dim
    x0 = as_point(x0, n)
    v = as_point(v, n)
    if not T > t0:
        raise ValueError("horizon must exceed the start time")
    if table._sd(x0) >= 0:
        raise ValueError("initial point must lie in the interior of the table")
    prob = _Problem(table, field)
    h_max = opts.max_step if opts.max_step is not None else (T - t0) / 32
    t, y = float(t0), x0 + v
    segments, impacts = [], []
    status, t_graze = Status.COMPLETED, None
    from_impact = False
    while True:
        steps, cross, y_last = _advance(prob, t, y, T, opts, h_max)
        if cross is None:
            segments.append(Segment(t, T, tuple(steps), y_last))
            break
        if from_impact and cross.t - t <= 2 * opts.time_tol:
            segments.append(Segment(t, cross.t, tuple(steps), cross.y))
            status, t_graze = Status.GRAZING, cross.t
            break
        x_in, v_in = cross.y[:n], cross.y[n:]
        point = table._project(x_in)
        try:
            normal = table._normal(point)
            v_out = _reflect(normal, v_in, opts.eps_graze, opts.eps_abs)
        except GrazingImpact:
            segments.append(Segment(t, cross.t, tuple(steps), cross.y))
            status, t_graze = Status.GRAZING, cross.t
            break
        segments.append(Segment(t, cross.t, tuple(steps), point + v_in))
        impacts.append(ImpactRecord(cross.t, np.array(point), np.array(v_in), np.array(v_out),
                                    _side(table, point)))
        if len(impacts) > opts.max_impacts:
            status = Status.BUDGET
            break
        t, y = cross.t, point + v_out
        from_impact = True
        if T - t <= opts.time_tol:
            segments.append(Segment(t, T, (), y))
            break
    return Trajectory(n, float(T), tuple(segments), tuple(impacts), status, t_graze)


def first_impact(table: BilliardTable, field: ForceField, x0, v, t_from: float = 0.0,
                 t_max: Optional[float] = None, opts: IntegratorOptions = DEFAULT_OPTIONS):
    """Earliest boundary contact after ``t_from`` as ``(t, point, v_in)``.

    Searches up to ``t_max`` (default ``t_from + 1``) and raises
    NoImpactBeforeT when the boundary is not reached.
    """
    n = table.dim
    x0 = as_point(x0, n)
    v = as_point(v, n)
    t_max = t_from + 1.0 if t_max is None else t_max
    if table._sd(x0) >= 0:
        raise ValueError("initial point must lie in the interior of the table")
    prob = _Problem(table, field)
    h_max = opts.max_step if opts.max_step is not None else (t_max - t_from) / 32
    _, cross, _ = _advance(prob, float(t_from), x0 + v, t_max, opts, h_max)
    if cross is None:
        raise NoImpactBeforeT(f"no impact in [{t_from}, {t_max}]")
    return cross.t, np.array(table._project(cross.y[:n])), np.array(cross.y[n:])


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(traj: Trajectory, fh, samples_per_step: int = 1) -> None:
    """Write ``t,x1[,x2],v1[,v2],segment`` rows at step nodes (plus dense samples)."""
    d = traj.dim
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t"] + [f"x{i + 1}" for i in range(d)] + [f"v{i + 1}" for i in range(d)] + ["segment"])
    for j, seg in enumerate(traj.segments):
        for st in seg.steps:
            for k in range(samples_per_step):
                t = st.t0 + st.h * k / samples_per_step
                y = st.y0 if k == 0 else st.state(t)
                w.writerow([_fmt(t)] + [_fmt(c) for c in y] + [j])
        w.writerow([_fmt(seg.t_end)] + [_fmt(c) for c in seg.y_end] + [j])


def write_impacts_csv(traj: Trajectory, fh) -> None:
    """Write ``t,point1[,point2],vin1[,vin2],vout1[,vout2],side`` rows."""
    d = traj.dim
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t"] + [f"point{i + 1}" for i in range(d)] + [f"vin{i + 1}" for i in range(d)]
               + [f"vout{i + 1}" for i in range(d)] + ["side"])
    for imp in traj.impacts:
        w.writerow([_fmt(imp.t)] + [_fmt(c) for c in imp.point] + [_fmt(c) for c in imp.v_in]
                   + [_fmt(c) for c in imp.v_out] + ["" if imp.side is None else imp.side])
