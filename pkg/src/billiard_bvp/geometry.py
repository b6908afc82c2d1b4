"""Billiard tables: intervals, discs and star-shaped planar regions.

Every table contains the origin in its interior. Points are given as floats
(1-D) or length-2 sequences (2-D); the hot-path methods ``_sd`` and
``_project`` take plain tuples of floats and are what the integrator calls.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import NotOnBoundary

GRID_SIZE = 4096
FD_STEP = 1e-6


def as_point(x, dim: int) -> tuple:
    """Coerce a float or sequence to a tuple of ``dim`` floats."""
    if np.ndim(x) == 0:
        pt = (float(x),)
    else:
        pt = tuple(float(c) for c in np.ravel(x))
    if len(pt) != dim:
        raise ValueError(f"expected a point in R^{dim}, got {len(pt)} coordinates")
    return pt


@dataclass(frozen=True)
class TrigProfile:
    """Trigonometric polynomial ``c + sum(a_k cos k t + b_k sin k t)``.

    ``harmonics`` holds ``(k, a_k, b_k)`` triples.
    """

    constant: float
    harmonics: tuple = ()

    def __post_init__(self):
        object.__setattr__(
            self, "harmonics",
            tuple((int(k), float(a), float(b)) for k, a, b in self.harmonics),
        )

    def __call__(self, theta):
        if np.ndim(theta):
            theta = np.asarray(theta, dtype=float)
            out = np.full_like(theta, self.constant)
            for k, a, b in self.harmonics:
                out += a * np.cos(k * theta) + b * np.sin(k * theta)
            return out
        out = self.constant
        for k, a, b in self.harmonics:
            out += a * math.cos(k * theta) + b * math.sin(k * theta)
        return out

    def derivative(self, theta):
        if np.ndim(theta):
            theta = np.asarray(theta, dtype=float)
            out = np.zeros_like(theta)
            for k, a, b in self.harmonics:
                out += k * (b * np.cos(k * theta) - a * np.sin(k * theta))
            return out
        out = 0.0
        for k, a, b in self.harmonics:
            out += k * (b * math.cos(k * theta) - a * math.sin(k * theta))
        return out


class BilliardTable:
    """Common interface of the compact tables K (origin in the interior)."""

    dim: int
    boundary_tol_factor: float

    def _sd(self, x: Sequence[float]) -> float:
        raise NotImplementedError

    def _project(self, x: Sequence[float]) -> tuple:
        raise NotImplementedError

    def _normal(self, y: Sequence[float]) -> tuple:
        raise NotImplementedError

    @property
    def boundary_tol(self) -> float:
        return self.boundary_tol_factor * self.diameter()

    def diameter(self) -> float:
        raise NotImplementedError

    def signed_distance(self, x) -> float:
        return self._sd(as_point(x, self.dim))

    def contains(self, x, tol: float = 0.0) -> bool:
        return self.signed_distance(x) <= tol

    def project(self, x) -> np.ndarray:
        """Radial projection of ``x`` (nonzero) onto the boundary."""
        return np.array(self._project(as_point(x, self.dim)))

    def outer_normal(self, y, tol: Optional[float] = None) -> np.ndarray:
        pt = as_point(y, self.dim)
        tol = self.boundary_tol if tol is None else tol
        gap = self._sd(pt)
        if abs(gap) > tol:
            raise NotOnBoundary(f"point {pt} is {gap:.3e} away from the boundary")
        return np.array(self._normal(pt))


@dataclass(frozen=True)
class Interval(BilliardTable):
    """The segment ``[-a, a]``."""

    a: float
    boundary_tol_factor: float = 1e-9
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("interval half-width must be positive")

    def _sd(self, x):
        return abs(x[0]) - self.a

    def _project(self, x):
        return (self.a if x[0] >= 0 else -self.a,)

    def _normal(self, y):
        return (1.0 if y[0] >= 0 else -1.0,)

    def diameter(self):
        return 2.0 * self.a

    @property
    def half_width(self):
        return self.a


@dataclass(frozen=True)
class Ball(BilliardTable):
    """Closed ball of radius ``r`` centred at the origin, ``dim`` in {1, 2}."""

    r: float
    dim: int = 2
    boundary_tol_factor: float = 1e-9

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("ball radius must be positive")
        if self.dim not in (1, 2):
            raise ValueError("only dimensions 1 and 2 are supported")

    def _sd(self, x):
        if self.dim == 1:
            return abs(x[0]) - self.r
        return math.hypot(x[0], x[1]) - self.r

    def _project(self, x):
        if self.dim == 1:
            return (self.r if x[0] >= 0 else -self.r,)
        s = self.r / math.hypot(x[0], x[1])
        return (x[0] * s, x[1] * s)

    def _normal(self, y):
        if self.dim == 1:
            return (1.0 if y[0] >= 0 else -1.0,)
        n = math.hypot(y[0], y[1])
        return (y[0] / n, y[1] / n)

    def diameter(self):
        return 2.0 * self.r

    @property
    def half_width(self):
        return self.r


@dataclass(frozen=True)
class StarShaped2D(BilliardTable):
    """Planar region ``{s (cos t, sin t) : 0 <= s <= radius(t)}``.

    ``signed_distance`` is the radial gap ``|x| - radius(atan2(x))``, not the
    Euclidean distance: its sign and zero set are exact, its magnitude is not.
    Without an explicit ``derivative`` the profile slope comes from
    ``radius.derivative`` when available, else a central difference.
    """

    radius: Callable[[float], float]
    derivative: Optional[Callable[[float], float]] = None
    boundary_tol_factor: float = 1e-9
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        grid = self._grid_values
        if not np.all(np.isfinite(grid)) or grid.min() <= 0:
            raise ValueError("radial profile must be finite and positive")
        if abs(self.radius(0.0) - self.radius(2 * math.pi)) > 1e-12:
            raise ValueError("radial profile must be 2*pi periodic")

    @classmethod
    def from_coefficients(cls, constant, harmonics=(), **kwargs):
        return cls(TrigProfile(constant, tuple(harmonics)), **kwargs)

    @cached_property
    def _grid_values(self):
        thetas = 2 * math.pi * np.arange(GRID_SIZE) / GRID_SIZE
        return np.array([self.radius(float(t)) for t in thetas])

    def slope(self, theta: float) -> float:
        if self.derivative is not None:
            return self.derivative(theta)
        if isinstance(self.radius, TrigProfile):
            return self.radius.derivative(theta)
        h = FD_STEP
        return (self.radius(theta + h) - self.radius(theta - h)) / (2 * h)

    def boundary_point(self, theta: float) -> np.ndarray:
        rho = self.radius(theta)
        return np.array([rho * math.cos(theta), rho * math.sin(theta)])

    def _sd(self, x):
        return math.hypot(x[0], x[1]) - self.radius(math.atan2(x[1], x[0]))

    def _project(self, x):
        theta = math.atan2(x[1], x[0])
        rho = self.radius(theta)
        return (rho * math.cos(theta), rho * math.sin(theta))

    def _normal(self, y):
        theta = math.atan2(y[1], y[0])
        rho, drho = self.radius(theta), self.slope(theta)
        c, s = math.cos(theta), math.sin(theta)
        nx, ny = rho * c + drho * s, rho * s - drho * c
        n = math.hypot(nx, ny)
        return (nx / n, ny / n)

    def diameter(self):
        return 2.0 * float(self._grid_values.max())

    @property
    def half_width(self):
        return float(self._grid_values.max())


def signed_distance(table: BilliardTable, x) -> float:
    """Negative inside, zero on the boundary, positive outside."""
    return table.signed_distance(x)


def outer_normal(table: BilliardTable, y, tol: Optional[float] = None) -> np.ndarray:
    """Unit outward normal at boundary point ``y``.

    Raises NotOnBoundary when ``y`` is farther than ``tol`` (default
    ``table.boundary_tol``) from the boundary.
    """
    return table.outer_normal(y, tol)


def diameter(table: BilliardTable) -> float:
    return table.diameter()
