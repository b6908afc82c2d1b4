"""Force fields ``f(t, x)`` and the elastic impact law."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import GrazingImpact
from .geometry import BilliardTable

SUP_INFLATION = 1.1
SUP_GRID = 64
MAX_DEGREE = 6
EPS_GRAZE = 1e-8
EPS_ABS = 1e-12


class ForceField:
    """Right-hand side of ``x'' = f(t, x)``."""

    dim: int

    def _eval(self, t: float, x: Sequence[float]) -> tuple:
        raise NotImplementedError

    def evaluate(self, t, x):
        """Vectorised evaluation; ``t`` and each ``x[i]`` may be arrays."""
        raise NotImplementedError

    def jacobian_norm(self, t, x):
        """Frobenius norm of the x-Jacobian (vectorised)."""
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return False

    @property
    def is_autonomous(self) -> bool:
        return True


@dataclass(frozen=True)
class ConstantForce(ForceField):
    """Constant acceleration ``a`` (a float in 1-D)."""

    value: tuple

    def __post_init__(self):
        object.__setattr__(self, "value", tuple(float(c) for c in np.ravel(self.value)))

    @property
    def dim(self):
        return len(self.value)

    def _eval(self, t, x):
        return self.value

    def evaluate(self, t, x):
        shape = np.broadcast(np.asarray(t), *[np.asarray(c) for c in x]).shape
        return [np.full(shape, c) for c in self.value]

    def jacobian_norm(self, t, x):
        shape = np.broadcast(np.asarray(t), *[np.asarray(c) for c in x]).shape
        return np.zeros(shape)

    @property
    def is_zero(self):
        return all(c == 0.0 for c in self.value)


@dataclass(frozen=True)
class Monomial:
    """``coef * t**t_power * prod(x_j**x_powers[j])`` added to coordinate ``coord``."""

    coord: int
    t_power: int
    x_powers: tuple
    coef: float

    @property
    def degree(self):
        return self.t_power + sum(self.x_powers)


@dataclass(frozen=True)
class PolynomialForce(ForceField):
    """Each coordinate of ``f`` is a polynomial in ``t`` and the coordinates of ``x``.

    >>> PolynomialForce.from_terms([(0, 1, (0,), 6.0)])._eval(0.5, (0.0,))
    (3.0,)
    """

    terms: tuple
    dim: int = 1

    def __post_init__(self):
        terms = tuple(m if isinstance(m, Monomial) else Monomial(int(m[0]), int(m[1]), tuple(int(p) for p in m[2]), float(m[3]))
                      for m in self.terms)
        for m in terms:
            if not 0 <= m.coord < self.dim:
                raise ValueError(f"term coordinate {m.coord} out of range for dim {self.dim}")
            if len(m.x_powers) != self.dim:
                raise ValueError(f"term needs {self.dim} x-exponents, got {len(m.x_powers)}")
            if m.t_power < 0 or min(m.x_powers) < 0:
                raise ValueError("exponents must be non-negative")
            if m.degree > MAX_DEGREE:
                raise ValueError(f"total degree {m.degree} exceeds {MAX_DEGREE}")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_terms(cls, terms, dim=None):
        terms = list(terms)
        if dim is None:
            dim = len(terms[0][2]) if terms else 1
        return cls(tuple(terms), dim)

    def _eval(self, t, x):
        out = [0.0] * self.dim
        for m in self.terms:
            v = m.coef * t ** m.t_power if m.t_power else m.coef
            for xi, p in zip(x, m.x_powers):
                if p:
                    v *= xi ** p
            out[m.coord] += v
        return tuple(out)

    def evaluate(self, t, x):
        t = np.asarray(t, dtype=float)
        x = [np.asarray(c, dtype=float) for c in x]
        shape = np.broadcast(t, *x).shape
        out = [np.zeros(shape) for _ in range(self.dim)]
        for m in self.terms:
            v = m.coef * t ** m.t_power
            for xi, p in zip(x, m.x_powers):
                v = v * xi ** p
            out[m.coord] = out[m.coord] + v
        return out

    def jacobian_norm(self, t, x):
        t = np.asarray(t, dtype=float)
        x = [np.asarray(c, dtype=float) for c in x]
        shape = np.broadcast(t, *x).shape
        jac = {(i, j): np.zeros(shape) for i in range(self.dim) for j in range(self.dim)}
        for m in self.terms:
            for j, pj in enumerate(m.x_powers):
                if pj == 0:
                    continue
                v = m.coef * pj * t ** m.t_power
                for k, (xk, pk) in enumerate(zip(x, m.x_powers)):
                    v = v * xk ** (pk - 1 if k == j else pk)
                jac[m.coord, j] = jac[m.coord, j] + v
        return np.sqrt(sum(g ** 2 for g in jac.values()))

    @property
    def is_zero(self):
        return all(m.coef == 0.0 for m in self.terms)

    @property
    def is_autonomous(self):
        return all(m.t_power == 0 for m in self.terms)


def eval_force(field: ForceField, t: float, x) -> np.ndarray:
    """Value of ``f(t, x)`` as an array of shape ``(dim,)``."""
    x = (float(x),) if np.ndim(x) == 0 else tuple(float(c) for c in np.ravel(x))
    return np.array(field._eval(float(t), x))


def _sup_grid(field: ForceField, table: BilliardTable, T: float, n: int = SUP_GRID):
    """Grid over ``[0, T] x {|x| <= diameter/2}`` as broadcastable arrays."""
    R = table.diameter() / 2
    ts = np.linspace(0.0, T, n)
    axis = np.linspace(-R, R, n)
    if field.dim == 1:
        tt, xx = np.meshgrid(ts, axis, indexing="ij")
        return tt, [xx]
    tt, x1, x2 = np.meshgrid(ts, axis, axis, indexing="ij")
    inside = x1 ** 2 + x2 ** 2 <= R ** 2 * (1 + 1e-12)
    return tt[inside], [x1[inside], x2[inside]]


def force_bound(field: ForceField, table: BilliardTable, T: float,
                inflation: float = SUP_INFLATION) -> float:
    """Sampled sup of ``|f|`` on the table over ``[0, T]``, times ``inflation``."""
    if field.is_zero:
        return 0.0
    tt, xs = _sup_grid(field, table, T)
    vals = field.evaluate(tt, xs)
    return inflation * float(np.max(np.sqrt(sum(v ** 2 for v in vals))))


def m_l1(field: ForceField, table: BilliardTable, T: float,
         inflation: float = SUP_INFLATION) -> float:
    """L1 bound ``T * m_bar`` of the force over the horizon."""
    return T * force_bound(field, table, T, inflation)


def lipschitz_bound(field: ForceField, table: BilliardTable, T: float,
                    inflation: float = SUP_INFLATION) -> float:
    """Sampled sup of the x-Jacobian norm, times ``inflation``."""
    if field.is_zero:
        return 0.0
    tt, xs = _sup_grid(field, table, T)
    return inflation * float(np.max(field.jacobian_norm(tt, xs)))


def _reflect(normal, v, eps_graze=EPS_GRAZE, eps_abs=EPS_ABS):
    vn = sum(a * b for a, b in zip(v, normal))
    speed = math.sqrt(sum(c * c for c in v))
    if abs(vn) < eps_graze * max(speed, eps_abs):
        raise GrazingImpact(f"grazing impact: normal speed {vn:.3e} at speed {speed:.3e}", vn)
    return tuple(c - 2.0 * vn * n for c, n in zip(v, normal))


def apply_impact(normal, v_in, eps_graze: float = EPS_GRAZE, eps_abs: float = EPS_ABS) -> np.ndarray:
    """Elastic reflection ``v - 2 <v, n> n`` of the incoming velocity.

    Raises GrazingImpact when the normal component is below
    ``eps_graze * max(|v|, eps_abs)``.
    """
    n = tuple(float(c) for c in np.ravel(normal))
    v = tuple(float(c) for c in np.ravel(v_in))
    if len(n) != len(v):
        raise ValueError("normal and velocity dimensions differ")
    if abs(math.sqrt(sum(c * c for c in n)) - 1.0) > 1e-12:
        raise ValueError("normal must be a unit vector")
    return np.array(_reflect(n, v, eps_graze, eps_abs))

