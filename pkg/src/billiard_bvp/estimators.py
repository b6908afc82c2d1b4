"""scikit-learn style wrappers around the shooting and winding machinery.

The estimators hold a table, a force and a horizon as hyperparameters, so
``get_params``/``set_params``/``clone`` work as usual. ``fit`` validates the
problem and caches problem constants; it ignores ``X``. Inputs to
``transform``/``predict`` are 2-D arrays of velocities or speeds.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .degree import attainable_set, winding_number
from .dynamics import ForceField, m_l1
from .exceptions import MeshBudgetExceeded, OriginTooClose
from .geometry import BilliardTable
from .integrator import IntegratorOptions
from .shooting import endpoint_map, enumerate_solutions, rest_solution


def _check_problem(table, force, T):
    if not isinstance(table, BilliardTable):
        raise TypeError(f"table must be a BilliardTable, got {type(table).__name__}")
    if not isinstance(force, ForceField):
        raise TypeError(f"force must be a ForceField, got {type(force).__name__}")
    if getattr(force, "dim", table.dim) != table.dim:
        raise ValueError(f"force is {force.dim}-D but the table is {table.dim}-D")
    if not (isinstance(T, (int, float)) and T > 0 and math.isfinite(T)):
        raise ValueError(f"T must be a positive finite number, got {T!r}")


class _ProblemMixin:
    def _fit_problem(self):
        _check_problem(self.table, self.force, self.T)
        self.options_ = IntegratorOptions(rtol=self.rtol, atol=self.atol,
                                          max_impacts=self.max_impacts)
        self.m_l1_ = m_l1(self.force, self.table, self.T)
        self.n_features_in_ = self.table.dim
        return self

    def _velocities(self, X):
        check_is_fitted(self)
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def _endpoints(self, X):
        out = np.empty_like(X)
        for i, v in enumerate(X):
            shot = endpoint_map(self.table, self.force, v[0] if len(v) == 1 else v, self.T,
                                self.options_)
            out[i] = shot.endpoint
        return out


class EndpointMap(_ProblemMixin, TransformerMixin, BaseEstimator):
    """Map initial velocities (rows of ``X``) to endpoints ``x_v(T)``.

    Failed shots (grazing or impact budget) give NaN rows.

    >>> from billiard_bvp import Interval, ConstantForce
    >>> em = EndpointMap(Interval(0.125), ConstantForce(2.0)).fit()
    >>> em.transform([[0.0]]).round(6)
    array([[0.085786]])
    """

    def __init__(self, table=None, force=None, T=1.0, rtol=1e-10, atol=1e-10, max_impacts=10000):
        self.table = table
        self.force = force
        self.T = T
        self.rtol = rtol
        self.atol = atol
        self.max_impacts = max_impacts

    def fit(self, X=None, y=None):
        return self._fit_problem()

    def transform(self, X):
        return self._endpoints(self._velocities(X))


class DirichletShooter(_ProblemMixin, BaseEstimator):
    """Find Dirichlet solutions of a 1-D problem at ``fit`` time.

    After fitting, ``velocities_`` holds the solution velocities sorted by
    speed, ``residuals_`` and ``impact_counts_`` their diagnostics.
    ``predict`` evaluates the endpoint map, so ``predict(velocities_)`` is
    near zero.
    """

    def __init__(self, table=None, force=None, T=1.0, max_count=3, v_min=None, v_max=None,
                 n_grid=None, tol_v=1e-12, tol_residual=1e-8, rtol=1e-10, atol=1e-10,
                 max_impacts=10000):
        self.table = table
        self.force = force
        self.T = T
        self.max_count = max_count
        self.v_min = v_min
        self.v_max = v_max
        self.n_grid = n_grid
        self.tol_v = tol_v
        self.tol_residual = tol_residual
        self.rtol = rtol
        self.atol = atol
        self.max_impacts = max_impacts

    def fit(self, X=None, y=None):
        self._fit_problem()
        if self.table.dim != 1:
            raise ValueError("DirichletShooter handles 1-D tables")
        if (self.v_min is None) != (self.v_max is None):
            raise ValueError("give both v_min and v_max or neither")
        v_range = None if self.v_min is None else (self.v_min, self.v_max)
        self.diagnostics_ = []
        self.solutions_ = enumerate_solutions(self.table, self.force, self.T, self.max_count,
                                              v_range, self.n_grid, self.tol_v, self.tol_residual,
                                              self.options_, diagnostics=self.diagnostics_)
        self.velocities_ = np.array([s.v for s in self.solutions_], dtype=float).reshape(-1, 1)
        self.residuals_ = np.array([s.residual for s in self.solutions_], dtype=float)
        self.impact_counts_ = np.array([s.impact_count for s in self.solutions_], dtype=int)
        self.rest_solution_ = rest_solution(self.table, self.force, self.T, self.tol_residual,
                                            self.options_)
        return self

    def predict(self, X):
        return self._endpoints(self._velocities(X))


class ShellWinding(_ProblemMixin, TransformerMixin, BaseEstimator):
    """Map speeds (one column) to winding numbers of their attainable curves.

    Shells whose curve touches the origin, or cannot be resolved, give NaN;
    ``flags_`` from the last ``transform`` says which ("origin"/"mesh").
    """

    def __init__(self, table=None, force=None, T=1.0, n_samples=64, rtol=1e-10, atol=1e-10,
                 max_impacts=10000):
        self.table = table
        self.force = force
        self.T = T
        self.n_samples = n_samples
        self.rtol = rtol
        self.atol = atol
        self.max_impacts = max_impacts

    def fit(self, X=None, y=None):
        self._fit_problem()
        if self.table.dim != 2:
            raise ValueError("ShellWinding handles planar tables")
        return self

    def transform(self, X):
        check_is_fitted(self)
        D = check_array(X, dtype=float)
        if D.shape[1] != 1:
            raise ValueError("pass speeds as a single column")
        out = np.full((len(D), 1), np.nan)
        self.flags_ = []
        for i, d in enumerate(D[:, 0]):
            aset = attainable_set(self.table, self.force, self.T, d, self.n_samples, self.options_)
            try:
                out[i, 0] = winding_number(aset).winding
                self.flags_.append("")
            except OriginTooClose:
                self.flags_.append("origin")
            except MeshBudgetExceeded:
                self.flags_.append("mesh")
        return out
