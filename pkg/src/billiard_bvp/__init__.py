"""Dirichlet boundary value problems for forced billiards.

Trajectories of ``x'' = f(t, x)`` inside a convex table, reflected
elastically at the wall, are integrated with event location; the
endpoint map ``v -> x_v(T)`` is then searched for zeros by shooting
(1-D) or studied through winding numbers of its shell images (2-D).
"""
from .dynamics import (ConstantForce, ForceField, Monomial, PolynomialForce, apply_impact,
                       eval_force, force_bound, lipschitz_bound, m_l1)
from .degree import (AttainableSet, NormalRays, SweepResult, WindingResult, attainable_set,
                     degree_sweep, normal_ray_solutions, reduce_constant_force, uniform_deviation,
                     winding_number)
from .exceptions import (BilliardError, BracketLost, EscalationFailed, GrazingImpact,
                         MeshBudgetExceeded, NoImpactBeforeT, NotOnBoundary, OriginTooClose,
                         SchemaError, ZeroForce)
from .geometry import (Ball, BilliardTable, Interval, StarShaped2D, TrigProfile, diameter,
                       outer_normal, signed_distance)
from .integrator import (DEFAULT_OPTIONS, IntegratorOptions, Status, Trajectory, first_impact,
                         integrate_cauchy)
from .shooting import (Bracket, DirichletSolution, ShotResult, bisect_solution, count_impacts,
                       endpoint_map, enumerate_solutions, find_brackets, rest_solution,
                       scaling_escalation)

__version__ = "0.1.0"

__all__ = [
    "Ball", "BilliardError", "BilliardTable", "Bracket", "BracketLost", "ConstantForce",
    "DEFAULT_OPTIONS", "DirichletSolution", "EscalationFailed", "ForceField", "GrazingImpact",
    "IntegratorOptions", "Interval", "MeshBudgetExceeded", "Monomial", "NoImpactBeforeT",
    "NormalRays", "NotOnBoundary", "OriginTooClose", "PolynomialForce", "SchemaError",
    "ShotResult", "StarShaped2D", "Status", "SweepResult", "Trajectory", "TrigProfile",
    "WindingResult", "ZeroForce", "AttainableSet", "apply_impact", "attainable_set",
    "bisect_solution", "count_impacts", "degree_sweep", "diameter", "endpoint_map",
    "enumerate_solutions", "eval_force", "find_brackets", "first_impact", "force_bound",
    "integrate_cauchy", "lipschitz_bound", "m_l1", "normal_ray_solutions", "outer_normal",
    "reduce_constant_force", "rest_solution", "scaling_escalation", "signed_distance",
    "uniform_deviation", "winding_number",
]
