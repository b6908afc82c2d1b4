"""TOML problem configs.

Example (``schema = 1``)::

    schema = 1
    T = 1.0

    [table]
    kind = "interval"            # "interval" (a), "ball" (r, dim) or "star"
    a = 0.125                    # star: constant = 2.0, harmonics = [[3, 1.0, 0.0]]

    [force]
    constant = [2.0]             # or terms = [[coord, t_power, [x_powers...], coef], ...]

    [tolerances]                 # optional; defaults shown
    rtol = 1e-10
    atol = 1e-10
    max_impacts = 10000
    tol_v = 1e-12
    tol_residual = 1e-8

Command blocks (``[simulate]``, ``[shoot]``, ``[solve]``, ``[attainable]``,
``[winding]``, ``[sweep]``, ``[deviation]``) hold defaults for the CLI flags
of the same names.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from numbers import Real
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dynamics import ConstantForce, ForceField, PolynomialForce
from .exceptions import SchemaError
from .geometry import Ball, BilliardTable, Interval, StarShaped2D
from .integrator import IntegratorOptions

SCHEMA_VERSION = 1

TOLERANCE_DEFAULTS = {
    "rtol": 1e-10,
    "atol": 1e-10,
    "max_impacts": 10000,
    "tol_v": 1e-12,
    "tol_residual": 1e-8,
}

# key -> (type check, description)
_NUM = (lambda v: isinstance(v, Real) and not isinstance(v, bool), "a number")
_INT = (lambda v: isinstance(v, int) and not isinstance(v, bool), "an integer")
_NUMLIST = (lambda v: isinstance(v, list) and all(_NUM[0](c) for c in v), "a list of numbers")

COMMAND_KEYS = {
    "simulate": {"v": _NUMLIST, "samples_per_step": _INT},
    "shoot": {"v_min": _NUM, "v_max": _NUM, "grid": _INT},
    "solve": {"max_count": _INT, "v_min": _NUM, "v_max": _NUM, "grid": _INT},
    "attainable": {"d": _NUM, "samples": _INT},
    "winding": {"d": _NUM, "samples": _INT},
    "sweep": {"d_grid": _NUMLIST, "samples": _INT},
    "deviation": {"d": _NUM, "dirs": _INT},
}


@dataclass
class ProblemConfig:
    table: BilliardTable
    force: ForceField
    T: float
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCE_DEFAULTS))
    commands: dict = field(default_factory=dict)

    @property
    def options(self) -> IntegratorOptions:
        return IntegratorOptions(rtol=self.tolerances["rtol"], atol=self.tolerances["atol"],
                                 max_impacts=self.tolerances["max_impacts"])

    def command(self, name: str) -> dict:
        return self.commands.get(name, {})


def _positive(errors, block, key, value):
    path = f"{block}.{key}" if block else key
    if not _NUM[0](value):
        errors.append(f"{path}: expected a number, got {value!r}")
        return None
    if not value > 0:
        errors.append(f"{path}: must be positive, got {value!r}")
        return None
    return float(value)


def _parse_table(raw, errors):
    if not isinstance(raw, dict):
        errors.append("table: missing block")
        return None
    kind = raw.get("kind")
    allowed = {"interval": {"a"}, "ball": {"r", "dim"}, "star": {"constant", "harmonics"}}
    if kind not in allowed:
        errors.append(f"table.kind: expected one of {sorted(allowed)}, got {kind!r}")
        return None
    for key in raw:
        if key != "kind" and key not in allowed[kind] | {"boundary_tol_factor"}:
            errors.append(f"table.{key}: unknown key for kind {kind!r}")
    extra = {}
    if "boundary_tol_factor" in raw:
        btf = _positive(errors, "table", "boundary_tol_factor", raw["boundary_tol_factor"])
        if btf is not None:
            extra["boundary_tol_factor"] = btf
    if kind == "interval":
        if "a" not in raw:
            errors.append("table.a: required for an interval")
            return None
        a = _positive(errors, "table", "a", raw["a"])
        return None if a is None else Interval(a, **extra)
    if kind == "ball":
        if "r" not in raw:
            errors.append("table.r: required for a ball")
            return None
        r = _positive(errors, "table", "r", raw["r"])
        dim = raw.get("dim", 2)
        if dim not in (1, 2) or isinstance(dim, bool):
            errors.append(f"table.dim: must be 1 or 2, got {dim!r}")
            return None
        return None if r is None else Ball(r, dim, **extra)
    constant = raw.get("constant")
    if constant is None:
        errors.append("table.constant: required for a star-shaped table")
        return None
    constant = _positive(errors, "table", "constant", constant)
    harmonics = raw.get("harmonics", [])
    ok = isinstance(harmonics, list) and all(
        isinstance(h, list) and len(h) == 3 and _INT[0](h[0]) and h[0] > 0
        and _NUM[0](h[1]) and _NUM[0](h[2]) for h in harmonics)
    if not ok:
        errors.append("table.harmonics: expected a list of [k, cos_coef, sin_coef] with integer k > 0")
        return None
    if constant is None:
        return None
    try:
        return StarShaped2D.from_coefficients(constant, [tuple(h) for h in harmonics], **extra)
    except ValueError as exc:
        errors.append(f"table: {exc}")
        return None


def _parse_force(raw, errors, dim):
    if not isinstance(raw, dict):
        errors.append("force: missing block")
        return None
    keys = set(raw)
    if keys - {"constant", "terms"}:
        errors.append(f"force: unknown keys {sorted(keys - {'constant', 'terms'})}")
    if ("constant" in raw) == ("terms" in raw):
        errors.append("force: give exactly one of 'constant' or 'terms'")
        return None
    if "constant" in raw:
        value = raw["constant"]
        if _NUM[0](value):
            value = [value]
        if not _NUMLIST[0](value) or not value:
            errors.append("force.constant: expected a list of numbers")
            return None
        if dim is not None and len(value) != dim:
            errors.append(f"force.constant: expected {dim} components, got {len(value)}")
            return None
        return ConstantForce(tuple(value))
    terms = raw["terms"]
    if not isinstance(terms, list):
        errors.append("force.terms: expected a list")
        return None
    parsed = []
    for i, term in enumerate(terms):
        if not (isinstance(term, list) and len(term) == 4 and _INT[0](term[0]) and _INT[0](term[1])
                and isinstance(term[2], list) and all(_INT[0](p) for p in term[2]) and _NUM[0](term[3])):
            errors.append(f"force.terms[{i}]: expected [coord, t_power, [x_powers...], coef]")
            continue
        parsed.append((term[0], term[1], tuple(term[2]), float(term[3])))
    if len(parsed) != len(terms):
        return None
    try:
        return PolynomialForce(tuple(parsed), dim if dim is not None else 1)
    except ValueError as exc:
        errors.append(f"force.terms: {exc}")
        return None


def config_from_dict(data: dict) -> ProblemConfig:
    """Validate a decoded config mapping; every problem is reported at once."""
    errors = []
    known = {"schema", "T", "table", "force", "tolerances"} | set(COMMAND_KEYS)
    for key in data:
        if key not in known:
            errors.append(f"{key}: unknown top-level key")
    schema = data.get("schema")
    if schema != SCHEMA_VERSION:
        errors.append(f"schema: expected {SCHEMA_VERSION}, got {schema!r}")
    T = None
    if "T" not in data:
        errors.append("T: required")
    else:
        T = _positive(errors, "", "T", data["T"])
    table = _parse_table(data.get("table"), errors)
    force = _parse_force(data.get("force"), errors, table.dim if table is not None else None)

    tol = dict(TOLERANCE_DEFAULTS)
    raw_tol = data.get("tolerances", {})
    if not isinstance(raw_tol, dict):
        errors.append("tolerances: expected a table")
        raw_tol = {}
    for key, value in raw_tol.items():
        if key not in TOLERANCE_DEFAULTS:
            errors.append(f"tolerances.{key}: unknown key")
        elif key == "max_impacts":
            if not _INT[0](value) or value < 0:
                errors.append(f"tolerances.max_impacts: expected a non-negative integer, got {value!r}")
            else:
                tol[key] = value
        else:
            v = _positive(errors, "tolerances", key, value)
            if v is not None:
                tol[key] = v

    commands = {}
    for name, rules in COMMAND_KEYS.items():
        block = data.get(name)
        if block is None:
            continue
        if not isinstance(block, dict):
            errors.append(f"{name}: expected a table")
            continue
        for key, value in block.items():
            if key not in rules:
                errors.append(f"{name}.{key}: unknown key")
            elif not rules[key][0](value):
                errors.append(f"{name}.{key}: expected {rules[key][1]}, got {value!r}")
        commands[name] = dict(block)

    if errors:
        raise SchemaError(errors)
    return ProblemConfig(table, force, T, tol, commands)


def parse_config(path) -> ProblemConfig:
    """Read and validate a TOML config file.

    Raises SchemaError (listing every field problem) or OSError.
    """
    text = Path(path).read_bytes()
    try:
        data = tomllib.loads(text.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise SchemaError([f"{path}: not valid TOML: {exc}"]) from exc
    return config_from_dict(data)
