"""Problem-file ingestion: schema validation and assembly of a Problem."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional

import jsonschema
import numpy as np

from . import ambient as ambient_mod
from .ambient import AmbientSpace, CurvatureModel, preset_ambient, PRESET_NAMES
from .errors import ParameterError, SchemaError
from .expressions import compile_expression, compile_univariate
from .fields import ScalarField
from .mesh import annulus_mesh, cap_mesh, disk_mesh, mesh_from_json
from .operator import Problem
from .solver import SolverOptions

__all__ = ["PROBLEM_SCHEMA", "LoadedProblem", "load_problem", "validate_document"]

_FIELD_SPEC = {
    "type": "object",
    "additionalProperties": False,
    "minProperties": 1,
    "maxProperties": 1,
    "properties": {
        "constant": {"type": "number"},
        "expression": {"type": "string"},
        "csv": {"type": "string"},
    },
}

PROBLEM_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["ambient", "domain", "H", "phi"],
    "properties": {
        "ambient": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "preset": {"enum": list(PRESET_NAMES)},
                "params": {"type": "object"},
                "custom": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["lam"],
                    "properties": {
                        "lam": {"type": "string"},
                        "lam_t": {"type": "string"},
                        "lam_tt": {"type": "string"},
                        "interval_end": {"type": ["number", "string"]},
                        "gamma": {"type": "string"},
                        "base_metric": {"enum": ["flat", "round_sphere"]},
                        "curvature": {
                            "type": "object",
                            "additionalProperties": False,
                            "properties": {
                                "kind": {"enum": ["flat", "constant_curvature",
                                                  "unavailable"]},
                                "kappa0": {"type": "number"},
                            },
                        },
                    },
                },
            },
        },
        "domain": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "preset": {"enum": ["disk", "annulus", "cap"]},
                "params": {"type": "object", "additionalProperties": False,
                           "properties": {
                               "radius": {"type": "number"},
                               "theta0": {"type": "number"},
                               "r_in": {"type": "number"},
                               "r_out": {"type": "number"},
                           }},
                "mesh": {"type": "string"},
            },
        },
        "resolution": {"type": "number", "exclusiveMinimum": 0},
        "H": _FIELD_SPEC,
        "phi": _FIELD_SPEC,
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "newton_tol": {"type": "number"},
                "max_newton_iters": {"type": "integer"},
                "initial_tau_step": {"type": "number"},
                "min_tau_step": {"type": "number"},
                "damping_factor": {"type": "number"},
                "max_damping_halvings": {"type": "integer"},
                "clamp_margin": {"type": "number"},
            },
        },
        "checks": {
            "type": "array",
            "items": {"enum": ["hypotheses", "barriers", "monotonicity",
                               "max_principle"]},
        },
        "verify_tolerance": {"type": "number", "exclusiveMinimum": 0},
    },
}


@dataclass
class LoadedProblem:
    problem: Problem
    options: SolverOptions
    checks: List[str]
    verify_tolerance: float
    document: dict
    path: Optional[str] = None


def validate_document(doc):
    validator = jsonschema.Draft202012Validator(PROBLEM_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: e.json_path)
    if errors:
        lines = [f"{e.json_path}: {e.message}" for e in errors]
        raise SchemaError("problem file rejected:\n  " + "\n  ".join(lines))
    amb = doc["ambient"]
    if ("preset" in amb) == ("custom" in amb):
        raise SchemaError("$.ambient: exactly one of 'preset' or 'custom' required")
    dom = doc["domain"]
    if ("preset" in dom) == ("mesh" in dom):
        raise SchemaError("$.domain: exactly one of 'preset' or 'mesh' required")
    if "preset" in dom and "resolution" not in doc:
        raise SchemaError("$.resolution: required with a preset domain")


def _fd_pair(fn, step=1e-6):
    def d1(t):
        return (fn(np.asarray(t) + step) - fn(np.asarray(t) - step)) / (2 * step)

    def d2(t):
        t = np.asarray(t)
        return (fn(t + step) - 2 * fn(t) + fn(t - step)) / step**2

    return d1, d2


def _build_ambient(doc) -> AmbientSpace:
    spec = doc["ambient"]
    if "preset" in spec:
        return preset_ambient(spec["preset"], params=spec.get("params"))
    cu = spec["custom"]
    lam = compile_univariate(cu["lam"])
    lam_t = compile_univariate(cu["lam_t"]) if "lam_t" in cu else None
    lam_tt = compile_univariate(cu["lam_tt"]) if "lam_tt" in cu else None
    if lam_t is None or lam_tt is None:
        d1, d2 = _fd_pair(lam)
        lam_t = lam_t or d1
        lam_tt = lam_tt or d2
    end = cu.get("interval_end", "inf")
    end = math.inf if end == "inf" else float(end)
    if "gamma" in cu:
        gfun = compile_expression(cu["gamma"])

        def grad_gamma(pts, _g=gfun, _s=1e-6):
            pts = np.asarray(pts, dtype=float)
            out = np.empty(pts.shape)
            for i in range(2):
                e = np.zeros(2)
                e[i] = _s
                out[..., i] = (_g(pts + e) - _g(pts - e)) / (2 * _s)
            return out
    else:
        gfun, grad_gamma = ambient_mod._ones_field, ambient_mod._zero_grad
    metric = ambient_mod.round_sphere_metric \
        if cu.get("base_metric") == "round_sphere" else ambient_mod.flat_metric
    curv = cu.get("curvature", {"kind": "unavailable"})
    model = CurvatureModel(curv.get("kind", "unavailable"),
                           curv.get("kappa0", 0.0))
    return AmbientSpace(
        name="custom", lam=lam, lam_t=lam_t, lam_tt=lam_tt,
        interval_end=end, gamma=gfun, grad_gamma=grad_gamma,
        base_metric=metric, curvature_model=model)


def _build_mesh(doc, ambient, base_dir: Path):
    dom = doc["domain"]
    if "mesh" in dom:
        path = base_dir / dom["mesh"]
        with open(path, "r", encoding="utf-8") as fh:
            return mesh_from_json(json.load(fh), ambient)
    h = float(doc["resolution"])
    params = dom.get("params", {})
    kind = dom["preset"]
    if kind == "disk":
        if "radius" not in params:
            raise SchemaError("$.domain.params.radius: required for a disk")
        return disk_mesh(params["radius"], h, ambient)
    if kind == "cap":
        if "theta0" not in params:
            raise SchemaError("$.domain.params.theta0: required for a cap")
        return cap_mesh(params["theta0"], h, ambient)
    for key in ("r_in", "r_out"):
        if key not in params:
            raise SchemaError(f"$.domain.params.{key}: required for an annulus")
    return annulus_mesh(params["r_in"], params["r_out"], h, ambient)


def _build_field(spec, mesh, base_dir: Path) -> ScalarField:
    if "constant" in spec:
        return ScalarField.constant(mesh, spec["constant"])
    if "expression" in spec:
        return ScalarField(mesh, compile_expression(spec["expression"])(mesh.vertices))
    return ScalarField.from_csv(mesh, base_dir / spec["csv"])


def load_problem(path) -> LoadedProblem:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read problem file: {exc}") from exc
    return load_problem_document(doc, base_dir=path.parent, path=str(path))


def load_problem_document(doc, base_dir=".", path=None) -> LoadedProblem:
    validate_document(doc)
    base_dir = Path(base_dir)
    amb = _build_ambient(doc)
    mesh = _build_mesh(doc, amb, base_dir)
    H = _build_field(doc["H"], mesh, base_dir)
    phi_field = _build_field(doc["phi"], mesh, base_dir)
    problem = Problem(amb, mesh, H, phi_field.values)
    options = SolverOptions()
    if "solver" in doc:
        options = replace(options, **doc["solver"])
    checks = doc.get("checks", ["hypotheses"])
    return LoadedProblem(problem, options, checks,
                         float(doc.get("verify_tolerance", 0.05)),
                         doc, path)
