"""Curvature of flow cylinders over the domain boundary.

The cylinder over a boundary curve is ruled by flow lines; its principal
curvature along the flow direction and its inward mean curvature are the
quantities entering the solvability condition (the boundary cylinder must
curve at least as strongly as the prescribed field).
"""

from __future__ import annotations

import math

import numpy as np

from .ambient import AmbientSpace
from .errors import MeshError
from .mesh import DomainMesh

__all__ = [
    "cylinder_kappa",
    "cylinder_mean_curvature",
    "boundary_mean_curvature",
    "inf_boundary_cylinder_curvature",
]


def cylinder_kappa(ambient: AmbientSpace, t, u, eta):
    """Principal curvature of the cylinder along the flow direction.

    ``kappa = (1/lambda) * eta(log sqrt(gamma))`` where ``eta`` is the inward
    unit normal of the boundary in the leaf metric.
    """
    t = ambient.check_t(t)
    u = np.asarray(u, dtype=float)
    eta = np.asarray(eta, dtype=float)
    g = np.asarray(ambient.gamma(u))
    dg = np.asarray(ambient.grad_gamma(u))
    directional = np.einsum("...i,...i->...", dg, eta) / (2.0 * g)
    return directional / np.asarray(ambient.lam(t))


def cylinder_mean_curvature(ambient: AmbientSpace, t, u, eta, H_Gamma):
    """Inward mean curvature of the cylinder over the boundary:
    ``H_K = (kappa + (n-1) H_Gamma / lambda) / n``."""
    n = ambient.base_dim
    kap = cylinder_kappa(ambient, t, u, eta)
    return (kap + (n - 1) * np.asarray(H_Gamma) / np.asarray(ambient.lam(t))) / n


def _loop_neighbors(mesh: DomainMesh, vertex: int):
    for loop in mesh.boundary_loops:
        loop = np.asarray(loop)
        where = np.nonzero(loop == vertex)[0]
        if len(where):
            k = int(where[0])
            n = len(loop)
            return int(loop[(k - 1) % n]), int(loop[(k + 1) % n])
    raise MeshError(f"vertex {vertex} is not on a boundary loop")


def boundary_mean_curvature(mesh: DomainMesh, ambient: AmbientSpace, vertex: int):
    """Mean (geodesic) curvature of the boundary at a vertex, inward normal.

    Returns ``(value, confident)``.  Preset domains use the classical closed
    forms; generic meshes use the turning angle of the boundary polyline
    measured in the leaf metric, with a low-confidence flag on degenerate
    stencils.
    """
    preset = mesh.preset or {}
    kind = preset.get("kind")
    if kind == "disk":
        return 1.0 / preset["radius"], True
    if kind == "cap":
        return 1.0 / math.tan(preset["theta0"]), True
    if kind == "annulus":
        r = float(np.linalg.norm(mesh.vertices[vertex]))
        mid = 0.5 * (preset["r_in"] + preset["r_out"])
        if r > mid:
            return 1.0 / preset["r_out"], True
        return -1.0 / preset["r_in"], True
    prv, nxt = _loop_neighbors(mesh, vertex)
    v = mesh.vertices[vertex]
    S = ambient.base_metric(v)
    e1 = v - mesh.vertices[prv]
    e2 = mesh.vertices[nxt] - v
    l1 = math.sqrt(e1 @ S @ e1)
    l2 = math.sqrt(e2 @ S @ e2)
    if l1 == 0 or l2 == 0:
        return 0.0, False
    cosb = float(np.clip((e1 @ S @ e2) / (l1 * l2), -1.0, 1.0))
    beta = math.acos(cosb)
    # interior on the left: positive chart cross product = convex corner
    sign = 1.0 if (e1[0] * e2[1] - e1[1] * e2[0]) >= 0 else -1.0
    value = sign * beta / (0.5 * (l1 + l2))
    confident = beta < math.pi / 2  # sharp corners are unreliable
    return value, confident


def inf_boundary_cylinder_curvature(mesh: DomainMesh, ambient: AmbientSpace, t: float = 0.0):
    """Infimum over boundary vertices of the inward cylinder curvature at the
    given flow time; also returns the infimum of the boundary curvature."""
    hks, hgs = [], []
    for v in mesh.boundary_vertices:
        hg, _ = boundary_mean_curvature(mesh, ambient, int(v))
        hk = cylinder_mean_curvature(
            ambient, t, mesh.vertices[v], mesh.boundary_normal[v], hg)
        hks.append(float(hk))
        hgs.append(float(hg))
    return min(hks), min(hgs)
