"""Solvability checks and barrier certificates.

Two layers: a hypothesis checker that evaluates the inequalities under which
the Dirichlet problem is solvable (monotonicity of the conformal factor,
sign conditions on the data, the boundary cylinder condition, and the radial
Ricci bounds), and explicit sub/supersolution constructions whose defining
inequalities are verified pointwise on the mesh, yielding machine-checkable
certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .ambient import AmbientSpace
from .cylinder import inf_boundary_cylinder_curvature
from .errors import ParameterError
from .fields import ScalarField
from .mesh import DomainMesh
from .operator import Problem, recover_gradient_hessian, _hat_gradients

__all__ = [
    "ConditionEntry", "HypothesisReport", "BarrierCertificate",
    "check_hypotheses", "strong_form_Q",
    "height_barrier", "search_height_barrier",
    "boundary_barrier", "upper_barrier_check", "search_boundary_barrier",
    "comparison_check", "ComparisonResult",
    "cylinder_monotonicity_probe", "boundary_normal_slope",
    "sigma_diameter",
]


# -- hypothesis checks ------------------------------------------------------


@dataclass
class ConditionEntry:
    name: str
    inequality: str
    margin: float
    passed: bool
    evaluable: bool = True
    note: str = ""

    def to_json(self):
        return {
            "name": self.name,
            "inequality": self.inequality,
            "margin": self.margin,
            "passed": self.passed,
            "evaluable": self.evaluable,
            "note": self.note,
        }


@dataclass
class HypothesisReport:
    conditions: List[ConditionEntry]
    inf_HK: float
    inf_HGamma: float

    def get(self, name: str) -> ConditionEntry:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions if c.evaluable)

    def failing(self):
        return [c.name for c in self.conditions if c.evaluable and not c.passed]

    def to_json(self):
        return {
            "conditions": [c.to_json() for c in self.conditions],
            "inf_HK": self.inf_HK,
            "inf_HGamma": self.inf_HGamma,
            "passed": self.passed,
        }


def _t_grid(ambient: AmbientSpace, phi_min: float, samples=512):
    lo = min(phi_min, 0.0) - 1.0
    hi = 0.01
    if math.isfinite(ambient.interval_end):
        hi = min(hi, 0.5 * ambient.interval_end)
    return np.linspace(lo, hi, samples)


def check_hypotheses(problem: Problem, samples: int = 512) -> HypothesisReport:
    """Evaluate the solvability conditions; everything is a report entry,
    nothing raises."""
    amb, mesh = problem.ambient, problem.mesh
    n = amb.base_dim
    phi_b = problem.phi[mesh.boundary_vertices]
    ts = _t_grid(amb, float(phi_b.min()), samples)
    lam = np.asarray(amb.lam(ts))
    lam_t = np.asarray(amb.lam_t(ts))
    lam_tt = np.asarray(amb.lam_tt(ts))
    rho_t = lam_tt / lam - (lam_t / lam) ** 2

    inf_hk, inf_hg = inf_boundary_cylinder_curvature(mesh, amb, t=0.0)
    sup_h = float(problem.H.values.max())
    min_h = float(problem.H.values.min())
    serrin = inf_hk - sup_h

    conds = [
        ConditionEntry("lambda_t_nonneg", "lambda_t >= 0",
                       float(lam_t.min()), bool(lam_t.min() >= 0)),
        ConditionEntry("rho_t_nonneg", "(lambda_t/lambda)_t >= 0",
                       float(rho_t.min()), bool(rho_t.min() >= -1e-12)),
        ConditionEntry("phi_nonpos", "phi <= 0 on the boundary",
                       float(-phi_b.max()), bool(phi_b.max() <= 0)),
        ConditionEntry("H_nonneg", "H >= 0", min_h, bool(min_h >= 0)),
        ConditionEntry("H_below_inf_HK", "sup H < inf H_K at t = 0",
                       float(serrin), bool(serrin > 0),
                       note=f"inf_HK={inf_hk!r}; non-strict pass: {serrin >= 0}"),
    ]
    conds.extend(_ricci_conditions(problem, inf_hk, inf_hg))
    return HypothesisReport(conds, inf_hk, inf_hg)


def _ricci_conditions(problem: Problem, inf_hk: float, inf_hg: float):
    """The three radial Ricci branches.

    The ambient radial Ricci along a leaf is tied to the leaf Ricci by
    ``Ric_amb = Ric_leaf - (n k^2 - sqrt(gamma) k_t)`` (constant gamma),
    with the leaf curvature ``k = -lambda_t sqrt(gamma)/lambda^2`` and
    ``sqrt(gamma) k_t = k^2 - gamma rho_t`` at the base leaf.  Only constant
    base curvature gives a direction-independent radial Ricci; anything else
    is reported as not evaluable rather than guessed.
    """
    amb, mesh = problem.ambient, problem.mesh
    n = amb.base_dim
    model = amb.curvature_model
    entries = []
    gam = np.asarray(amb.gamma(mesh.vertices))
    gconst = float(gam.max() - gam.min()) <= 1e-10 * max(1.0, float(np.abs(gam).max()))
    known = model.kind in ("flat", "constant_curvature")
    ric_leaf = (n - 1) * model.kappa0 \
        if model.kind == "constant_curvature" else 0.0

    sg = math.sqrt(float(gam[0]))
    lam_t0 = float(amb.lam_t(0.0))
    lam0 = float(amb.lam(0.0))
    rho0 = lam_t0 / lam0
    rho_t0 = float(amb.lam_tt(0.0)) / lam0 - rho0**2
    k0 = -lam_t0 * sg / lam0**2
    x_term = n * k0**2 - (k0**2 - float(gam[0]) * rho_t0)

    if known and gconst:
        ric_amb = ric_leaf - x_term
        entries.append(ConditionEntry(
            "ricci_simple", "Ric_amb_rad >= -n (inf H_K)^2",
            ric_amb + n * inf_hk**2, bool(ric_amb + n * inf_hk**2 >= 0),
            note=f"Ric_amb_rad={ric_amb!r}"))
        m_ref = ric_amb + x_term + n * inf_hk**2
        entries.append(ConditionEntry(
            "ricci_refined",
            "Ric_amb_rad + (n k^2 - sqrt(gamma) k_t) >= -n (inf H_K)^2",
            m_ref, bool(m_ref >= 0)))
    else:
        why = ("non-constant gamma: radial direction field not computable"
               if known else f"curvature model '{model.kind}' has no radial Ricci")
        entries.append(ConditionEntry(
            "ricci_simple", "Ric_amb_rad >= -n (inf H_K)^2",
            math.nan, False, evaluable=False, note=why))
        entries.append(ConditionEntry(
            "ricci_refined",
            "Ric_amb_rad + (n k^2 - sqrt(gamma) k_t) >= -n (inf H_K)^2",
            math.nan, False, evaluable=False, note=why))
    if known:
        m_c3 = ric_leaf + (n - 1) ** 2 / n * inf_hg**2
        entries.append(ConditionEntry(
            "ricci_corollary3", "n Ric_leaf_rad >= -(n-1)^2 (inf H_Gamma)^2",
            m_c3, bool(m_c3 >= 0), note=f"Ric_leaf_rad={ric_leaf!r}"))
    else:
        entries.append(ConditionEntry(
            "ricci_corollary3", "n Ric_leaf_rad >= -(n-1)^2 (inf H_Gamma)^2",
            math.nan, False, evaluable=False,
            note=f"curvature model '{model.kind}' has no radial Ricci"))
    return entries


# -- pointwise strong form --------------------------------------------------


def strong_form_Q(ambient: AmbientSpace, pts, vals, grads, hess, H):
    """Strong-form operator value from pointwise derivatives, vectorized.

    ``hess`` must be the covariant Hessian in the leaf metric.
    """
    pts = np.asarray(pts, dtype=float)
    vals = np.asarray(vals, dtype=float)
    grads = np.asarray(grads, dtype=float)
    hess = np.asarray(hess, dtype=float)
    H = np.asarray(H, dtype=float)
    g = np.asarray(ambient.gamma(pts))
    dg = np.asarray(ambient.grad_gamma(pts))
    Sinv = np.linalg.inv(np.asarray(ambient.base_metric(pts)))
    pup = np.einsum("...ij,...j->...i", Sinv, grads)
    v2 = np.einsum("...i,...i->...", grads, pup)
    U = np.sqrt(g + v2)
    tr1 = np.einsum("...ij,...ij->...", Sinv, hess) \
        - np.einsum("...i,...j,...ij->...", pup, pup, hess) / U**2
    gz = np.einsum("...i,...i->...", dg, pup)
    lam = np.asarray(ambient.lam(vals))
    rr = np.asarray(ambient.lam_t(vals)) / lam
    n = ambient.base_dim
    return tr1 / U - gz / (2 * U**3) - (gz / (2 * g) + n * g * rr) / U \
        - n * lam * H


def _distance_geometry(mesh: DomainMesh, ambient: AmbientSpace, pts, d_pts):
    """Gradient covector and covariant Hessian of the boundary distance at
    the given points.  Presets use closed forms; otherwise recovered
    derivatives of the discrete distance field (then pts must be vertices).

    Returns (grad (m,2), hess (m,2,2), usable (m,))."""
    pts = np.asarray(pts, dtype=float)
    m = len(pts)
    preset = mesh.preset or {}
    kind = preset.get("kind")
    if kind in ("disk", "cap", "annulus"):
        r = np.linalg.norm(pts, axis=1)
        r = np.maximum(r, 1e-30)
        rhat = pts / r[:, None]
        proj = np.eye(2) - np.einsum("mi,mj->mij", rhat, rhat)
        usable = r > 1e-12
        if kind == "disk":
            grad = -rhat
            hess = -proj / r[:, None, None]
        elif kind == "cap":
            grad = -rhat
            S = np.asarray(ambient.base_metric(pts))
            sigma_proj = S - np.einsum("mi,mj->mij", rhat, rhat)
            hess = -(np.cos(r) / np.sin(r))[:, None, None] * sigma_proj
        else:
            r_in, r_out = preset["r_in"], preset["r_out"]
            mid = 0.5 * (r_in + r_out)
            inner = r <= mid
            sgn = np.where(inner, 1.0, -1.0)
            grad = sgn[:, None] * rhat
            hess = sgn[:, None, None] * proj / r[:, None, None]
            # the equidistant circle is the cut locus of d
            usable = usable & (np.abs(r - mid) > 0.75 * mesh.h)
        return grad, hess, usable
    grad, hess, conf = recover_gradient_hessian(mesh, ambient, mesh.dist_to_boundary)
    if len(pts) != mesh.n_vertices or not np.allclose(pts, mesh.vertices):
        raise ParameterError("generic distance geometry is vertex-based")
    return grad, hess, conf


# -- barrier certificates ---------------------------------------------------


@dataclass
class BarrierCertificate:
    kind: str                      # height | boundary_lower | boundary_upper
    params: dict
    min_margin: float
    margin_location: int           # element (height) or vertex (boundary)
    ordering_ok: Optional[bool]
    worst_ordering_violation: float
    skipped: int
    valid: bool
    gradient_bound: Optional[float] = None
    note: str = ""

    def to_json(self):
        return {
            "kind": self.kind,
            "params": self.params,
            "min_margin": self.min_margin,
            "margin_location": self.margin_location,
            "ordering_ok": self.ordering_ok,
            "worst_ordering_violation": self.worst_ordering_violation,
            "skipped": self.skipped,
            "valid": self.valid,
            "gradient_bound": self.gradient_bound,
            "note": self.note,
        }


def sigma_diameter(mesh: DomainMesh, ambient: AmbientSpace, max_samples=64) -> float:
    """Chart-segment estimate of the diameter in the leaf metric."""
    preset = mesh.preset or {}
    kind = preset.get("kind")
    if kind == "disk":
        return 2.0 * preset["radius"]
    if kind == "cap":
        return 2.0 * preset["theta0"]
    if kind == "annulus":
        return 2.0 * preset["r_out"]
    bv = mesh.boundary_vertices
    if len(bv) > max_samples:
        bv = bv[np.linspace(0, len(bv) - 1, max_samples).astype(int)]
    pts = mesh.vertices[bv]
    best = 0.0
    qs = np.linspace(0.0, 1.0, 9)
    for i in range(len(pts)):
        seg = pts[i][None, None, :] + (pts - pts[i])[:, None, :] * qs[None, :, None]
        S = np.asarray(ambient.base_metric(seg))
        dv = (pts - pts[i])[:, None, :] / 8.0
        speed = np.sqrt(np.einsum("pqi,pqij,pqj->pq", np.broadcast_to(dv, seg.shape),
                                  S, np.broadcast_to(dv, seg.shape)))
        # trapezoid along each segment
        lengths = speed[:, :-1].sum(axis=1) + 0.5 * (speed[:, -1] - speed[:, 0])
        best = max(best, float(lengths.max()))
    return best


def height_barrier(problem: Problem, D: float, B: float,
                   z: Optional[ScalarField] = None):
    """Exponential-in-distance lower barrier under the whole domain.

    ``phi_bar = inf phi + (e^(DB)/D)(e^(-Dd) - 1)``; the certificate holds
    iff the strong-form operator value is positive at every checked element
    centroid.  Returns ``(ScalarField, BarrierCertificate)``.
    """
    amb, mesh = problem.ambient, problem.mesh
    diam = sigma_diameter(mesh, amb)
    if B <= diam:
        raise ParameterError(f"B = {B} must exceed the domain diameter {diam:.6g}")
    if D <= 0:
        raise ParameterError("D must be positive")
    if D * B > 200:      # keep U^3 = (gamma + f'^2)^(3/2) representable
        raise ParameterError(f"exp(D*B) overflows for D*B = {D * B:.3g}")
    phi_inf = float(problem.phi[mesh.boundary_vertices].min())
    d = mesh.dist_to_boundary

    def f(dd):
        return (math.exp(D * B) / D) * (np.exp(-D * dd) - 1.0)

    def fp(dd):
        return -np.exp(D * (B - dd))

    barrier = ScalarField(mesh, phi_inf + f(d))

    tri = mesh.triangles
    cent = mesh.vertices[tri].mean(axis=1)
    d_c = d[tri].mean(axis=1)
    gd, hd, usable = _distance_geometry(mesh, amb, cent, d_c)
    keep = usable.copy()
    keep[mesh.suspect_elements] = False
    vals = phi_inf + f(d_c)
    fpv = fp(d_c)
    grads = fpv[:, None] * gd
    hess = (-D * fpv)[:, None, None] * np.einsum("mi,mj->mij", gd, gd) \
        + fpv[:, None, None] * hd
    H_c = problem.H.values[tri].mean(axis=1)
    Q = strong_form_Q(amb, cent, vals, grads, hess, H_c)
    Qk = Q[keep]
    if len(Qk) == 0:
        raise ParameterError("no usable elements for the height barrier")
    loc_local = int(np.argmin(Qk))
    loc = int(np.nonzero(keep)[0][loc_local])
    min_margin = float(Qk.min())

    ordering_ok, worst = None, 0.0
    if z is not None:
        # two-sided height bound: above the barrier, below the boundary sup
        phi_sup = float(problem.phi[mesh.boundary_vertices].max())
        diff = np.minimum(z.values - barrier.values, phi_sup - z.values)
        worst = float(min(diff.min(), 0.0))
        tol = 10.0 * mesh.h**2
        ordering_ok = bool(diff.min() >= -tol)
    valid = min_margin > 0 and (ordering_ok is not False)
    cert = BarrierCertificate(
        "height", {"D": D, "B": B}, min_margin, loc, ordering_ok, worst,
        int((~keep).sum()), valid)
    return barrier, cert


def search_height_barrier(problem: Problem, z: Optional[ScalarField] = None,
                          B: Optional[float] = None):
    """Doubling search over the exponent rate; first valid certificate wins."""
    amb, mesh = problem.ambient, problem.mesh
    if B is None:
        B = 1.01 * sigma_diameter(mesh, amb)
    failures = []
    for j in range(21):
        D = float(2**j)
        try:
            barrier, cert = height_barrier(problem, D, B, z)
        except ParameterError as exc:
            failures.append({"D": D, "error": str(exc)})
            continue
        if cert.valid:
            cert.note = f"search: {len(failures)} rejected candidates"
            return barrier, cert
        failures.append({"D": D, "min_margin": cert.min_margin})
    raise ParameterError(f"height barrier search exhausted: {failures[-3:]}")


def _boundary_transfer(mesh: DomainMesh, values_on_boundary: np.ndarray):
    """Extend boundary data into the domain, constant along the distance
    direction (closest boundary vertex in the chart)."""
    from scipy.spatial import cKDTree
    bv = mesh.boundary_vertices
    tree = cKDTree(mesh.vertices[bv])
    _, nearest = tree.query(mesh.vertices)
    return values_on_boundary[nearest]


def _boundary_barrier_field(problem: Problem, mu, c, eps, sign):
    amb, mesh = problem.ambient, problem.mesh
    if mu <= 0 or c <= 0 or eps <= 0:
        raise ParameterError("mu, c, eps must be positive")
    d = mesh.dist_to_boundary
    strip = d <= eps + 1e-12
    if not np.any(strip & ~mesh.is_boundary):
        raise ParameterError(f"tubular strip is empty at eps = {eps}")
    mut = c / math.log1p(mu)
    phi_ext = _boundary_transfer(mesh, problem.phi[mesh.boundary_vertices])

    w = -mut * np.log1p(mu * d)
    wp = -mut * mu / (1.0 + mu * d)
    wpp = mut * mu**2 / (1.0 + mu * d) ** 2
    values = phi_ext + sign * w
    return d, strip, phi_ext, values, sign * wp, sign * wpp, mut


def _boundary_barrier_cert(problem: Problem, mu, c, eps, z, sign):
    """Shared machinery for the lower (sign=+1) and upper (sign=-1) strips."""
    amb, mesh = problem.ambient, problem.mesh
    d, strip, phi_ext, values, wp, wpp, mut = \
        _boundary_barrier_field(problem, mu, c, eps, sign)
    if math.isfinite(amb.interval_end) and np.any(
            values[strip] >= amb.interval_end):
        raise ParameterError("barrier leaves the flow interval on the strip")
    barrier = ScalarField(mesh, values)

    gd, hd, usable = _distance_geometry(mesh, amb, mesh.vertices, d)
    const_phi = float(np.ptp(problem.phi[mesh.boundary_vertices])) < 1e-14
    if const_phi:
        gphi = np.zeros((mesh.n_vertices, 2))
        hphi = np.zeros((mesh.n_vertices, 2, 2))
        conf_phi = np.ones(mesh.n_vertices, dtype=bool)
    else:
        gphi, hphi, conf_phi = recover_gradient_hessian(mesh, amb, phi_ext)

    check = strip & ~mesh.is_boundary & usable & conf_phi & (d > 1e-12)
    bad = np.zeros(mesh.n_vertices, dtype=bool)
    bad[mesh.triangles[mesh.suspect_elements].ravel()] = True
    check &= ~bad
    if not np.any(check):
        raise ParameterError("no checkable strip vertices; decrease eps or h")
    idx = np.nonzero(check)[0]
    grads = wp[idx, None] * gd[idx] + gphi[idx]
    hess = wpp[idx, None, None] * np.einsum("mi,mj->mij", gd[idx], gd[idx]) \
        + wp[idx, None, None] * hd[idx] + hphi[idx]
    Q = strong_form_Q(amb, mesh.vertices[idx], values[idx], grads, hess,
                      problem.H.values[idx])
    Qs = sign * Q                       # lower barrier needs Q > 0, upper Q < 0
    loc = int(idx[np.argmin(Qs)])
    min_margin = float(Qs.min())

    ordering_ok, worst = None, 0.0
    if z is not None:
        h = mesh.h
        inner = strip & (d >= eps - 1.5 * h)
        comps = mesh.is_boundary | inner
        diff = sign * (z.values - values)   # must be >= 0 on both components
        worst = float(min(diff[comps].min(), 0.0))
        ordering_ok = bool(worst >= -10.0 * h**2)
    grad_bound = c * mu / math.log1p(mu)
    valid = min_margin > 0 and (ordering_ok is not False)
    name = "boundary_lower" if sign > 0 else "boundary_upper"
    cert = BarrierCertificate(
        name, {"mu": mu, "mu_tilde": mut, "c": c, "eps": eps},
        min_margin, loc, ordering_ok, worst,
        int(len(np.nonzero(strip)[0]) - len(idx)), valid,
        gradient_bound=grad_bound)
    return barrier, cert


def boundary_barrier(problem: Problem, mu: float, c: float, eps: float,
                     z: Optional[ScalarField] = None):
    """Logarithmic lower barrier on the boundary strip: ``w + phi`` with
    ``w = -(c/ln(1+mu)) ln(1+mu d)``, extended boundary data ``phi``.

    The certificate requires a positive strong-form operator value at every
    checkable strip vertex and ``w + phi <= z`` on both strip boundary
    components; it carries the implied slope bound ``|w'(0)| = c mu/ln(1+mu)``.
    """
    return _boundary_barrier_cert(problem, mu, c, eps, z, +1)


def upper_barrier_check(problem: Problem, mu: float, c: float, eps: float,
                        z: Optional[ScalarField] = None):
    """Mirror construction ``-w + phi`` with the reversed inequalities."""
    return _boundary_barrier_cert(problem, mu, c, eps, z, -1)


def search_boundary_barrier(problem: Problem, z: Optional[ScalarField] = None,
                            eps: float = 0.05, upper: bool = False):
    """Logarithmic grid search over (mu, c); first valid certificate wins."""
    span = float(np.ptp(problem.phi[problem.mesh.boundary_vertices]))
    if z is not None:
        span = max(span, float(np.ptp(z.values)))
    scale = max(1.0, 2.0 * span)
    fn = upper_barrier_check if upper else boundary_barrier
    failures = []
    for mu in (10.0**j for j in range(7)):
        for cf in (0.25, 0.5, 1.0, 2.0, 4.0):
            c = cf * scale
            try:
                barrier, cert = fn(problem, mu, c, eps, z)
            except ParameterError as exc:
                failures.append({"mu": mu, "c": c, "error": str(exc)})
                continue
            if cert.valid:
                cert.note = f"search: {len(failures)} rejected candidates"
                return barrier, cert
            failures.append({"mu": mu, "c": c, "min_margin": cert.min_margin})
    raise ParameterError(f"boundary barrier search exhausted: {failures[-3:]}")


# -- comparison and probes --------------------------------------------------


@dataclass
class ComparisonResult:
    ordered: bool
    direction: str                 # "z1<=z2", "z2<=z1", "equal", "incomparable"
    worst_violation: float
    worst_vertex: int

    def to_json(self):
        return {
            "ordered": self.ordered,
            "direction": self.direction,
            "worst_violation": self.worst_violation,
            "worst_vertex": self.worst_vertex,
        }


def comparison_check(problem1: Problem, problem2: Problem,
                     z1: ScalarField, z2: ScalarField,
                     tol: float) -> ComparisonResult:
    """Pointwise ordering of two solutions whose boundary data are ordered
    and whose curvature fields coincide."""
    if problem1.mesh is not problem2.mesh and \
            not np.array_equal(problem1.mesh.vertices, problem2.mesh.vertices):
        raise ParameterError("comparison requires a common mesh")
    if not np.allclose(problem1.H.values, problem2.H.values, atol=1e-14):
        return ComparisonResult(False, "incomparable", math.nan, -1)
    bv = problem1.mesh.boundary_vertices
    p1, p2 = problem1.phi[bv], problem2.phi[bv]
    if np.all(np.abs(p1 - p2) < 1e-14):
        direction = "equal"
        diff = -np.abs(z1.values - z2.values)
    elif np.all(p1 <= p2 + 1e-14):
        direction = "z1<=z2"
        diff = z2.values - z1.values
    elif np.all(p2 <= p1 + 1e-14):
        direction = "z2<=z1"
        diff = z1.values - z2.values
    else:
        return ComparisonResult(False, "incomparable", math.nan, -1)
    worst_vertex = int(np.argmin(diff))
    worst = float(min(diff[worst_vertex], 0.0))
    return ComparisonResult(bool(diff.min() >= -tol), direction, worst,
                            worst_vertex)


def _level_curve_hk(mesh: DomainMesh, ambient: AmbientSpace, eps: float):
    """Curvature of the extracted distance level set on a generic mesh."""
    d = mesh.dist_to_boundary
    segs = []
    for tri in mesh.triangles:
        pts = []
        for a, b in ((0, 1), (1, 2), (2, 0)):
            da, db = d[tri[a]] - eps, d[tri[b]] - eps
            if da * db < 0:
                s = da / (da - db)
                pts.append(mesh.vertices[tri[a]]
                           + s * (mesh.vertices[tri[b]] - mesh.vertices[tri[a]]))
        if len(pts) == 2:
            segs.append(pts)
    if len(segs) < 8:
        raise ParameterError(f"level set extraction failed at depth {eps}")
    # chain segments into a loop by nearest endpoints
    segs = [list(map(np.asarray, s)) for s in segs]
    chain = [segs.pop()[0]]
    cur = chain[0]
    while segs:
        dists = [min(np.linalg.norm(cur - s[0]), np.linalg.norm(cur - s[1]))
                 for s in segs]
        k = int(np.argmin(dists))
        s = segs.pop(k)
        nxt = s[1] if np.linalg.norm(cur - s[0]) <= np.linalg.norm(cur - s[1]) else s[0]
        chain.append(nxt)
        cur = nxt
    pts = np.asarray(chain)
    hks = []
    for i in range(len(pts)):
        p0, p1, p2 = pts[i - 1], pts[i], pts[(i + 1) % len(pts)]
        S = np.asarray(ambient.base_metric(p1))
        e1, e2 = p1 - p0, p2 - p1
        l1 = math.sqrt(e1 @ S @ e1)
        l2 = math.sqrt(e2 @ S @ e2)
        if l1 < 1e-12 or l2 < 1e-12:
            continue
        cosb = float(np.clip((e1 @ S @ e2) / (l1 * l2), -1, 1))
        sign = 1.0 if (e1[0] * e2[1] - e1[1] * e2[0]) >= 0 else -1.0
        hg = sign * math.acos(cosb) / (0.5 * (l1 + l2))
        # inward normal of the level curve: rotate tangent
        eta = np.array([-e2[1], e2[0]])
        eta /= math.sqrt(eta @ S @ eta)
        g = float(ambient.gamma(p1))
        dg = np.asarray(ambient.grad_gamma(p1))
        kap = float(dg @ eta) / (2 * g)
        n = ambient.base_dim
        hks.append((kap + (n - 1) * hg) / n)
    return min(hks)


def cylinder_monotonicity_probe(problem: Problem, depths):
    """Curvature of the flow cylinders over inner distance level sets.

    Returns a dict with per-depth entries and whether the probed curvatures
    stay above the boundary value (the expected monotone behaviour).
    """
    amb, mesh = problem.ambient, problem.mesh
    n = amb.base_dim
    preset = mesh.preset or {}
    kind = preset.get("kind")
    inf_hk, _ = inf_boundary_cylinder_curvature(mesh, amb, t=0.0)
    rows = []
    for eps in depths:
        row = {"eps": float(eps), "skipped": False, "H_K": None}
        try:
            if kind == "disk":
                if eps >= preset["radius"]:
                    raise ParameterError("depth exceeds the inradius")
                hk = 1.0 / (n * (preset["radius"] - eps))
            elif kind == "cap":
                if eps >= preset["theta0"]:
                    raise ParameterError("depth exceeds the inradius")
                hk = 1.0 / (n * math.tan(preset["theta0"] - eps))
            elif kind == "annulus":
                r_in, r_out = preset["r_in"], preset["r_out"]
                if eps >= 0.5 * (r_out - r_in):
                    raise ParameterError("depth reaches the equidistant set")
                hk = min(1.0 / (n * (r_out - eps)), -1.0 / (n * (r_in + eps)))
            else:
                hk = _level_curve_hk(mesh, amb, float(eps))
            row["H_K"] = float(hk)
        except ParameterError as exc:
            row["skipped"] = True
            row["reason"] = str(exc)
        rows.append(row)
    vals = [r["H_K"] for r in rows if not r["skipped"]]
    monotone = bool(vals and min(vals) >= inf_hk - 1e-9)
    return {"rows": rows, "inf_HK_boundary": inf_hk, "monotone": monotone}


def boundary_normal_slope(problem: Problem, z: ScalarField) -> np.ndarray:
    """Inward normal derivative of a field at each boundary vertex, from
    adjacent element gradients."""
    mesh = problem.mesh
    G, A = _hat_gradients(mesh.vertices, mesh.triangles)
    gz = np.einsum("eai,ea->ei", G, z.values[mesh.triangles])
    acc = np.zeros((mesh.n_vertices, 2))
    wsum = np.zeros(mesh.n_vertices)
    for a in range(3):
        np.add.at(acc, mesh.triangles[:, a], gz * A[:, None])
        np.add.at(wsum, mesh.triangles[:, a], A)
    grad = acc / wsum[:, None]
    bv = mesh.boundary_vertices
    return np.einsum("bi,bi->b", grad[bv], mesh.boundary_normal[bv])
