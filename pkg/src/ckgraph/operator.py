"""Weak-form mean curvature operator of flow graphs and its linearization.

The operator in divergence form reads

    Q[z] = div(grad z / sqrt(gamma + |grad z|^2))
           - (1/sqrt(gamma + |grad z|^2)) (<grad gamma, grad z>/(2 gamma)
                                           + n gamma rho(z))
           - n lambda(z) H,

with all differential operators taken in the leaf metric.  The continuation
family scales the rate term and the curvature term by ``tau`` and the
boundary data by ``tau`` as well.

Discretization: piecewise-linear conforming elements; the divergence term is
integrated by parts with one-point (centroid) quadrature, the lower-order
terms use three-point edge-midpoint quadrature; ``lambda`` and ``rho`` are
evaluated at the element-midpoint value of ``z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .ambient import AmbientSpace
from .errors import DomainError, MeshError, ParameterError
from .fields import ScalarField
from .mesh import DomainMesh, _hat_gradients

__all__ = [
    "Problem", "SparseSystem", "GraphEvaluation",
    "residual_Q", "residual_Qtau", "jacobian_Qtau",
    "strong_form_values", "graph_normal", "tangent_frame",
    "ambient_frame_inner", "induced_metric",
    "second_fundamental_form", "mean_curvature_of_graph",
    "max_principle_conditions", "MaxPrincipleReport",
    "evaluate_graph", "recover_gradient_hessian", "christoffel_symbols",
    "flux_differential_eigenvalues", "boundary_flux",
]


@dataclass
class Problem:
    """A Dirichlet problem: ambient + mesh + prescribed curvature + data."""

    ambient: AmbientSpace
    mesh: DomainMesh
    H: ScalarField
    phi: np.ndarray          # (nv,) array; meaningful on boundary vertices
    options: Optional[object] = None
    _assembly: Optional["_Assembly"] = field(default=None, repr=False)

    def __post_init__(self):
        if self.H.mesh is not self.mesh:
            raise MeshError("H field bound to a different mesh")
        self.phi = np.asarray(self.phi, dtype=float)
        if self.phi.shape != (self.mesh.n_vertices,):
            raise MeshError("phi must be a per-vertex array (used on the boundary)")
        bvals = self.phi[self.mesh.boundary_vertices]
        if not np.all(np.isfinite(bvals)):
            raise ParameterError("boundary data must be finite")
        if not np.all(bvals < self.ambient.interval_end):
            raise ParameterError("boundary data must stay below the interval end")

    @classmethod
    def create(cls, ambient, mesh, H, phi, options=None) -> "Problem":
        if np.isscalar(H):
            H = ScalarField.constant(mesh, float(H))
        if np.isscalar(phi):
            phi = np.full(mesh.n_vertices, float(phi))
        return cls(ambient, mesh, H, np.asarray(phi, dtype=float), options)

    def assembly(self) -> "_Assembly":
        if self._assembly is None:
            self._assembly = _Assembly(self)
        return self._assembly

    def boundary_values(self, tau: float) -> np.ndarray:
        return tau * self.phi


@dataclass
class SparseSystem:
    """Interior residual and Jacobian of the weak operator."""

    residual: np.ndarray       # (ni,)
    jacobian: sp.csr_matrix    # (ni, ni)
    interior: np.ndarray       # interior vertex indices

    def dump_jacobian(self, path):
        coo = self.jacobian.tocoo()
        with open(path, "w", encoding="utf-8") as fh:
            for i, j, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i} {j} {v!r}\n")


# -- assembly ---------------------------------------------------------------

# hat function values at the three edge-midpoint quadrature points;
# point q is the midpoint of the edge opposite local vertex q
_HATS = 0.5 * (1.0 - np.eye(3))


class _Assembly:
    def __init__(self, problem: Problem):
        amb, mesh = problem.ambient, problem.mesh
        self.problem = problem
        self.tri = mesh.triangles
        self.n = amb.base_dim
        self.G, self.A = _hat_gradients(mesh.vertices, mesh.triangles)
        p = mesh.vertices[self.tri]
        self.cent = p.mean(axis=1)
        S_c = amb.base_metric(self.cent)
        self.Sinv_c = np.linalg.inv(S_c)
        self.sd_c = np.sqrt(np.linalg.det(S_c))
        self.gam_c = np.asarray(amb.gamma(self.cent))
        qp = 0.5 * (p[:, [1, 2, 0]] + p[:, [2, 0, 1]])  # midpoint opposite 0,1,2
        self.qp = qp
        S_q = amb.base_metric(qp)
        self.Sinv_q = np.linalg.inv(S_q)
        self.sd_q = np.sqrt(np.linalg.det(S_q))
        self.gam_q = np.asarray(amb.gamma(qp))
        self.dgam_q = np.asarray(amb.grad_gamma(qp))
        Hv = problem.H.values[self.tri]                    # (nt, 3)
        self.H_q = 0.5 * (Hv.sum(axis=1, keepdims=True) - Hv)
        self.interior = mesh.interior_vertices
        mass = np.zeros(mesh.n_vertices)
        w = (self.A[:, None] / 3.0) * self.sd_q            # (nt, 3)
        np.add.at(mass, self.tri, np.einsum("eq,qa->ea", w, _HATS))
        self.lumped_mass = mass

    # -- pointwise data -----------------------------------------------------

    def _check_interval(self, z):
        amb = self.problem.ambient
        bad = np.nonzero(z >= amb.interval_end)[0]
        if len(bad):
            raise DomainError(
                f"graph value {z[bad[0]]} at vertex {int(bad[0])} reached the "
                f"interval end {amb.interval_end}"
            )

    def _element_state(self, z):
        zt = z[self.tri]
        gz = np.einsum("eai,ea->ei", self.G, zt)
        zmid = zt.mean(axis=1)
        return zt, gz, zmid

    def grad_sup(self, z) -> float:
        _, gz, _ = self._element_state(z)
        norm2 = np.einsum("ei,eij,ej->e", gz, self.Sinv_c, gz)
        return float(np.sqrt(norm2.max()))

    # -- residual and Jacobian ---------------------------------------------

    def residual_full(self, z, tau: float, check=True):
        """Weak residual tested against every hat function (boundary ones
        included); the interior slice is the Newton residual."""
        if check:
            self._check_interval(z)
        amb = self.problem.ambient
        n = self.n
        _, gz, zmid = self._element_state(z)
        lam_m = np.asarray(amb.lam(zmid))
        rho_m = np.asarray(amb.lam_t(zmid)) / lam_m

        w2c = np.einsum("ei,eij,ej->e", gz, self.Sinv_c, gz)
        U_c = np.sqrt(self.gam_c + w2c)
        flux = np.einsum("eai,eij,ej->ea", self.G, self.Sinv_c, gz) / U_c[:, None]
        val = -(self.A * self.sd_c)[:, None] * flux

        w2q = np.einsum("ei,eqij,ej->eq", gz, self.Sinv_q, gz)
        U_q = np.sqrt(self.gam_q + w2q)
        gg_q = np.einsum("eqi,eqij,ej->eq", self.dgam_q, self.Sinv_q, gz)
        P_q = gg_q / (2.0 * self.gam_q) + tau * n * self.gam_q * rho_m[:, None]
        L_q = P_q / U_q + tau * n * lam_m[:, None] * self.H_q
        wq = (self.A[:, None] / 3.0) * self.sd_q
        val -= np.einsum("eq,qa->ea", wq * L_q, _HATS)

        R = np.zeros(len(z))
        np.add.at(R, self.tri, val)
        return R

    def flux_residual_full(self, z):
        """Only the integrated-by-parts divergence term (for flux balance)."""
        self._check_interval(z)
        _, gz, _ = self._element_state(z)
        w2c = np.einsum("ei,eij,ej->e", gz, self.Sinv_c, gz)
        U_c = np.sqrt(self.gam_c + w2c)
        flux = np.einsum("eai,eij,ej->ea", self.G, self.Sinv_c, gz) / U_c[:, None]
        val = -(self.A * self.sd_c)[:, None] * flux
        R = np.zeros(len(z))
        np.add.at(R, self.tri, val)
        return R

    def residual(self, z, tau: float):
        return self.residual_full(z, tau)[self.interior]

    def jacobian_full(self, z, tau: float):
        amb = self.problem.ambient
        n = self.n
        self._check_interval(z)
        _, gz, zmid = self._element_state(z)
        lam_m = np.asarray(amb.lam(zmid))
        lamt_m = np.asarray(amb.lam_t(zmid))
        lamtt_m = np.asarray(amb.lam_tt(zmid))
        rho_m = lamt_m / lam_m
        rhot_m = lamtt_m / lam_m - rho_m**2

        w2c = np.einsum("ei,eij,ej->e", gz, self.Sinv_c, gz)
        U_c = np.sqrt(self.gam_c + w2c)
        K1 = np.einsum("eai,eij,ebj->eab", self.G, self.Sinv_c, self.G)
        Pc = np.einsum("eai,eij,ej->ea", self.G, self.Sinv_c, gz)
        local = -(self.A * self.sd_c)[:, None, None] * (
            K1 / U_c[:, None, None]
            - np.einsum("ea,eb->eab", Pc, Pc) / (U_c**3)[:, None, None]
        )

        w2q = np.einsum("ei,eqij,ej->eq", gz, self.Sinv_q, gz)
        U_q = np.sqrt(self.gam_q + w2q)
        gg_q = np.einsum("eqi,eqij,ej->eq", self.dgam_q, self.Sinv_q, gz)
        P_q = gg_q / (2.0 * self.gam_q) + tau * n * self.gam_q * rho_m[:, None]
        dgg = np.einsum("eqi,eqij,ebj->eqb", self.dgam_q, self.Sinv_q, self.G)
        zdb = np.einsum("ei,eqij,ebj->eqb", gz, self.Sinv_q, self.G)
        dP = dgg / (2.0 * self.gam_q)[..., None] \
            + (tau * n / 3.0) * (self.gam_q * rhot_m[:, None])[..., None]
        dL = dP / U_q[..., None] - P_q[..., None] * zdb / (U_q**3)[..., None] \
            + (tau * n / 3.0) * (lamt_m[:, None] * self.H_q)[..., None]
        wq = (self.A[:, None] / 3.0) * self.sd_q
        local -= np.einsum("eq,qa,eqb->eab", wq, _HATS, dL)

        nv = self.problem.mesh.n_vertices
        rows = np.repeat(self.tri, 3, axis=1).ravel()           # a index
        cols = np.tile(self.tri, (1, 3)).ravel()                # b index
        # local[e, a, b]: rows vary a within blocks of 3
        data = local.transpose(0, 1, 2).ravel()
        J = sp.coo_matrix((data, (rows, cols)), shape=(nv, nv)).tocsr()
        return J

    def system(self, z, tau: float) -> SparseSystem:
        R = self.residual(z, tau)
        J = self.jacobian_full(z, tau)
        ii = self.interior
        return SparseSystem(R, J[ii][:, ii].tocsr(), ii)


# -- public operator API ----------------------------------------------------


def residual_Qtau(problem: Problem, z: ScalarField, tau: float) -> np.ndarray:
    """Weak residual of the continuation operator; per-vertex (all hats)."""
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"continuation parameter {tau} outside [0, 1]")
    return problem.assembly().residual_full(np.asarray(z.values, dtype=float), tau)


def residual_Q(problem: Problem, z: ScalarField) -> np.ndarray:
    """Weak residual of the full operator (``tau = 1``)."""
    return residual_Qtau(problem, z, 1.0)


def jacobian_Qtau(problem: Problem, z: ScalarField, tau: float) -> SparseSystem:
    """Exact linearization of the interior weak residual."""
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"continuation parameter {tau} outside [0, 1]")
    return problem.assembly().system(np.asarray(z.values, dtype=float), tau)


def strong_form_values(problem: Problem, z: ScalarField, tau: float = 1.0) -> np.ndarray:
    """Residual divided by the lumped vertex mass (pointwise strong form)."""
    asm = problem.assembly()
    return residual_Qtau(problem, z, tau) / asm.lumped_mass


def boundary_flux(problem: Problem, z: ScalarField) -> float:
    """Variationally consistent total boundary flux of ``grad z / U``.

    Computed by an independent (non-vectorized) pass testing the divergence
    term against the boundary hat functions; pairs with the vectorized
    assembly in the flux-balance check.
    """
    amb, mesh = problem.ambient, problem.mesh
    G, A = _hat_gradients(mesh.vertices, mesh.triangles)
    is_b = mesh.is_boundary
    zv = z.values
    total = 0.0
    for e, tri in enumerate(mesh.triangles):
        if not is_b[tri].any():
            continue
        cent = mesh.vertices[tri].mean(axis=0)
        S = amb.base_metric(cent)
        Sinv = np.linalg.inv(S)
        sd = math.sqrt(np.linalg.det(S))
        gz = sum(zv[tri[a]] * G[e, a] for a in range(3))
        U = math.sqrt(float(amb.gamma(cent)) + gz @ Sinv @ gz)
        for a in range(3):
            if is_b[tri[a]]:
                total += A[e] * sd * (G[e, a] @ Sinv @ gz) / U
    return float(total)


# -- derivative recovery ----------------------------------------------------


def christoffel_symbols(ambient: AmbientSpace, pts, step=1e-5):
    """Christoffel symbols of the leaf metric by central differences,
    shape (..., k, i, j) for Gamma^k_ij."""
    pts = np.asarray(pts, dtype=float)
    S = np.asarray(ambient.base_metric(pts))
    Sinv = np.linalg.inv(S)
    dS = np.empty(pts.shape[:-1] + (2, 2, 2))  # dS[..., l, i, j] = d_l S_ij
    for l in range(2):
        ee = np.zeros(2)
        ee[l] = step
        dS[..., l, :, :] = (np.asarray(ambient.base_metric(pts + ee))
                            - np.asarray(ambient.base_metric(pts - ee))) / (2 * step)
    # Gamma^k_ij = 1/2 Sinv^{kl} (d_i S_lj + d_j S_li - d_l S_ij)
    term = (np.einsum("...ilj->...lij", dS)
            + np.einsum("...jli->...lij", dS)
            - np.einsum("...lij->...lij", dS))
    return 0.5 * np.einsum("...kl,...lij->...kij", Sinv, term)


def recover_gradient_hessian(mesh: DomainMesh, ambient: AmbientSpace, values):
    """Least-squares quadratic fit over the vertex 2-ring.

    Returns (gradient (nv,2), covariant Hessian (nv,2,2), confident (nv,)).
    The Hessian is corrected by the Christoffel symbols of the leaf metric.
    Vertices with deficient stencils or touching the boundary 1-ring are
    flagged as low confidence.
    """
    values = np.asarray(values, dtype=float)
    nv = mesh.n_vertices
    rings = mesh.vertex_rings(depth=2)
    one_rings = mesh.vertex_rings(depth=1)
    is_b = mesh.is_boundary
    grad = np.zeros((nv, 2))
    hess = np.zeros((nv, 2, 2))
    confident = np.ones(nv, dtype=bool)
    Gam = christoffel_symbols(ambient, mesh.vertices)
    for v in range(nv):
        nbrs = rings[v]
        if len(nbrs) < 5:
            confident[v] = False
        pts = mesh.vertices[nbrs] - mesh.vertices[v]
        rhs = values[nbrs] - values[v]
        cols = [pts[:, 0], pts[:, 1], 0.5 * pts[:, 0] ** 2,
                pts[:, 0] * pts[:, 1], 0.5 * pts[:, 1] ** 2]
        M = np.stack(cols, axis=1)
        # scale columns for conditioning
        scale = np.linalg.norm(M, axis=0)
        scale[scale == 0] = 1.0
        coef, *_ = np.linalg.lstsq(M / scale, rhs, rcond=None)
        coef /= scale
        g = coef[:2]
        Hc = np.array([[coef[2], coef[3]], [coef[3], coef[4]]])
        grad[v] = g
        hess[v] = Hc - np.einsum("kij,k->ij", Gam[v], g)
        if is_b[v] or any(is_b[w] for w in one_rings[v]):
            confident[v] = False
    return grad, hess, confident


@dataclass
class GraphEvaluation:
    """Pointwise extrinsic state of a graph: per-element slope and tilt, and
    per-vertex recovered derivatives."""

    grad2: np.ndarray        # (nt,) |grad z|^2 at centroids
    W: np.ndarray            # (nt,) tilt, lambda^2 W^2 = gamma + |grad z|^2
    flux_norm: np.ndarray    # (nt,) sigma-norm of grad z / sqrt(gamma+|grad z|^2)
    grad: np.ndarray         # (nv, 2) recovered gradient
    hessian: np.ndarray      # (nv, 2, 2) recovered covariant Hessian
    confident: np.ndarray    # (nv,) recovery confidence


def evaluate_graph(problem: Problem, z: ScalarField) -> GraphEvaluation:
    asm = problem.assembly()
    amb = problem.ambient
    zv = z.values
    _, gz, zmid = asm._element_state(zv)
    w2 = np.einsum("ei,eij,ej->e", gz, asm.Sinv_c, gz)
    lam_m = np.asarray(amb.lam(zmid))
    W = np.sqrt(asm.gam_c + w2) / lam_m
    flux_norm = np.sqrt(w2 / (asm.gam_c + w2))
    grad, hess, conf = recover_gradient_hessian(problem.mesh, amb, zv)
    return GraphEvaluation(w2, W, flux_norm, grad, hess, conf)


# -- extrinsic geometry -----------------------------------------------------


def _locate(mesh: DomainMesh, u):
    u = np.asarray(u, dtype=float)
    p = mesh.vertices[mesh.triangles]
    v0 = p[:, 1] - p[:, 0]
    v1 = p[:, 2] - p[:, 0]
    w = u - p[:, 0]
    den = v0[:, 0] * v1[:, 1] - v0[:, 1] * v1[:, 0]
    s = (w[:, 0] * v1[:, 1] - w[:, 1] * v1[:, 0]) / den
    t = (v0[:, 0] * w[:, 1] - v0[:, 1] * w[:, 0]) / den
    ok = (s >= -1e-12) & (t >= -1e-12) & (s + t <= 1 + 1e-12)
    idx = np.nonzero(ok)[0]
    if not len(idx):
        raise DomainError(f"point {u} is outside the mesh")
    e = int(idx[0])
    bary = np.array([1 - s[e] - t[e], s[e], t[e]])
    return e, bary


def _point_state(problem: Problem, z: ScalarField, u):
    asm = problem.assembly()
    e, bary = _locate(problem.mesh, u)
    zt = z.values[problem.mesh.triangles[e]]
    zval = float(bary @ zt)
    gz = np.einsum("ai,a->i", asm.G[e], zt)
    return e, zval, gz


def ambient_frame_inner(ambient: AmbientSpace, t: float, u, X, Z):
    """Ambient inner product of vectors given in the flow frame
    ``(d_0, d_1, ..., d_n)``: block diagonal ``lambda^2/gamma`` and
    ``lambda^2 sigma``."""
    u = np.asarray(u, dtype=float)
    lam2 = float(ambient.lam(t)) ** 2
    g = float(ambient.gamma(u))
    S = np.asarray(ambient.base_metric(u))
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    return lam2 / g * X[0] * Z[0] + lam2 * (X[1:] @ S @ Z[1:])


def tangent_frame(problem: Problem, z: ScalarField, u):
    """Tangent vectors ``X_i = z_i d_0 + d_i`` of the graph at ``u`` in the
    flow frame."""
    _, zval, gz = _point_state(problem, z, u)
    X1 = np.array([gz[0], 1.0, 0.0])
    X2 = np.array([gz[1], 0.0, 1.0])
    return zval, (X1, X2)


def graph_normal(problem: Problem, z: ScalarField, u) -> np.ndarray:
    """Upward unit normal of the graph in the flow frame,
    ``N = (gamma d_0 - grad z) / (lambda^2 W)``; ``<N, Y> > 0``."""
    amb = problem.ambient
    u = np.asarray(u, dtype=float)
    _, zval, gz = _point_state(problem, z, u)
    g = float(amb.gamma(u))
    S = np.asarray(amb.base_metric(u))
    Sinv = np.linalg.inv(S)
    zup = Sinv @ gz
    lam = float(amb.lam(zval))
    U = math.sqrt(g + gz @ zup)       # U = lambda W
    return np.concatenate(([g], -zup)) / (lam * U)


def induced_metric(problem: Problem, z: ScalarField, element: int):
    """Induced metric and its closed-form inverse at the element centroid."""
    asm = problem.assembly()
    amb = problem.ambient
    zt = z.values[problem.mesh.triangles[element]]
    zmid = float(zt.mean())
    gz = np.einsum("ai,a->i", asm.G[element], zt)
    S = np.linalg.inv(asm.Sinv_c[element])
    Sinv = asm.Sinv_c[element]
    g = asm.gam_c[element]
    lam2 = float(amb.lam(zmid)) ** 2
    gi = lam2 * (S + np.outer(gz, gz) / g)
    zup = Sinv @ gz
    ginv = (Sinv - np.outer(zup, zup) / (g + gz @ zup)) / lam2
    return gi, ginv


def second_fundamental_form(problem: Problem, z: ScalarField, vertex: int,
                            recovery=None):
    """Second fundamental form (lower indices) and shape operator at a
    vertex, from patch-recovered derivatives.  Returns (a_ij, shape, flag)."""
    amb, mesh = problem.ambient, problem.mesh
    if recovery is None:
        grad, hess, conf = recover_gradient_hessian(mesh, amb, z.values)
    else:
        grad, hess, conf = recovery
    u = mesh.vertices[vertex]
    zval = float(z.values[vertex])
    zi = grad[vertex]
    zij = hess[vertex]
    g = float(amb.gamma(u))
    dg = np.asarray(amb.grad_gamma(u))
    S = np.asarray(amb.base_metric(u))
    Sinv = np.linalg.inv(S)
    lam = float(amb.lam(zval))
    rr = float(amb.lam_t(zval)) / lam
    zup = Sinv @ zi
    v2 = float(zi @ zup)
    W = math.sqrt(g + v2) / lam
    a = (zij - rr * np.outer(zi, zi) - rr * g * S
         - np.outer(dg, zi) / (2 * g) - np.outer(zi, dg) / (2 * g)
         - (dg @ zup) / (2 * g**2) * np.outer(zi, zi)) / W
    gi = lam**2 * (S + np.outer(zi, zi) / g)
    ginv = np.linalg.inv(gi)
    shape = ginv @ a
    return a, shape, bool(conf[vertex])


def mean_curvature_of_graph(problem: Problem, z: ScalarField):
    """Mean curvature recovered from the trace formula; for verification.

    Returns (ScalarField, confidence flags)."""
    amb, mesh = problem.ambient, problem.mesh
    grad, hess, conf = recover_gradient_hessian(mesh, amb, z.values)
    pts = mesh.vertices
    g = np.asarray(amb.gamma(pts))
    dg = np.asarray(amb.grad_gamma(pts))
    S = np.asarray(amb.base_metric(pts))
    Sinv = np.linalg.inv(S)
    lam = np.asarray(amb.lam(z.values))
    rr = np.asarray(amb.lam_t(z.values)) / lam
    zup = np.einsum("vij,vj->vi", Sinv, grad)
    v2 = np.einsum("vi,vi->v", grad, zup)
    U = np.sqrt(g + v2)                   # U = lambda W
    W = U / lam
    # n lambda H = (1/(lam W)) (sigma^{ij} - z^i z^j/(lam W)^2) z_{j;i}
    #              - gamma_i z^i / (2 (lam W)^3)
    #              - (1/(lam W)) (gamma_i z^i/(2 gamma) + n gamma rho)
    tr1 = np.einsum("vij,vij->v", Sinv, hess) \
        - np.einsum("vi,vj,vij->v", zup, zup, hess) / U**2
    gz = np.einsum("vi,vi->v", dg, zup)
    n = amb.base_dim
    nlamH = tr1 / U - gz / (2 * U**3) - (gz / (2 * g) + n * g * rr) / U
    H = nlamH / (n * lam)
    return ScalarField(mesh, H), conf


# -- ellipticity and maximum principle --------------------------------------


def flux_differential_eigenvalues(problem: Problem, z: ScalarField, element: int):
    """Eigenvalues of the flux differential relative to the leaf metric; they
    must lie in ``[gamma/U^3, 1/U]`` with ``U^2 = gamma + |grad z|^2``."""
    import scipy.linalg as la
    asm = problem.assembly()
    zt = z.values[problem.mesh.triangles[element]]
    gz = np.einsum("ai,a->i", asm.G[element], zt)
    Sinv = asm.Sinv_c[element]
    g = asm.gam_c[element]
    zup = Sinv @ gz
    U = math.sqrt(g + gz @ zup)
    M = Sinv / U - np.outer(zup, zup) / U**3
    vals = la.eigh(M, Sinv, eigvals_only=True)
    return np.sort(vals), g / U**3, 1.0 / U


@dataclass
class MaxPrincipleReport:
    rho_t_margin: float
    lambda_t_H_margin: float
    t_range: tuple
    samples: int

    @property
    def passed(self) -> bool:
        return self.rho_t_margin >= 0 and self.lambda_t_H_margin >= 0

    def to_json(self):
        return {
            "rho_t_margin": self.rho_t_margin,
            "lambda_t_H_margin": self.lambda_t_H_margin,
            "t_range": list(self.t_range),
            "samples": self.samples,
            "passed": self.passed,
        }


def max_principle_conditions(ambient: AmbientSpace, H: ScalarField,
                             t_range, samples: int = 512) -> MaxPrincipleReport:
    """Check ``rho_t >= 0`` and ``lambda_t * H >= 0`` on a flow-time grid."""
    lo, hi = t_range
    hi = min(hi, ambient.interval_end - 1e-9 * max(1.0, abs(ambient.interval_end))
             if math.isfinite(ambient.interval_end) else hi)
    ts = np.linspace(lo, hi, samples)
    lam = np.asarray(ambient.lam(ts))
    lam_t = np.asarray(ambient.lam_t(ts))
    lam_tt = np.asarray(ambient.lam_tt(ts))
    rt = lam_tt / lam - (lam_t / lam) ** 2
    hmin, hmax = float(H.values.min()), float(H.values.max())
    prod = np.minimum(lam_t * hmin, lam_t * hmax)
    return MaxPrincipleReport(float(rt.min()), float(prod.min()),
                              (float(ts[0]), float(ts[-1])), samples)
