"""Triangulated chart domains.

A :class:`DomainMesh` is a conforming triangulation of a bounded domain in a
single chart of the base leaf, together with ordered boundary loops, inward
unit normals (with respect to the leaf metric), and the distance-to-boundary
field.  Preset constructors (disk, annulus, spherical cap) carry closed forms
for the distance and the boundary curvature; generic meshes fall back to
discrete estimates.

Boundary loops are ordered with the interior on the left, so rotating the
tangent by +90 degrees in the chart points inward.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .ambient import AmbientSpace
from .errors import MeshError, ParameterError

__all__ = ["DomainMesh", "disk_mesh", "annulus_mesh", "cap_mesh",
           "mesh_from_arrays", "mesh_from_json", "mesh_to_json"]


@dataclass
class DomainMesh:
    vertices: np.ndarray          # (nv, 2) chart coordinates
    triangles: np.ndarray         # (nt, 3) positively oriented
    boundary_loops: list          # list of int arrays, interior on the left
    boundary_normal: np.ndarray   # (nv, 2); valid rows only at boundary vertices
    dist_to_boundary: np.ndarray  # (nv,) sigma-geodesic distance to the boundary
    h: float                      # mesh size (max sigma edge length)
    preset: Optional[dict] = None
    suspect_elements: np.ndarray = None  # (nt,) bool, cut-locus suspects
    _rings: Optional[list] = field(default=None, repr=False)

    # -- basic derived data -------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(np.concatenate([np.asarray(l) for l in self.boundary_loops]))

    @property
    def is_boundary(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_vertices] = True
        return mask

    @property
    def interior_vertices(self) -> np.ndarray:
        return np.nonzero(~self.is_boundary)[0]

    def vertex_rings(self, depth: int = 2) -> list:
        """Vertex neighborhoods (unique indices, excluding the vertex) up to
        ``depth`` edge hops; used by patch recovery."""
        if self._rings is None:
            adj = [set() for _ in range(self.n_vertices)]
            for a, b, c in self.triangles:
                adj[a].update((b, c)); adj[b].update((a, c)); adj[c].update((a, b))
            self._rings = adj
        if depth == 1:
            return [sorted(s) for s in self._rings]
        out = []
        for v, one in enumerate(self._rings):
            ring = set(one)
            for w in one:
                ring.update(self._rings[w])
            ring.discard(v)
            out.append(sorted(ring))
        return out

    def boundary_edges(self):
        """(edge endpoints, adjacent element) for every boundary edge."""
        owner = {}
        for e, (a, b, c) in enumerate(self.triangles):
            for i, j in ((a, b), (b, c), (c, a)):
                owner.setdefault(frozenset((i, j)), []).append(e)
        edges = []
        for loop in self.boundary_loops:
            loop = np.asarray(loop)
            for k in range(len(loop)):
                i, j = int(loop[k]), int(loop[(k + 1) % len(loop)])
                owners = owner.get(frozenset((i, j)))
                if owners is None or len(owners) != 1:
                    raise MeshError(f"boundary edge ({i},{j}) not matched to one element")
                edges.append((i, j, owners[0]))
        return edges


# -- validation -------------------------------------------------------------


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _chart_areas(vertices, triangles):
    p = vertices[triangles]
    return 0.5 * _cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])


def _validate(mesh: DomainMesh):
    areas = _chart_areas(mesh.vertices, mesh.triangles)
    if not np.all(areas > 0):
        raise MeshError("triangles must be positively oriented in the chart")
    counts = {}
    for a, b, c in mesh.triangles:
        for i, j in ((a, b), (b, c), (c, a)):
            counts[frozenset((i, j))] = counts.get(frozenset((i, j)), 0) + 1
    if any(c > 2 for c in counts.values()):
        raise MeshError("non-conforming mesh: an edge is shared by more than 2 elements")
    bdry_edges = {k for k, c in counts.items() if c == 1}
    loop_edges = set()
    for loop in mesh.boundary_loops:
        loop = np.asarray(loop)
        for k in range(len(loop)):
            loop_edges.add(frozenset((int(loop[k]), int(loop[(k + 1) % len(loop)]))))
    if bdry_edges != loop_edges:
        raise MeshError("boundary loops do not cover the one-sided edges exactly")
    d = mesh.dist_to_boundary
    if np.any(d[mesh.boundary_vertices] != 0.0):
        raise MeshError("boundary vertices must have distance 0")
    if np.any(d[mesh.interior_vertices] <= 0.0):
        raise MeshError("interior vertices must have positive distance")


# -- sigma-aware helpers ----------------------------------------------------


def _sigma_edge_lengths(mesh_vertices, triangles, ambient: AmbientSpace):
    p = mesh_vertices[triangles]
    lens = []
    for a, b in ((0, 1), (1, 2), (2, 0)):
        e = p[:, b] - p[:, a]
        mid = 0.5 * (p[:, a] + p[:, b])
        S = ambient.base_metric(mid)
        lens.append(np.sqrt(np.einsum("ei,eij,ej->e", e, S, e)))
    return np.stack(lens, axis=1)  # (nt, 3)


def _hat_gradients(vertices, triangles):
    """Chart gradients of the P1 hat functions, shape (nt, 3, 2)."""
    p = vertices[triangles]
    areas = _chart_areas(vertices, triangles)
    g = np.empty((len(triangles), 3, 2))
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        edge = p[:, c] - p[:, b]
        # rotate the opposite edge by +90deg and scale
        g[:, a, 0] = -edge[:, 1]
        g[:, a, 1] = edge[:, 0]
    g /= (2.0 * areas)[:, None, None]
    return g, areas


def _mark_suspects(mesh: DomainMesh, ambient: AmbientSpace):
    """Flag elements where the discrete |grad d|_sigma deviates from 1 by
    more than 10 h (cut-locus suspects)."""
    G, _ = _hat_gradients(mesh.vertices, mesh.triangles)
    gd = np.einsum("eai,ea->ei", G, mesh.dist_to_boundary[mesh.triangles])
    cent = mesh.vertices[mesh.triangles].mean(axis=1)
    S = ambient.base_metric(cent)
    Sinv = np.linalg.inv(S)
    norm = np.sqrt(np.einsum("ei,eij,ej->e", gd, Sinv, gd))
    mesh.suspect_elements = np.abs(norm - 1.0) > 10.0 * mesh.h


# -- structured builders ----------------------------------------------------


def _band(tris, inner_idx, inner_ang, outer_idx, outer_ang):
    """Triangulate the annular band between two concentric rings by merging
    the two angle sequences; emits p + q positively oriented triangles."""
    p, q = len(inner_idx), len(outer_idx)
    a = np.asarray(inner_ang, dtype=float)
    b = np.asarray(outer_ang, dtype=float)
    rel = (b - a[0] + math.pi) % (2 * math.pi) - math.pi
    j0 = int(np.argmin(np.abs(rel)))
    order = (j0 + np.arange(q)) % q
    b_un = (b[order] - a[0] + math.pi) % (2 * math.pi) - math.pi
    for k in range(1, q):
        while b_un[k] < b_un[k - 1]:
            b_un[k] += 2 * math.pi
    a_un = (a - a[0]) % (2 * math.pi)
    for k in range(1, p):
        while a_un[k] < a_un[k - 1]:
            a_un[k] += 2 * math.pi
    a_ext = np.append(a_un, a_un[0] + 2 * math.pi)
    b_ext = np.append(b_un, b_un[0] + 2 * math.pi)
    i = j = 0
    while i < p or j < q:
        take_inner = (j == q) or (i < p and a_ext[i + 1] <= b_ext[j + 1])
        oj = int(outer_idx[order[j % q]])
        if take_inner:
            tris.append((int(inner_idx[i % p]), oj, int(inner_idx[(i + 1) % p])))
            i += 1
        else:
            tris.append((int(inner_idx[i % p]), oj, int(outer_idx[order[(j + 1) % q]])))
            j += 1


def _polar_disk(radius: float, h: float):
    """Spider-web triangulation of a chart disk; ring i holds 6 i vertices."""
    m = max(2, int(math.ceil(radius / h)))
    verts = [(0.0, 0.0)]
    ring_idx, ring_ang = [[0]], [[0.0]]
    for i in range(1, m + 1):
        r = radius * i / m
        cnt = 6 * i
        ang = 2 * math.pi * (np.arange(cnt) + 0.5 * (i % 2)) / cnt
        idx = list(range(len(verts), len(verts) + cnt))
        verts.extend(zip(r * np.cos(ang), r * np.sin(ang)))
        ring_idx.append(idx)
        ring_ang.append(list(ang))
    tris = []
    for j in range(6):
        tris.append((0, ring_idx[1][j], ring_idx[1][(j + 1) % 6]))
    for i in range(1, m):
        _band(tris, ring_idx[i], ring_ang[i], ring_idx[i + 1], ring_ang[i + 1])
    return (np.asarray(verts), np.asarray(tris, dtype=int),
            np.asarray(ring_idx[-1], dtype=int))


def _finalize(vertices, triangles, loops, normals, dist, preset, ambient):
    lens = _sigma_edge_lengths(vertices, triangles, ambient)
    mesh = DomainMesh(
        vertices=vertices, triangles=triangles, boundary_loops=loops,
        boundary_normal=normals, dist_to_boundary=dist,
        h=float(lens.max()), preset=preset,
    )
    _validate(mesh)
    _mark_suspects(mesh, ambient)
    return mesh


def disk_mesh(radius: float, h: float, ambient: AmbientSpace) -> DomainMesh:
    """Flat chart disk of the given radius; closed-form distance r0 - |u|."""
    if radius <= 0 or h <= 0:
        raise ParameterError("disk_mesh needs positive radius and mesh size")
    verts, tris, outer = _polar_disk(radius, h)
    rr = np.linalg.norm(verts, axis=1)
    normals = np.zeros_like(verts)
    normals[outer] = -verts[outer] / rr[outer, None]
    dist = radius - rr
    dist[outer] = 0.0
    return _finalize(verts, tris, [outer], normals, dist,
                     {"kind": "disk", "radius": radius}, ambient)


def cap_mesh(theta0: float, h: float, ambient: AmbientSpace) -> DomainMesh:
    """Geodesic cap of colatitude theta0 in the polar chart of the round
    sphere; chart radii are geodesic distances, so d = theta0 - |u|."""
    if not 0 < theta0 < math.pi:
        raise ParameterError("cap_mesh needs 0 < theta0 < pi")
    verts, tris, outer = _polar_disk(theta0, h)
    rr = np.linalg.norm(verts, axis=1)
    normals = np.zeros_like(verts)
    normals[outer] = -verts[outer] / rr[outer, None]  # radial is sigma-unit
    dist = theta0 - rr
    dist[outer] = 0.0
    return _finalize(verts, tris, [outer], normals, dist,
                     {"kind": "cap", "theta0": theta0}, ambient)


def annulus_mesh(r_in: float, r_out: float, h: float, ambient: AmbientSpace) -> DomainMesh:
    """Flat chart annulus; distance is the closed form min(r - r_in, r_out - r)."""
    if not 0 < r_in < r_out:
        raise ParameterError("annulus_mesh needs 0 < r_in < r_out")
    m = max(2, int(math.ceil((r_out - r_in) / h)))
    verts, ring_idx, ring_ang = [], [], []
    for i in range(m + 1):
        r = r_in + (r_out - r_in) * i / m
        cnt = max(8, int(round(2 * math.pi * r / h)))
        ang = 2 * math.pi * (np.arange(cnt) + 0.5 * (i % 2)) / cnt
        idx = list(range(len(verts), len(verts) + cnt))
        verts.extend(zip(r * np.cos(ang), r * np.sin(ang)))
        ring_idx.append(idx)
        ring_ang.append(list(ang))
    tris = []
    for i in range(m):
        _band(tris, ring_idx[i], ring_ang[i], ring_idx[i + 1], ring_ang[i + 1])
    verts = np.asarray(verts)
    tris = np.asarray(tris, dtype=int)
    inner = np.asarray(ring_idx[0], dtype=int)
    outer = np.asarray(ring_idx[-1], dtype=int)
    rr = np.linalg.norm(verts, axis=1)
    normals = np.zeros_like(verts)
    normals[outer] = -verts[outer] / rr[outer, None]
    normals[inner] = verts[inner] / rr[inner, None]
    dist = np.minimum(rr - r_in, r_out - rr)
    dist[inner] = 0.0
    dist[outer] = 0.0
    # inner loop reversed so the interior stays on the left
    loops = [outer, inner[::-1].copy()]
    return _finalize(verts, tris, loops, normals, dist,
                     {"kind": "annulus", "r_in": r_in, "r_out": r_out}, ambient)


# -- generic meshes ---------------------------------------------------------


def _dijkstra_distance(vertices, triangles, sources, ambient):
    """Multi-source shortest edge-path distance in the sigma metric."""
    import heapq
    nv = len(vertices)
    adj = [[] for _ in range(nv)]
    seen = set()
    for a, b, c in triangles:
        for i, j in ((a, b), (b, c), (c, a)):
            key = (min(i, j), max(i, j))
            if key in seen:
                continue
            seen.add(key)
            e = vertices[j] - vertices[i]
            mid = 0.5 * (vertices[i] + vertices[j])
            S = ambient.base_metric(mid)
            l = float(np.sqrt(e @ S @ e))
            adj[i].append((j, l))
            adj[j].append((i, l))
    dist = np.full(nv, np.inf)
    heap = []
    for s in sources:
        dist[s] = 0.0
        heapq.heappush(heap, (0.0, int(s)))
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for w, l in adj[v]:
            nd = d + l
            if nd < dist[w]:
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    return dist


def _eikonal_sweep(vertices, triangles, dist, ambient, sweeps=2):
    """Gauss-Seidel refinement of the Dijkstra field by local triangle
    updates (straight-segment travel in the centroid metric)."""
    cent = vertices[triangles].mean(axis=1)
    S = ambient.base_metric(cent)
    for _ in range(sweeps):
        order = np.argsort(dist[triangles].min(axis=1))
        for e in order:
            tri = triangles[e]
            Se = S[e]
            for k in range(3):
                c = tri[k]
                a, b = tri[(k + 1) % 3], tri[(k + 2) % 3]
                if not np.isfinite(dist[a]) or not np.isfinite(dist[b]):
                    continue
                pa, pb, pc = vertices[a], vertices[b], vertices[c]

                def travel(th):
                    p = th * pa + (1 - th) * pb
                    v = pc - p
                    return th * dist[a] + (1 - th) * dist[b] + math.sqrt(v @ Se @ v)

                lo, hi = 0.0, 1.0
                for _ in range(40):  # ternary search, unimodal objective
                    m1 = lo + (hi - lo) / 3
                    m2 = hi - (hi - lo) / 3
                    if travel(m1) <= travel(m2):
                        hi = m2
                    else:
                        lo = m1
                cand = travel(0.5 * (lo + hi))
                if cand < dist[c]:
                    dist[c] = cand
    return dist


def _loop_orientation_area(vertices, loop):
    p = vertices[np.asarray(loop)]
    x, y = p[:, 0], p[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - y * np.roll(x, -1))


def mesh_from_arrays(vertices, triangles, boundary_loops, ambient: AmbientSpace,
                     preset: Optional[dict] = None) -> DomainMesh:
    """Build a mesh from raw arrays, computing normals and boundary distance.

    Outer loops are re-ordered counterclockwise and inner loops clockwise so
    the interior is on the left everywhere.
    """
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=int)
    if len(boundary_loops) == 0:
        raise MeshError("mesh needs at least one boundary loop")
    loops = []
    areas = [_loop_orientation_area(vertices, l) for l in boundary_loops]
    outer = int(np.argmax(np.abs(areas)))
    for k, loop in enumerate(boundary_loops):
        loop = np.asarray(loop, dtype=int)
        want_ccw = (k == outer)
        if (areas[k] > 0) != want_ccw:
            loop = loop[::-1].copy()
        loops.append(loop)

    normals = np.zeros_like(vertices)
    for loop in loops:
        n = len(loop)
        for k in range(n):
            v = loop[k]
            prv, nxt = loop[(k - 1) % n], loop[(k + 1) % n]
            tang = vertices[nxt] - vertices[prv]
            raw = np.array([-tang[1], tang[0]])  # +90deg: inward, interior on left
            S = ambient.base_metric(vertices[v])
            nrm = math.sqrt(raw @ S @ raw)
            if nrm == 0:
                raise MeshError(f"degenerate boundary tangent at vertex {v}")
            normals[v] = raw / nrm

    sources = np.unique(np.concatenate(loops))
    dist = _dijkstra_distance(vertices, triangles, sources, ambient)
    dist = _eikonal_sweep(vertices, triangles, dist, ambient)
    dist[sources] = 0.0
    return _finalize(vertices, triangles, loops, normals, dist, preset, ambient)


# -- JSON exchange ----------------------------------------------------------


def mesh_to_json(mesh: DomainMesh) -> dict:
    """Exchange document: vertices, triangles, boundary loops."""
    return {
        "vertices": [[float(x), float(y)] for x, y in mesh.vertices],
        "triangles": [[int(i) for i in t] for t in mesh.triangles],
        "boundary": [[int(i) for i in loop] for loop in mesh.boundary_loops],
    }


def mesh_from_json(doc, ambient: AmbientSpace) -> DomainMesh:
    if isinstance(doc, str):
        with open(doc, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    return mesh_from_arrays(doc["vertices"], doc["triangles"], doc["boundary"], ambient)
