"""Per-vertex scalar fields bound to a mesh."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import MeshError
from .mesh import DomainMesh

__all__ = ["ScalarField", "distance_to_boundary"]


@dataclass
class ScalarField:
    mesh: DomainMesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_vertices,):
            raise MeshError(
                f"field length {self.values.shape} does not match "
                f"{self.mesh.n_vertices} vertices"
            )
        if not np.all(np.isfinite(self.values)):
            raise MeshError("scalar field contains non-finite values")

    @classmethod
    def constant(cls, mesh: DomainMesh, value: float) -> "ScalarField":
        return cls(mesh, np.full(mesh.n_vertices, float(value)))

    @classmethod
    def from_function(cls, mesh: DomainMesh, fn) -> "ScalarField":
        return cls(mesh, np.asarray(fn(mesh.vertices), dtype=float))

    def copy(self) -> "ScalarField":
        return ScalarField(self.mesh, self.values.copy())

    # CSV exchange format: header "vertex,x,y,value"
    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["vertex", "x", "y", "value"])
            for i, ((x, y), v) in enumerate(zip(self.mesh.vertices, self.values)):
                w.writerow([i, repr(float(x)), repr(float(y)), repr(float(v))])

    @classmethod
    def from_csv(cls, mesh: DomainMesh, path) -> "ScalarField":
        values = np.full(mesh.n_vertices, np.nan)
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                values[int(row["vertex"])] = float(row["value"])
        return cls(mesh, values)


def distance_to_boundary(mesh: DomainMesh) -> ScalarField:
    """The sigma-geodesic distance to the boundary as a field (computed at
    mesh construction; closed form for preset domains)."""
    if not mesh.boundary_loops:
        raise MeshError("mesh has no boundary")
    return ScalarField(mesh, mesh.dist_to_boundary.copy())
