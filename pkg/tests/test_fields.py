import numpy as np
import pytest

import ckgraph as ck
from ckgraph.errors import MeshError
from ckgraph.fields import ScalarField, distance_to_boundary

FLAT = ck.preset_ambient("killing_flat")


def test_csv_roundtrip(tmp_path):
    mesh = ck.disk_mesh(0.3, 0.1, FLAT)
    rng = np.random.default_rng(4)
    field = ScalarField(mesh, rng.standard_normal(mesh.n_vertices))
    path = tmp_path / "field.csv"
    field.to_csv(path)
    back = ScalarField.from_csv(mesh, path)
    assert np.array_equal(back.values, field.values)   # repr() is lossless


def test_csv_format(tmp_path):
    mesh = ck.disk_mesh(0.3, 0.2, FLAT)
    field = ScalarField.constant(mesh, -0.25)
    path = tmp_path / "field.csv"
    field.to_csv(path)
    raw = path.read_bytes()
    assert b"\r" not in raw                            # LF only
    lines = raw.decode("utf-8").splitlines()
    assert lines[0] == "vertex,x,y,value"
    assert len(lines) == mesh.n_vertices + 1


def test_length_mismatch_rejected():
    mesh = ck.disk_mesh(0.3, 0.2, FLAT)
    with pytest.raises(MeshError):
        ScalarField(mesh, np.zeros(mesh.n_vertices + 1))


def test_nonfinite_rejected():
    mesh = ck.disk_mesh(0.3, 0.2, FLAT)
    vals = np.zeros(mesh.n_vertices)
    vals[0] = np.nan
    with pytest.raises(MeshError):
        ScalarField(mesh, vals)


def test_distance_field():
    mesh = ck.disk_mesh(0.3, 0.1, FLAT)
    d = distance_to_boundary(mesh)
    r = np.linalg.norm(mesh.vertices, axis=1)
    assert np.abs(d.values - (0.3 - r)).max() < 1e-10
