import numpy as np
import pytest

import ckgraph as ck


@pytest.fixture(scope="session")
def cmc_problem():
    """Spherical-cap problem: flat ambient, disk of radius 0.4, H = 1,
    constant boundary data; exact solution -sqrt(1 - r^2)."""
    amb = ck.preset_ambient("killing_flat")
    mesh = ck.disk_mesh(0.4, 0.04, amb)
    phi = -np.sqrt(0.84)
    return ck.Problem.create(amb, mesh, 1.0, phi)


@pytest.fixture(scope="session")
def cmc_solution(cmc_problem):
    report = ck.continuation_solve(cmc_problem)
    assert report.status == "converged"
    return report


@pytest.fixture(scope="session")
def cmc_exact(cmc_problem):
    r = np.linalg.norm(cmc_problem.mesh.vertices, axis=1)
    return -np.sqrt(1.0 - r**2)


@pytest.fixture(scope="session")
def radial_problem():
    """Radial graph in Euclidean space written over a spherical cap:
    lambda = e^t over the round leaf, H = 0; exact solution
    -ln cos(theta) + ln cos(1)."""
    amb = ck.preset_ambient("euclidean_radial")
    mesh = ck.cap_mesh(1.0, 0.1, amb)
    r = np.linalg.norm(mesh.vertices, axis=1)
    zex = -np.log(np.cos(r)) + np.log(np.cos(1.0))
    return ck.Problem.create(amb, mesh, 0.0, zex)


@pytest.fixture(scope="session")
def radial_exact(radial_problem):
    r = np.linalg.norm(radial_problem.mesh.vertices, axis=1)
    return -np.log(np.cos(r)) + np.log(np.cos(1.0))


@pytest.fixture(scope="session")
def radial_solution(radial_problem):
    report = ck.continuation_solve(radial_problem)
    assert report.status == "converged"
    return report
