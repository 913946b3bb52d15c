import numpy as np
import pytest
import scipy.sparse as sp

import ckgraph as ck
from ckgraph.errors import NewtonStallError, SingularSystemError
from ckgraph.solver import (SolverOptions, continuation_solve, linear_solve,
                            newton_solve)


def test_linear_solve_contract():
    rng = np.random.default_rng(0)
    A = sp.random(80, 80, density=0.1, random_state=0) + 10 * sp.eye(80)
    x = rng.standard_normal(80)
    b = A @ x
    sol = linear_solve(A.tocsr(), b)
    assert np.linalg.norm(A @ sol - b) <= 1e-12 * np.linalg.norm(b)


def test_linear_solve_singular():
    A = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SingularSystemError):
        linear_solve(A, np.array([1.0, 0.0]))


def test_trivial_stage_needs_no_iteration(cmc_problem, radial_problem):
    # z = 0 solves the tau = 0 problem exactly
    for prob in (cmc_problem, radial_problem):
        z, records, clamped = newton_solve(prob, 0.0,
                                           np.zeros(prob.mesh.n_vertices))
        assert len(records) <= 1
        assert not clamped
        assert np.abs(z[prob.mesh.interior_vertices]).max() == 0.0


def test_continuation_reaches_one(cmc_solution, radial_solution):
    for rep in (cmc_solution, radial_solution):
        assert rep.status == "converged"
        assert rep.tau_reached == 1.0
        assert rep.tau_path[0] == 0.0 and rep.tau_path[-1] == 1.0
        assert all(b > a for a, b in zip(rep.tau_path, rep.tau_path[1:]))
        assert len(rep.grad_sup_history) == len(rep.tau_path)
        assert all(g >= 0 for g in rep.grad_sup_history)


def test_solution_accuracy(cmc_solution, cmc_exact):
    assert np.abs(cmc_solution.solution.values - cmc_exact).max() < 5e-4


def test_newton_history_records(cmc_solution):
    assert cmc_solution.newton_history
    for rec in cmc_solution.newton_history:
        assert 0.0 <= rec.tau <= 1.0
        assert rec.residual_norm >= 0.0
        assert rec.damping_halvings >= 0
    # the final stage ends at the tolerance
    last_tau = cmc_solution.newton_history[-1].tau
    finals = [r for r in cmc_solution.newton_history if r.tau == last_tau]
    assert finals[-1].residual_norm <= 1e-10


def test_uniqueness_two_initializations(cmc_problem):
    from ckgraph.analysis import search_height_barrier
    phi_ext = cmc_problem.phi.copy()
    barrier, _ = search_height_barrier(cmc_problem)
    za, _, _ = newton_solve(cmc_problem, 1.0, phi_ext)
    zb, _, _ = newton_solve(cmc_problem, 1.0, barrier.values.copy())
    assert np.abs(za - zb).max() < 1e-8


def test_stall_reports_best_iterate():
    amb = ck.preset_ambient("killing_flat")
    mesh = ck.disk_mesh(0.4, 0.1, amb)
    prob = ck.Problem.create(amb, mesh, 1.0, -np.sqrt(0.84))
    opts = SolverOptions(max_newton_iters=1, newton_tol=1e-14)
    with pytest.raises(NewtonStallError) as info:
        newton_solve(prob, 1.0, np.zeros(mesh.n_vertices), opts)
    err = info.value
    assert err.best_iterate.shape == (mesh.n_vertices,)
    assert np.isfinite(err.residual_norm)


def test_forced_failure_statuses():
    amb = ck.preset_ambient("example_b")     # finite interval end at 1
    mesh = ck.disk_mesh(0.3, 0.1, amb)
    prob = ck.Problem.create(amb, mesh, -20.0, 0.9)
    rep = continuation_solve(prob, SolverOptions(min_tau_step=1e-3))
    assert rep.status in ("stalled", "left_interval")
    assert rep.tau_reached < 1.0
    assert rep.solution is not None          # partial data for the report
    assert rep.message


def test_options_respected(cmc_problem):
    opts = SolverOptions(initial_tau_step=0.5)
    rep = continuation_solve(cmc_problem, opts)
    assert rep.status == "converged"
    steps = np.diff(rep.tau_path)
    assert steps.max() <= 0.5 + 1e-15
    # the step never grows after a halving
    assert all(b <= a + 1e-15 for a, b in zip(steps, steps[1:]))
