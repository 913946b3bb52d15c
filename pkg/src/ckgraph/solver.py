"""Damped Newton iteration and continuation in the load parameter."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import scipy.sparse.linalg as spla

from .errors import DomainError, NewtonStallError, SingularSystemError
from .fields import ScalarField
from .operator import Problem

__all__ = [
    "SolverOptions", "NewtonRecord", "SolveReport",
    "linear_solve", "newton_solve", "continuation_solve",
]


@dataclass
class SolverOptions:
    newton_tol: float = 1e-10
    max_newton_iters: int = 50
    initial_tau_step: float = 0.25
    min_tau_step: float = 1e-4
    damping_factor: float = 0.5
    max_damping_halvings: int = 20
    clamp_margin: float = 1e-6
    linear_residual_rtol: float = 1e-12


@dataclass
class NewtonRecord:
    tau: float
    iteration: int
    residual_norm: float
    step_norm: float
    damping_halvings: int

    def to_json(self):
        return {
            "tau": self.tau,
            "iter": self.iteration,
            "residual_norm": self.residual_norm,
            "step_norm": self.step_norm,
            "damping_halvings": self.damping_halvings,
        }


@dataclass
class SolveReport:
    status: str                               # converged | stalled | left_interval
    solution: Optional[ScalarField]
    tau_reached: float
    tau_path: List[float] = field(default_factory=list)
    grad_sup_history: List[float] = field(default_factory=list)
    newton_history: List[NewtonRecord] = field(default_factory=list)
    clamped: bool = False
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def linear_solve(system, rhs) -> np.ndarray:
    """Sparse LU solve with a residual check of 1e-12 relative to the
    right-hand side; raises on singular or badly conditioned systems."""
    rhs = np.asarray(rhs, dtype=float)
    try:
        lu = spla.splu(system.tocsc())
        x = lu.solve(rhs)
    except (RuntimeError, ValueError) as exc:
        raise SingularSystemError(f"sparse factorization failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("linear solve produced non-finite entries")
    res = np.linalg.norm(system @ x - rhs)
    bound = 1e-12 * max(np.linalg.norm(rhs), 1.0)
    if res > bound:
        # one step of iterative refinement before giving up
        x = x + lu.solve(rhs - system @ x)
        res = np.linalg.norm(system @ x - rhs)
        if res > bound:
            raise SingularSystemError(
                f"linear residual {res:.3e} exceeds bound {bound:.3e}")
    return x


def _clamp(z, problem: Problem, options: SolverOptions):
    cap = problem.ambient.interval_end - options.clamp_margin
    if math.isfinite(cap) and np.any(z > cap):
        return np.minimum(z, cap), True
    return z, False


def newton_solve(problem: Problem, tau: float, z0: np.ndarray,
                 options: Optional[SolverOptions] = None,
                 on_iteration: Optional[Callable] = None):
    """Damped Newton iteration at fixed ``tau``.

    Boundary values are imposed strongly as ``tau * phi``.  Returns
    ``(z, records)`` or raises ``NewtonStallError`` with the best iterate.
    """
    options = options or SolverOptions()
    asm = problem.assembly()
    mesh = problem.mesh
    z = np.asarray(z0, dtype=float).copy()
    z[mesh.boundary_vertices] = tau * problem.phi[mesh.boundary_vertices]
    z, clamped = _clamp(z, problem, options)
    ii = asm.interior
    records = []

    def res_norm(zz):
        return float(np.abs(asm.residual(zz, tau)).max())

    rnorm = res_norm(z)
    best = (rnorm, z.copy())
    for it in range(1, options.max_newton_iters + 1):
        if rnorm <= options.newton_tol:
            rec = NewtonRecord(tau, it - 1, rnorm, 0.0, 0)
            return z, records, clamped
        system = asm.system(z, tau)
        step = linear_solve(system.jacobian, -system.residual)
        alpha, halvings = 1.0, 0
        while True:
            trial = z.copy()
            trial[ii] += alpha * step
            trial, was_clamped = _clamp(trial, problem, options)
            try:
                trial_norm = res_norm(trial)
            except DomainError:
                trial_norm = math.inf
                was_clamped = False
            if trial_norm < rnorm or halvings >= options.max_damping_halvings:
                break
            alpha *= options.damping_factor
            halvings += 1
        if not trial_norm < rnorm:
            raise NewtonStallError(
                f"Newton stalled at tau={tau} after {it} iterations "
                f"(residual {best[0]:.3e})",
                best_iterate=best[1], iterations=it, residual_norm=best[0])
        z, rnorm = trial, trial_norm
        clamped = clamped or was_clamped
        rec = NewtonRecord(tau, it, rnorm, float(alpha * np.abs(step).max()),
                           halvings)
        records.append(rec)
        if on_iteration is not None:
            on_iteration(rec)
        if rnorm < best[0]:
            best = (rnorm, z.copy())
    if rnorm <= options.newton_tol:
        return z, records, clamped
    raise NewtonStallError(
        f"Newton did not reach tolerance at tau={tau} "
        f"(residual {rnorm:.3e} after {options.max_newton_iters} iterations)",
        best_iterate=best[1], iterations=options.max_newton_iters,
        residual_norm=best[0])


def continuation_solve(problem: Problem,
                       options: Optional[SolverOptions] = None,
                       on_iteration: Optional[Callable] = None) -> SolveReport:
    """March ``tau`` from 0 to 1 with step halving on Newton failure.

    ``z = 0`` solves the ``tau = 0`` problem exactly, so the march starts
    there and warm-starts each stage from the previous solution.  The step
    never grows back; statuses are ``converged``, ``stalled`` (step underflow)
    and ``left_interval`` (iterates pushed to the interval end).
    """
    options = options or SolverOptions()
    asm = problem.assembly()
    mesh = problem.mesh
    z = np.zeros(mesh.n_vertices)
    report = SolveReport(status="converged", solution=None, tau_reached=0.0)
    report.tau_path.append(0.0)
    report.grad_sup_history.append(asm.grad_sup(z))

    tau, step = 0.0, options.initial_tau_step
    while tau < 1.0:
        target = min(1.0, tau + step)
        try:
            z_new, records, clamped = newton_solve(
                problem, target, z, options, on_iteration)
        except (NewtonStallError, SingularSystemError, DomainError) as exc:
            step *= 0.5
            if step < options.min_tau_step:
                hit_end = False
                if isinstance(exc, NewtonStallError):
                    cap = problem.ambient.interval_end - 10 * options.clamp_margin
                    hit_end = math.isfinite(cap) and bool(
                        np.any(exc.best_iterate > cap))
                if isinstance(exc, DomainError):
                    hit_end = True
                report.status = "left_interval" if hit_end else "stalled"
                report.tau_reached = tau
                report.solution = ScalarField(mesh, z)
                report.message = str(exc)
                return report
            continue
        report.newton_history.extend(records)
        report.clamped = report.clamped or clamped
        tau, z = target, z_new
        report.tau_path.append(tau)
        report.grad_sup_history.append(asm.grad_sup(z))
    report.tau_reached = 1.0
    report.solution = ScalarField(mesh, z)
    if report.clamped:
        report.message = "iterates were clamped below the interval end"
    return report
