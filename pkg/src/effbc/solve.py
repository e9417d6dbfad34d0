"""Strip problem container and the linear / nonlinear / monotone solvers.

Linear N-component systems: sparse Galerkin assembly plus BiCGStab (the
tensors need not be symmetric), preconditioned by the exact
constant-coefficient FFT solve and started from the discrete harmonic
extension of the boundary data, so iteration counts stay mesh
independent.

Variational nonlinear equations (flux = gradient of a convex density):
monotone accelerated descent on the discrete energy, preconditioned by
the exact constant-coefficient solver, with backtracking line search; the
recorded energy trace is nonincreasing by construction.

Non-variational monotone maps: damped preconditioned fixed point
(Zarantonello) iteration u <- u - rho * K_ref^{-1} R(u), with the step
rho adapted so the preconditioned residual norm decreases monotonically.
Uniform monotonicity and Lipschitz bounds of the flux make this a
contraction for small enough rho.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import StripReferenceSolver, assemble_matrix, strip_dof_partition
from .errors import NonConvergedError, SolverFailureError
from .fields import LinearTensorField, PeriodicFieldExpr, evaluate_field
from .grid import StripGrid, build_strip_grid
from .lattice import RationalDirection

__all__ = [
    "StripProblem",
    "StripSolution",
    "solve_strip",
    "solve_linear",
    "solve_nonlinear",
    "discrete_residual",
    "top_slice",
]

NEUMANN = ("neumann", None)


def dirichlet_top(value):
    return ("dirichlet", value)


@dataclass
class StripProblem:
    """One truncated half-space solve: geometry, operator, data, knobs.

    Either ``xi`` plus mesh knobs describe the strip, or a prebuilt
    ``grid`` (planar reduced problems) is injected directly.
    """

    xi: RationalDirection
    operator: object
    data: object
    R: float
    h: float = None
    cells: tuple = None
    s: float = 0.0
    top_bc: tuple = NEUMANN
    tau: float = 0.0
    rtol: float = 1e-10
    grid: StripGrid = None
    rhs_flux: object = None  # optional f(centers) -> (d, N, *cells); adds div f

    @property
    def n_components(self):
        if isinstance(self.operator, LinearTensorField):
            return self.operator.n_components
        return 1

    def build_grid(self) -> StripGrid:
        if self.grid is not None:
            return self.grid
        return build_strip_grid(self.xi, self.s, self.R, h=self.h, cells=self.cells)

    def describe(self):
        data = self.data.describe() if hasattr(self.data, "describe") else repr(self.data)
        return {
            "xi": self.xi.xi.tolist() if self.xi is not None else None,
            "s": self.s,
            "R": self.R,
            "h": self.h,
            "cells": list(self.cells) if self.cells else None,
            "top_bc": [self.top_bc[0], _maybe_list(self.top_bc[1])],
            "tau": self.tau,
            "operator": self.operator.describe(),
            "data": data,
        }


def _maybe_list(v):
    return np.asarray(v).tolist() if v is not None else None


@dataclass
class StripSolution:
    problem: StripProblem
    grid: StripGrid
    values: np.ndarray  # (N, *lat, levels)
    residual_norm: float
    iterations: int
    energy: float = None
    energy_trace: list = field(default_factory=list)

    def __post_init__(self):
        self.values.setflags(write=False)

    def top_slice(self):
        return self.values[..., -1]


def top_slice(solution):
    return solution.top_slice()


def boundary_values(problem, grid):
    """Evaluate the Dirichlet data on the physical bottom boundary."""
    coords = grid.bottom_coords()
    data = problem.data
    if isinstance(data, PeriodicFieldExpr):
        vals = evaluate_field(data, coords)
    else:
        vals = np.asarray(data(coords), dtype=float)
    N = problem.n_components
    if vals.ndim == len(grid.lat_cells):
        vals = vals[None, ...]
    if vals.shape[0] != N:
        raise ValueError(f"data has {vals.shape[0]} components, operator expects {N}")
    return vals


def _top_values(problem, grid):
    kind, val = problem.top_bc
    if kind == "neumann":
        return None
    N = problem.n_components
    vec = np.atleast_1d(np.asarray(val, dtype=float))
    if vec.size == 1:
        vec = np.full(N, vec[0])
    arr = np.broadcast_to(
        vec.reshape(N, *([1] * len(grid.lat_cells))), (N,) + grid.lat_cells
    )
    return np.ascontiguousarray(arr)


def operator_flux(op, grads, centers, tau):
    """Physical flux per cell; grads has shape (d, N, *cells)."""
    if isinstance(op, LinearTensorField):
        A = op(centers)
        return np.einsum("abij...,bj...->ai...", A, grads)
    q = op.flux(grads[:, 0], y=centers if op.y_dependent else None, tau=tau)
    return q[:, None]


def nonlinear_energy(op, grid, U, centers, tau):
    grads = grid.phys_gradient(U)
    dens = op.potential(grads[:, 0], y=centers if op.y_dependent else None, tau=tau)
    return float(grid.cellvol * dens.sum())


def _masked_residual(grid, op, U, centers, tau, top_dirichlet):
    grads = grid.phys_gradient(U)
    r = grid.scatter_flux(operator_flux(op, grads, centers, tau))
    r[..., 0] = 0.0
    if top_dirichlet:
        r[..., -1] = 0.0
    return r


class _IterCounter:
    def __init__(self):
        self.n = 0

    def __call__(self, _xk):
        self.n += 1


def solve_linear(problem: StripProblem) -> StripSolution:
    """Galerkin solve of the linear system on the strip.

    BiCGStab to relative residual problem.rtol, capped at 20 sqrt(n_free)
    iterations; fails loudly with the iteration trace on stagnation.
    """
    op = problem.operator
    if not isinstance(op, LinearTensorField):
        raise ValueError("solve_linear needs a LinearTensorField operator")
    grid = problem.build_grid()
    top_dir = problem.top_bc[0] == "dirichlet"
    ref = StripReferenceSolver(grid, top_dirichlet=top_dir)
    bottom = boundary_values(problem, grid)
    U0 = ref.lift(bottom, _top_values(problem, grid))
    K = assemble_matrix(grid, op)
    free, _, _ = strip_dof_partition(grid, op.n_components, top_dir)
    b = np.zeros(U0.size)
    if problem.rhs_flux is not None:
        f_cells = np.asarray(problem.rhs_flux(grid.cell_centers()), dtype=float)
        if f_cells.ndim == grid.d + 1:
            f_cells = f_cells[:, None]
        b = -grid.scatter_flux(f_cells).ravel()
    full = K @ U0.ravel() - b
    r0 = -full[free]
    rnorm0 = float(np.linalg.norm(r0))
    scale = max(
        float(np.linalg.norm(full)),
        float(np.abs(K.diagonal()).max()) * float(np.linalg.norm(U0)),
        1e-30,
    )
    if rnorm0 <= 1e-12 * scale:
        # the harmonic-extension start already solves the discrete system
        return StripSolution(problem, grid, U0, rnorm0 / scale, 0)
    Kff = K[free][:, free].tocsr()
    shape = U0.shape

    def precond(v):
        # exact constant-coefficient solve: spectrally equivalent, so the
        # Krylov iteration count is mesh independent
        buf = np.zeros(U0.size)
        buf[free] = v
        out = ref.solve(buf.reshape(shape))
        return out.ravel()[free]

    M = spla.LinearOperator(Kff.shape, matvec=precond)
    cap = max(200, int(20 * math.sqrt(free.size)))
    counter = _IterCounter()
    x, info = spla.bicgstab(
        Kff, r0, rtol=problem.rtol, atol=0.0, maxiter=cap, M=M, callback=counter
    )
    rel = float(np.linalg.norm(Kff @ x - r0) / rnorm0)
    if info != 0 and rel > 10.0 * problem.rtol:
        raise SolverFailureError(
            f"BiCGStab stalled at rel residual {rel:.3e} after {counter.n} iterations",
            trace=[counter.n, rel],
        )
    U = U0.copy().ravel()
    U[free] += x
    U = U.reshape(U0.shape)
    return StripSolution(problem, grid, U, rel, counter.n)


def _descent_variational(problem, grid, ref, op, U0, centers, top_dir, gtol_rel=1e-9, maxiter=500):
    """Monotone accelerated preconditioned descent on the discrete energy."""
    tau = problem.tau
    energy = lambda V: nonlinear_energy(op, grid, V, centers, tau)
    U = U0.copy()
    E = energy(U)
    scale = max(1.0, abs(E))
    trace = [E]
    U_prev = U.copy()
    t_prev = 1.0
    momentum = 0.0
    for it in range(maxiter):
        g = _masked_residual(grid, op, U, centers, tau, top_dir)
        gsup = float(np.abs(g).max())
        if gsup <= gtol_rel * scale:
            return U, E, it, trace
        # accelerated candidate point
        V = U + momentum * (U - U_prev)
        gV = _masked_residual(grid, op, V, centers, tau, top_dir)
        dV = ref.solve(gV)
        slope = float((gV * dV).sum())
        t = min(1.0, 2.0 * t_prev)
        EV = energy(V)
        accepted = None
        for _ in range(60):
            cand = V - t * dV
            Ec = energy(cand)
            if Ec <= EV - 0.25 * t * slope + 1e-15 * scale:
                accepted = (cand, Ec)
                break
            t *= 0.5
        if accepted is None or accepted[1] > E:
            # momentum overshoot: fall back to plain descent from U
            d = ref.solve(g)
            slope = float((g * d).sum())
            t = min(1.0, 2.0 * t_prev)
            accepted = None
            for _ in range(60):
                cand = U - t * d
                Ec = energy(cand)
                if Ec <= E - 0.25 * t * slope + 1e-15 * scale:
                    accepted = (cand, Ec)
                    break
                t *= 0.5
            if accepted is None:
                raise NonConvergedError("line search failed to decrease energy", trace=trace)
            momentum = 0.0
        else:
            momentum = min(0.9, momentum + 0.3)
        U_prev = U
        U, E_new = accepted
        if E_new > E + 1e-12 * scale:
            raise NonConvergedError("energy increased, internal inconsistency", trace=trace)
        E = E_new
        t_prev = t
        trace.append(E)
    raise NonConvergedError(
        f"descent did not reach tolerance in {maxiter} iterations", trace=trace
    )


def _fixed_point_monotone(problem, grid, ref, op, U0, centers, top_dir, rtol=1e-8, maxiter=2000):
    """Damped preconditioned fixed point for monotone non-gradient fluxes."""
    tau = problem.tau
    U = U0.copy()
    r = _masked_residual(grid, op, U, centers, tau, top_dir)
    sup0 = float(np.abs(r).max())
    lam = getattr(op, "lam", 0.5)
    lip = getattr(op, "lip", 1.0)
    # absolute floor: roundoff level of one residual row
    floor = (
        1e-12 * grid.cellvol / min(grid.spacings) ** 2 * lip * (float(np.abs(U0).max()) + 1.0)
    )
    target = max(rtol * sup0, floor)
    rho = lam / lip**2
    rho_max = 1.5 * rho
    solved = ref.solve(r)
    n_r = math.sqrt(max(float((r * solved).sum()), 0.0))
    trace = [sup0]
    for it in range(maxiter):
        if float(np.abs(r).max()) <= target:
            return U, it, trace
        for _ in range(40):
            U_new = U - rho * solved
            r_new = _masked_residual(grid, op, U_new, centers, tau, top_dir)
            solved_new = ref.solve(r_new)
            n_new = math.sqrt(max(float((r_new * solved_new).sum()), 0.0))
            if n_new <= n_r * (1.0 - 0.25 * rho * lam) or n_new <= 1e-14 * (1.0 + n_r):
                break
            rho *= 0.5
        else:
            raise NonConvergedError("monotone step kept failing to contract", trace=trace)
        U, r, solved, n_r = U_new, r_new, solved_new, n_new
        rho = min(rho * 1.1, rho_max)
        trace.append(float(np.abs(r).max()))
    raise NonConvergedError(
        f"fixed point did not reach tolerance in {maxiter} iterations", trace=trace
    )


def solve_nonlinear(problem: StripProblem) -> StripSolution:
    """Solve the nonlinear strip problem.

    Gradient-form operators minimize the discrete energy; plain monotone
    maps run the preconditioned fixed point.  Both start from the
    discrete harmonic extension of the boundary data.
    """
    op = problem.operator
    if isinstance(op, LinearTensorField):
        raise ValueError("use solve_linear for tensor operators")
    grid = problem.build_grid()
    top_dir = problem.top_bc[0] == "dirichlet"
    ref = StripReferenceSolver(grid, top_dirichlet=top_dir)
    bottom = boundary_values(problem, grid)
    U0 = ref.lift(bottom, _top_values(problem, grid))
    centers = grid.cell_centers() if op.y_dependent else None
    if op.is_variational:
        U, E, iters, trace = _descent_variational(problem, grid, ref, op, U0, centers, top_dir)
        r = _masked_residual(grid, op, U, centers, problem.tau, top_dir)
        return StripSolution(
            problem, grid, U, float(np.abs(r).max()), iters, energy=E, energy_trace=trace
        )
    U, iters, trace = _fixed_point_monotone(problem, grid, ref, op, U0, centers, top_dir)
    r = _masked_residual(grid, op, U, centers, problem.tau, top_dir)
    return StripSolution(
        problem, grid, U, float(np.abs(r).max()), iters, energy=None, energy_trace=trace
    )


def solve_strip(problem: StripProblem) -> StripSolution:
    if isinstance(problem.operator, LinearTensorField):
        return solve_linear(problem)
    return solve_nonlinear(problem)


def discrete_residual(solution: StripSolution, values=None):
    """Interior residual density of the discrete divergence-form operator.

    Applies the assembled operator to ``values`` (default: the stored
    solution) and reports sup and root-mean-square of the nodal residual
    divided by the cell volume, over interior levels only.  For a
    function injected from outside this measures the consistency error of
    the discretization and decays at second order for smooth fluxes.
    """
    problem = solution.problem
    grid = solution.grid
    op = problem.operator
    U = solution.values if values is None else values
    centers = grid.cell_centers() if getattr(op, "y_dependent", True) else None
    if isinstance(op, LinearTensorField):
        centers = grid.cell_centers()
    grads = grid.phys_gradient(U)
    r = grid.scatter_flux(operator_flux(op, grads, centers, problem.tau))
    density = r[..., 1:-1] / grid.cellvol
    sup = float(np.abs(density).max())
    rms = float(np.sqrt(np.mean(density**2)))
    return {"sup": sup, "rms": rms}
