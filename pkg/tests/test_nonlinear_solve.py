import math

import numpy as np

from effbc import (
    KinkPotential2D,
    QuadraticPotential,
    ReducedRootKink,
    RootKinkOperator,
    StripProblem,
    StripSolution,
    cosine_field,
    discrete_residual,
    make_rational_direction,
    planar_strip_grid,
    solve_linear,
    solve_nonlinear,
)
from effbc.solve import _masked_residual, nonlinear_energy


def test_quadratic_potential_matches_linear_path(laminate2, xi_e2, data_cos1):
    pL = StripProblem(xi=xi_e2, operator=laminate2, data=data_cos1, R=1.0, h=1 / 16)
    pN = StripProblem(
        xi=xi_e2, operator=QuadraticPotential(laminate2), data=data_cos1, R=1.0, h=1 / 16
    )
    solL = solve_linear(pL)
    solN = solve_nonlinear(pN)
    assert np.abs(solL.values - solN.values).max() <= 1e-8


def test_energy_trace_nonincreasing(laminate2, xi_e2, data_diag):
    p = StripProblem(
        xi=xi_e2, operator=QuadraticPotential(laminate2), data=data_diag, R=1.0, h=1 / 16
    )
    sol = solve_nonlinear(p)
    tr = sol.energy_trace
    assert len(tr) >= 2
    assert all(tr[i + 1] <= tr[i] + 1e-12 * max(1.0, abs(tr[0])) for i in range(len(tr) - 1))
    assert sol.energy == tr[-1]


def test_discrete_energy_gradient_matches_finite_differences():
    g = planar_strip_grid(1.0, 1.0, 12, 12)
    op = KinkPotential2D()
    tau = 1.0 / 12.0
    rng = np.random.default_rng(5)
    U = rng.standard_normal((1,) + g.node_shape)
    grad = _masked_residual(g, op, U, None, tau, False)
    E0 = nonlinear_energy(op, g, U, None, tau)
    h = 1e-6
    idx_lat = rng.integers(0, g.node_shape[0], 100)
    idx_lvl = rng.integers(1, g.node_shape[1], 100)
    for i, k in zip(idx_lat, idx_lvl):
        Up = U.copy()
        Up[0, i, k] += h
        Um = U.copy()
        Um[0, i, k] -= h
        fd = (nonlinear_energy(op, g, Up, None, tau) - nonlinear_energy(op, g, Um, None, tau)) / (
            2 * h
        )
        denom = max(abs(grad[0, i, k]), 1e-3 * np.abs(grad).max())
        assert abs(fd - grad[0, i, k]) / denom <= 1e-6


def test_injected_closed_form_residual_second_order():
    xi3 = make_rational_direction([0, 0, 1])
    rmss = []
    hs = (1 / 16, 1 / 32)
    for h in hs:
        prob = StripProblem(xi=xi3, operator=RootKinkOperator(), data=None, R=1.0, h=h)
        g = prob.build_grid()
        pts = g.node_coords()
        U = ((1.0 / 3.0 + np.cos(2 * np.pi * pts[0])) * np.exp(-2 * np.pi * pts[2]))[None]
        res = discrete_residual(StripSolution(prob, g, U, 0.0, 0))
        rmss.append(res["rms"])
    assert math.log2(rmss[0] / rmss[1]) >= 1.8


def test_residual_grows_under_perturbation(xi_e2, data_cos1, laminate2):
    p = StripProblem(xi=xi_e2, operator=laminate2, data=data_cos1, R=1.0, h=1 / 16)
    sol = solve_linear(p)
    base = discrete_residual(sol)["sup"]
    h = 1 / 16
    rng = np.random.default_rng(0)
    noise = h**2 * rng.standard_normal(sol.values.shape)
    noisy = discrete_residual(sol, values=sol.values + noise)["sup"]
    assert noisy >= 10.0 * max(base, 1e-12)


def test_exact_discrete_solve_has_tiny_residual(xi_e2, data_cos1):
    from effbc import identity_tensor

    p = StripProblem(xi=xi_e2, operator=identity_tensor(2), data=data_cos1, R=1.0, h=1 / 16)
    sol = solve_linear(p)
    # algebraic residual of the solve itself
    assert sol.residual_norm <= 1e-9


def test_subsolution_dominated_by_kink_solution():
    # reduced problem at the scale of the closed forms: v >= w everywhere
    T, R = 2.0 * math.pi, 8.0
    g = planar_strip_grid(T, R, 64, 64)
    tau = R / 64
    prob = StripProblem(
        xi=None, operator=KinkPotential2D(),
        data=lambda c: 1.0 / 3.0 + np.cos(c[0]), R=R, grid=g, tau=tau,
    )
    sol = solve_nonlinear(prob)
    pts = g.node_coords()
    w = (1.0 / 3.0 + np.cos(pts[0])) * np.exp(-pts[1])
    hmax = max(g.spacings)
    assert (sol.values[0] - w).min() >= -(hmax**2 + tau)


def test_monotone_fixed_point_reduced_map():
    # non-gradient reduced map: closed-form solution decays to zero
    T, R = 1.0, 6.0
    g = planar_strip_grid(T, R, 32, 192)
    prob = StripProblem(
        xi=None, operator=ReducedRootKink(1.0),
        data=lambda c: 1.0 / 3.0 + np.cos(2 * np.pi * c[0]), R=R, grid=g, tau=0.0,
    )
    sol = solve_nonlinear(prob)
    assert sol.energy is None
    top = sol.top_slice()
    assert abs(top.mean()) <= 5e-3
    # residual trace decreased monotonically in the preconditioned norm
    assert sol.iterations > 0


def test_root_kink_3d_small_solve():
    xi3 = make_rational_direction([0, 0, 1])
    data = cosine_field(3, [1, 0, 0], constant=1.0 / 3.0)
    p = StripProblem(xi=xi3, operator=RootKinkOperator(), data=data, R=2.0, h=1 / 8, tau=0.0)
    sol = solve_nonlinear(p)
    # far field of the closed-form solution is 0; coarse mesh bias only
    assert abs(sol.top_slice().mean()) <= 0.05
