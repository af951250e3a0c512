import numpy as np
import pytest

from delaybvp.errors import NotConverged, SingularJacobian
from delaybvp.greens import BvpParams
from delaybvp.oracle import fd_residual, newton_solve
from delaybvp.quadrature import make_grid

from conftest import ones

DIRICHLET = BvpParams(0.0, 0.0, 0.5, 0.25)
THREE_POINT = BvpParams(0.5, 0.5, 0.5, 0.25)


def test_residual_of_exact_quadratic():
    g = make_grid(64)
    u = g.nodes * (1 - g.nodes) / 2
    r = fd_residual(DIRICHLET, ones, lambda t, v: 1.0, u)
    assert np.max(np.abs(r)) <= 1e-12


def test_residual_zero_solution():
    r = fd_residual(THREE_POINT, ones, lambda t, v: v, np.zeros(33))
    assert np.all(r == 0.0)


def test_residual_boundary_row():
    r = fd_residual(BvpParams(0.5, 0.0, 0.5, 0.25), ones, lambda t, v: 1.0, np.ones(17))
    assert r[-1] == pytest.approx(0.5)
    assert r[0] == pytest.approx(1.0)


def test_residual_uses_history_before_tau():
    # with u = 0 on the grid except at eta, the delayed argument for t <= tau
    # is beta * u(eta); f(t, v) = v exposes it
    p = BvpParams(0.0, 0.5, 0.5, 0.25)
    u = np.zeros(9)
    u[4] = 1.0  # node at eta = 0.5
    r = fd_residual(p, ones, lambda t, v: v, u)
    nodes = np.arange(9) / 8
    second = np.zeros(9)
    second[3], second[4], second[5] = 64.0, -128.0, 64.0
    delayed = np.where(nodes <= 0.25, 0.5 * 1.0, np.interp(nodes - 0.25, nodes, u))
    assert r[1:-1] == pytest.approx(second[1:-1] + delayed[1:-1])


def test_newton_linear_problem_in_one_step():
    g = make_grid(64)
    u = newton_solve(DIRICHLET, ones, lambda t, v: 1.0, g, tol=1e-10, max_iter=1)
    assert np.allclose(u, g.nodes * (1 - g.nodes) / 2, atol=1e-12)


def test_newton_zero_lambda():
    p = BvpParams(0.5, 0.5, 0.5, 0.25, lam=0.0)
    u = newton_solve(p, ones, lambda t, v: v + 1, make_grid(32))
    assert np.all(u == 0.0)


def test_newton_matches_picard_for_affine_f():
    from delaybvp.fixedpoint import SolverConfig, picard_solve
    f = lambda t, v: v + 1
    v = newton_solve(THREE_POINT, ones, f, make_grid(1024))
    u, diag = picard_solve(THREE_POINT, ones, f, SolverConfig(tol=1e-12), n=512)
    assert diag.converged
    assert np.max(np.abs(u.values - v[::2])) <= 1e-5


def test_analytic_derivative_gives_same_answer():
    f = lambda t, v: v / (1 + v) + 1
    df = lambda t, v: 1 / (1 + v) ** 2
    g = make_grid(128)
    a = newton_solve(THREE_POINT, ones, f, g)
    b = newton_solve(THREE_POINT, ones, f, g, dfdu=df)
    assert np.max(np.abs(a - b)) <= 1e-9


def test_discrete_maximum_principle(rng):
    for _ in range(5):
        eta = rng.uniform(0.1, 0.9)
        alpha = rng.uniform(0, 0.9) / eta
        beta = rng.uniform(0, 0.9) * (1 - alpha * eta) / (1 - eta)
        p = BvpParams(alpha, beta, eta, rng.uniform(0.1, 0.9), lam=0.3)
        u = newton_solve(p, lambda t: 1 + t, lambda t, v: 1 + np.sin(v) ** 2 / 2, make_grid(256))
        assert u.min() >= -1e-8


def test_singular_jacobian():
    # n = 2, alpha = beta = 0: the interior row reads
    # 4 u0 - 8 u1 + 4 u2 + lam f(u(0.25)), u(0.25) = (u0 + u1)/2, so its
    # u1 coefficient -8 + lam/2 vanishes at lam = 16 and J is singular.
    p = BvpParams(0.0, 0.0, 0.5, 0.25, lam=16.0)
    with pytest.raises(SingularJacobian):
        newton_solve(p, ones, lambda t, v: v + 1, make_grid(2), dfdu=lambda t, v: 1.0)


def test_not_converged():
    with pytest.raises(NotConverged):
        newton_solve(THREE_POINT, ones, lambda t, v: np.exp(v), make_grid(64), max_iter=1)


def test_cubic_eta_row_is_exact_for_cubics():
    from delaybvp.oracle import _cubic_row
    nodes = np.linspace(0, 1, 11)
    for x in (0.0, 0.03, 0.47, 0.99, 1.0):
        row = _cubic_row(nodes, x)
        assert row @ (nodes ** 3 - nodes) == pytest.approx(x ** 3 - x, abs=1e-14)


def test_large_solution_stops_at_rounding_floor():
    # |u| ~ 20 puts the residual floor near 1e-8 at n = 1024
    p = BvpParams(alpha=2.7026695928742432, beta=0.012860800634443424,
                  eta=0.31955937671295914, tau=0.8519889170344777, lam=8.702516591733158)
    a = lambda t: 0.5 + t * (1 - t)
    f = lambda t, v: 1 + 0.5 * np.exp(-v)
    u = newton_solve(p, a, f, make_grid(1024), tol=1e-12)
    assert np.max(np.abs(u)) > 10
    r = fd_residual(p, a, f, u)
    assert np.max(np.abs(r)) < 1e-6
