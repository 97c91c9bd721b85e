import numpy as np
import pytest

from pdas.baselines import prox_grad_solve, prox_grad_solver
from pdas.continuation import ContinuationOptions, solve_path
from pdas.data import Problem, make_problem
from pdas.optimality import check_coordinatewise
from pdas.penalty import NONCONVEX, Penalty
from pdas.solver import objective


def test_lasso_identity_fixed_point():
    res = prox_grad_solve(Problem(np.eye(2), [3.0, 0.5]), Penalty("lasso", 1.0), step=1.0)
    np.testing.assert_allclose(res.x, [2.0, 0.0])
    assert res.converged
    assert res.iterations_used <= 2


def test_zero_data():
    res = prox_grad_solve(Problem(np.eye(3), np.zeros(3)), Penalty("mcp", 1.0, 2.7))
    assert not np.any(res.x)
    assert res.converged


def test_l0_hard_threshold():
    res = prox_grad_solve(Problem(np.eye(1), [3.0]), Penalty("l0", 2.0), step=1.0)
    np.testing.assert_allclose(res.x, [3.0])


def test_lasso_kkt_on_full_rank_problem(rng):
    A = rng.standard_normal((100, 50))
    A /= np.linalg.norm(A, axis=0)
    y = A @ rng.standard_normal(50) + 0.1 * rng.standard_normal(100)
    P = Penalty("lasso", 0.1)
    res = prox_grad_solve(Problem(A, y), P, rtol=1e-12, max_iter=100_000)
    # fixed point of soft thresholding at unit step
    g = A.T @ (y - A @ res.x)
    assert np.max(np.abs(res.x - P.threshold(res.x + g))) <= 1e-6


@pytest.mark.parametrize("fam", NONCONVEX)
def test_monotone_descent(fam):
    pr = make_problem("gaussian", 60, 120, 5, 10.0, 0.05, 9)
    P = Penalty.make(fam, 0.05)
    x = np.zeros(pr.p)
    J = objective(pr, P, x)
    for _ in range(25):
        res = prox_grad_solve(pr, P, x, max_iter=1)
        J_new = res.objective
        assert J_new <= J + 1e-12
        x, J = res.x, J_new


@pytest.mark.parametrize("fam", NONCONVEX)
def test_orthogonal_fixed_point_is_coordinatewise(fam, rng):
    Q = np.linalg.qr(rng.standard_normal((30, 12)))[0]
    pr = Problem(Q, 3 * rng.standard_normal(30))
    P = Penalty.make(fam, 0.8)
    res = prox_grad_solve(pr, P, step=1.0)
    assert check_coordinatewise(P, res.x, res.d, tol=1e-6).is_coordinatewise_min


def test_auto_step_records_value():
    pr = make_problem("gaussian", 40, 80, 3, 10.0, 0.0, 1)
    res = prox_grad_solve(pr, Penalty("lasso", 0.5), max_iter=5)
    assert 0 < res.extra["step"] < 1


def test_argument_validation():
    pr = Problem(np.eye(2), [1.0, 1.0])
    with pytest.raises(ValueError):
        prox_grad_solve(pr, Penalty("lasso", 1.0), step=0.0)
    with pytest.raises(ValueError):
        prox_grad_solve(pr, Penalty("lasso", 1.0), max_iter=0)


def test_usable_inside_continuation():
    pr = make_problem("gaussian", 60, 120, 4, 10.0, 0.01, 2).with_realized_delta()
    path = solve_path(pr, "lasso", opts=ContinuationOptions(grid_size=30), solver=prox_grad_solver(rtol=1e-9))
    assert path.selected_index is not None
    assert path.final.optimality.is_coordinatewise_min
