import numpy as np
import pytest

from pdas.continuation import solve_path
from pdas.data import Problem, make_problem
from pdas.optimality import dual
from pdas.oracle import TooLarge, brute_coordinate_scan, brute_l0_global, brute_threshold, scan_minimize
from pdas.penalty import FAMILIES, Penalty


def test_brute_threshold_examples():
    assert brute_threshold(Penalty("lasso", 1.0), 2.5)[0] == pytest.approx((1.5,), abs=1e-6)
    mins, _ = brute_threshold(Penalty("l0", 2.0), 2.0)
    assert mins == pytest.approx((0.0, 2.0), abs=1e-6)
    mins, _ = brute_threshold(Penalty("capped_l1", 1.0, 1.5), 2.0)
    assert mins == pytest.approx((1.0, 2.0), abs=1e-6)


def test_scan_minimize_refines_off_grid():
    mins, val = scan_minimize(lambda u: (u - 0.123456789) ** 2, 1.0)
    assert mins[0] == pytest.approx(0.123456789, abs=1e-6)
    assert val <= 1e-16


@pytest.mark.parametrize("fam", FAMILIES)
def test_brute_threshold_matches_operator(fam, rng):
    for _ in range(40):
        P = Penalty.make(fam, rng.uniform(0.1, 10))
        v = rng.uniform(-5, 5) * P.T_star
        mins, best = brute_threshold(P, v)
        u = P.threshold(v)
        assert min(abs(u - m) for m in mins) <= 1e-6
        assert 0.5 * (u - v) ** 2 + P.rho(u) <= best + 1e-8


def test_brute_l0_examples():
    x, J = brute_l0_global(np.eye(2), [3.0, 0.1], 2.0)
    np.testing.assert_allclose(x, [3.0, 0.0])
    assert J == pytest.approx(2.005)
    x, J = brute_l0_global(np.eye(3), np.zeros(3), 1.0)
    assert not np.any(x) and J == 0.0
    x, _ = brute_l0_global(np.eye(2), [3.0, 0.1], 1e6)
    assert not np.any(x)


def test_brute_l0_guards():
    with pytest.raises(TooLarge):
        brute_l0_global(np.eye(15), np.ones(15), 1.0)
    with pytest.raises(TooLarge):
        brute_l0_global(np.eye(3), np.ones(3), 1.0, max_support=4)


def test_brute_l0_respects_max_support():
    x, _ = brute_l0_global(np.eye(3), [3.0, 2.0, 1.0], 0.01, max_support=1)
    np.testing.assert_allclose(x, [3.0, 0.0, 0.0])


def test_coordinate_scan_orthogonal(rng):
    Q = np.linalg.qr(rng.standard_normal((10, 5)))[0]
    pr = Problem(Q, rng.standard_normal(10) * 2)
    P = Penalty("mcp", 0.7, 2.7)
    x = rng.standard_normal(5)
    d = dual(Q, pr.y, x)
    for i in range(5):
        assert brute_coordinate_scan(pr, P, x, i) == pytest.approx(P.threshold(x[i] + d[i]), abs=1e-6)


def test_coordinate_scan_least_squares_limit(rng):
    A = rng.standard_normal((12, 4))
    A /= np.linalg.norm(A, axis=0)
    pr = Problem(A, rng.standard_normal(12))
    x = rng.standard_normal(4)
    r = pr.y - A @ x + A[:, 2] * x[2]
    t = brute_coordinate_scan(pr, Penalty("lasso", 1e-12), x, 2)
    assert t == pytest.approx(A[:, 2] @ r, abs=1e-6)


def test_coordinate_scan_does_not_increase_objective(rng):
    from pdas.solver import objective

    pr = make_problem("gaussian", 15, 8, 3, 10.0, 0.1, 1)
    P = Penalty("scad", 0.3, 3.7)
    x = rng.standard_normal(8)
    for i in range(8):
        t = brute_coordinate_scan(pr, P, x, i)
        z = x.copy()
        z[i] = t
        assert objective(pr, P, z) <= objective(pr, P, x) + 1e-12


def test_l0_continuation_near_global():
    hits = 0
    for seed in range(20):
        pr = make_problem("gaussian", 8, 10, 2, 10.0, 0.05, seed)
        f = solve_path(pr, "l0").final
        _, J = brute_l0_global(pr.Psi, pr.y, f.lam)
        hits += f.objective <= J + 1e-6
        assert f.optimality.is_coordinatewise_min
    assert hits >= 16
