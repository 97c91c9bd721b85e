import math

import numpy as np
import pytest
from scipy import integrate, optimize

from pdas.oracle import brute_threshold
from pdas.penalty import (
    DEFAULT_TAU,
    FAMILIES,
    Penalty,
    apply_threshold,
    g_value,
    lambda_max,
    rho,
    threshold_pair,
)


def pen(fam, lam=1.0, tau=None):
    return Penalty.make(fam, lam, tau)


# --- construction -------------------------------------------------------


@pytest.mark.parametrize(
    "fam,tau",
    [("bridge", 0.0), ("bridge", 1.0), ("scad", 2.0), ("mcp", 1.0), ("capped_l1", 1.0), ("scad", math.nan)],
)
def test_tau_out_of_range_rejected(fam, tau):
    with pytest.raises(ValueError):
        Penalty(fam, 1.0, tau)


@pytest.mark.parametrize("lam", [0.0, -1.0, math.inf])
def test_lambda_must_be_positive(lam):
    with pytest.raises(ValueError):
        Penalty("l0", lam)


def test_tau_required_for_concave_families():
    with pytest.raises(ValueError, match="requires tau"):
        Penalty("scad", 1.0)
    assert Penalty.make("scad", 1.0).tau == DEFAULT_TAU["scad"]


def test_family_aliases():
    assert Penalty.make("capped-l1", 1.0).family == "capped_l1"


# --- rho ------------------------------------------------------------------


def test_rho_zero_everywhere_at_origin():
    for fam in FAMILIES:
        assert rho(pen(fam, 1.2), 0.0) == 0.0


def test_rho_scad_far_branch():
    assert rho(pen("scad", 1.0, 3.7), 10.0) == pytest.approx(2.35, abs=1e-12)


def test_rho_scad_matches_integrated_derivative():
    lam, tau = 1.0, 3.7
    deriv = lambda x: lam * (x <= lam) + max(tau * lam - x, 0.0) / (tau - 1.0) * (x > lam)
    for t in (0.5, 2.0, 3.0, 10.0):
        val, _ = integrate.quad(deriv, 0.0, t, points=[lam, lam * tau])
        assert rho(pen("scad", lam, tau), t) == pytest.approx(val, abs=1e-9)


def test_rho_mcp_middle_branch():
    assert rho(pen("mcp", 1.0, 2.7), 1.0) == pytest.approx(1 - 1 / 5.4, abs=1e-12)
    val, _ = integrate.quad(lambda x: max(1.0 - x / 2.7, 0.0), 0.0, 1.0)
    assert rho(pen("mcp", 1.0, 2.7), 1.0) == pytest.approx(val, abs=1e-12)


def test_rho_is_even_and_vectorized():
    t = np.linspace(-5, 5, 41)
    for fam in FAMILIES:
        P = pen(fam, 0.7)
        np.testing.assert_array_equal(P.rho(t), P.rho(-t))
        assert P.rho(t).shape == t.shape


# --- g and threshold pair ---------------------------------------------------


def test_g_values():
    assert g_value(pen("l0", 2.0), 2.0) == pytest.approx(2.0)
    assert g_value(pen("l0", 2.0), 0.0) == math.inf
    assert g_value(pen("bridge", 1.0, 0.5), 0.0) == math.inf
    assert g_value(pen("mcp", 1.0, 2.7), 0.0) == 1.0


def test_g_rejects_negative():
    with pytest.raises(ValueError):
        g_value(pen("l0"), -1.0)


def test_threshold_pairs():
    assert threshold_pair(pen("l0", 2.0)) == pytest.approx((2.0, 2.0))
    assert threshold_pair(pen("bridge", 1.0, 0.5)) == pytest.approx((1.0, 1.5), abs=1e-12)
    assert threshold_pair(pen("scad", 1.2, 3.7)) == (0.0, 1.2)
    assert threshold_pair(pen("lasso", 0.3)) == (0.0, 0.3)


def test_bridge_pair_against_grid_minimization_of_g():
    P = pen("bridge", 1.0, 0.5)
    t = np.linspace(1e-4, 10, 100_001)
    gt = P.g(t)
    i = int(np.argmin(gt))
    res = optimize.minimize_scalar(P.g, bracket=(t[i - 1], t[i], t[i + 1]), tol=1e-12)
    assert res.x == pytest.approx(1.0, abs=1e-6)
    assert res.fun == pytest.approx(1.5, abs=1e-12)


@pytest.mark.parametrize("fam", ["l0", "bridge"])
def test_g_consistency_at_t_star(fam):
    for lam in (0.1, 1.0, 7.5):
        for tau in (0.1, 0.5, 0.9):
            P = Penalty.make(fam, lam, tau)
            t, T = P.threshold_pair()
            assert P.g(t) == pytest.approx(T, rel=1e-12)


# --- thresholding -----------------------------------------------------------


def test_lasso_soft_threshold():
    assert apply_threshold(pen("lasso"), 2.5) == 1.5


def test_l0_hard_threshold():
    P = pen("l0", 2.0)
    assert apply_threshold(P, 1.9) == 0.0
    assert apply_threshold(P, 2.1) == 2.1
    assert apply_threshold(P, 2.0) == 0.0  # tie resolves to the smaller element


def test_bridge_larger_root():
    P = pen("bridge", 1.0, 0.5)
    u = apply_threshold(P, 2.0)
    assert u == pytest.approx(1.6053789, abs=1e-6)
    assert u + 0.5 * u**-0.5 == pytest.approx(2.0, abs=1e-12)
    mins, _ = brute_threshold(P, 2.0)
    assert min(abs(u - m) for m in mins) < 1e-6


def test_scad_middle_branch():
    assert apply_threshold(pen("scad", 1.0, 3.7), 2.5) == pytest.approx(3.05 / 1.7, abs=1e-12)


def test_mcp_middle_branch():
    assert apply_threshold(pen("mcp", 1.0, 2.7), 2.0) == pytest.approx(2.7 / 1.7, abs=1e-12)


def test_capped_l1_branches():
    P = pen("capped_l1", 1.0, 1.5)
    assert apply_threshold(P, 1.8) == pytest.approx(0.8)
    assert apply_threshold(P, 2.2) == 2.2
    assert apply_threshold(P, -2.0) == -1.0  # tie at lam*(tau + 1/2)


def test_threshold_set_reports_both_tie_elements():
    assert pen("l0", 2.0).threshold_set(2.0) == (0.0, 2.0)
    assert pen("capped_l1", 1.0, 1.5).threshold_set(2.0) == (1.0, 2.0)
    assert pen("lasso").threshold_set(2.0) == (1.0,)


def test_threshold_scalar_and_array_shapes():
    P = pen("scad")
    assert isinstance(P.threshold(3.0), float)
    assert P.threshold(np.ones((2, 3))).shape == (2, 3)


# --- prox with a step -------------------------------------------------------


@pytest.mark.parametrize("fam", FAMILIES)
@pytest.mark.parametrize("step", [0.3, 0.8, 1.0, 2.5])
def test_prox_minimizes_scaled_objective(fam, step):
    P = pen(fam, 0.9)
    v = np.linspace(-6, 6, 49)
    u = P.prox(v, step)
    grid = np.linspace(-8, 8, 160_001)
    for vi, ui in zip(v, u):
        f = lambda w: 0.5 * (w - vi) ** 2 + step * P.rho(w)
        assert f(ui) <= np.min(f(grid)) + 1e-6


def test_prox_rejects_nonpositive_step():
    with pytest.raises(ValueError):
        pen("l0").prox(1.0, 0.0)


# --- lambda_max -------------------------------------------------------------


def test_lambda_max_values():
    assert lambda_max("l0", None, 2.0) == pytest.approx(2.0)
    assert pen("l0", lambda_max("l0", None, 2.0)).T_star >= 2.0
    assert lambda_max("bridge", 0.5, 1.5) == pytest.approx(1.0, rel=1e-14)
    assert pen("bridge", lambda_max("bridge", 0.5, 1.5), 0.5).T_star >= 1.5
    assert lambda_max("scad", 3.7, 3.3) == 3.3


@pytest.mark.parametrize("fam", FAMILIES)
def test_lambda_max_makes_zero_a_fixed_point(fam, rng):
    for a in rng.uniform(1e-3, 1e3, size=50):
        lam = lambda_max(fam, DEFAULT_TAU.get(fam), a)
        assert Penalty.make(fam, lam).T_star >= a


def test_lambda_max_needs_positive_input():
    with pytest.raises(ValueError):
        lambda_max("l0", None, 0.0)
