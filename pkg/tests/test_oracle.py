import math

import numpy as np
import pytest
from scipy import integrate

from budgetbid import (ExpUniformModel, LowerBoundModel, expected_payoff, expected_payoff_lb,
                       lower_bound_instance, waterfill_optimal)
from budgetbid.exceptions import DimensionError, DomainError
from budgetbid.oracle import bids_for_multiplier, marginal_payoff, optimal_bid

from .conftest import LAMBDA_BAR, PI_BAR


def quad_payoff(lam_bar, pi_bar, x):
    val, _ = integrate.quad(lambda l: (pi_bar - l) * math.exp(-l / lam_bar) / lam_bar, 0, x,
                            epsabs=1e-12, epsrel=1e-12)
    return val


def test_zero_bid_pays_nothing(five_good_model):
    assert expected_payoff(five_good_model, np.zeros(5)) == 0.0


@pytest.mark.parametrize("lam, pi, x", [(4, 5, 5), (6, 8, 3.3), (8, 9, 12), (4, 3, 0.7)])
def test_closed_form_matches_quadrature(lam, pi, x):
    m = ExpUniformModel([lam], [pi])
    assert expected_payoff(m, [x]) == pytest.approx(quad_payoff(lam, pi, x), abs=1e-6)


def test_large_bid_limit(five_good_model):
    per_good = expected_payoff(five_good_model, np.full(5, 1e6), per_good=True)
    np.testing.assert_allclose(per_good, np.subtract(PI_BAR, LAMBDA_BAR), atol=1e-9)
    assert expected_payoff(five_good_model, np.full(5, np.inf)) == pytest.approx(3.0)


def test_gradient_matches_finite_differences(five_good_model):
    rng = np.random.default_rng(0)
    h = 1e-5
    for _ in range(50):
        x = rng.uniform(0.01, 10, size=5)
        grad = marginal_payoff(five_good_model, x)
        for k in range(5):
            e = np.zeros(5)
            e[k] = h
            fd = (expected_payoff(five_good_model, x + e)
                  - expected_payoff(five_good_model, x - e)) / (2 * h)
            assert fd == pytest.approx(grad[k], rel=1e-4, abs=1e-9)


@pytest.mark.parametrize("gamma, total", [(0.1, 25.828), (0.2, 20.870), (0.3, 17.018),
                                          (0.4, 13.845)])
def test_multiplier_budgets(five_good_model, gamma, total):
    assert bids_for_multiplier(five_good_model, gamma).sum() == pytest.approx(total, abs=1e-3)


def test_unbinding_budget_bids_mean_spot(five_good_model):
    bids, gamma = waterfill_optimal(five_good_model, 40)
    np.testing.assert_array_equal(bids, PI_BAR)
    assert gamma == 0
    bids, gamma = waterfill_optimal(ExpUniformModel([4], [5]), 5)
    assert bids.tolist() == [5] and gamma == 0


@pytest.mark.parametrize("budget", [1.0, 5.0, 13.845, 25.0, 32.9])
def test_kkt_conditions(five_good_model, budget):
    bids, gamma = waterfill_optimal(five_good_model, budget)
    assert bids.sum() == pytest.approx(budget, abs=1e-8)
    active = bids > 0
    marg = marginal_payoff(five_good_model, bids)
    np.testing.assert_allclose(marg[active], gamma, atol=1e-6)
    ratio = np.divide(PI_BAR, LAMBDA_BAR)
    assert np.all(ratio[~active] < gamma + 1e-9)


def test_optimum_beats_random_feasible_points(five_good_model):
    budget = 13.845
    bids, _ = waterfill_optimal(five_good_model, budget)
    best = expected_payoff(five_good_model, bids)
    rng = np.random.default_rng(1)
    pts = rng.dirichlet(np.ones(6), size=10_000)[:, :5] * budget
    values = [expected_payoff(five_good_model, p) for p in pts]
    assert max(values) <= best + 1e-12


def test_non_positive_mean_spot_rejected():
    with pytest.raises(DomainError):
        waterfill_optimal(ExpUniformModel([1, 1], [2, -1]), 1)


def test_bid_validation(five_good_model):
    with pytest.raises(DomainError):
        expected_payoff(five_good_model, [-1, 0, 0, 0, 0])
    with pytest.raises(DimensionError):
        expected_payoff(five_good_model, [1, 2])


def test_lower_bound_instance_values():
    (high, low), floor = lower_bound_instance(100)
    assert high.epsilon == pytest.approx(0.0223607, abs=1e-7)
    assert floor == pytest.approx(0.279508, abs=1e-6)
    assert high.pi_mean == pytest.approx(0.5 + high.epsilon)
    assert low.pi_mean == pytest.approx(0.5 - low.epsilon)
    (one, _), _ = lower_bound_instance(1)
    lo, hi = one.support
    assert 0 < lo < hi < 1


def test_lower_bound_payoff_examples():
    (high, low), _ = lower_bound_instance(100)
    eps = high.epsilon
    assert expected_payoff_lb(high, 0.0) == 0
    assert expected_payoff_lb(high, 1.0) == pytest.approx(eps)
    assert expected_payoff_lb(low, 1.0) == pytest.approx(-eps)
    with pytest.raises(DomainError):
        expected_payoff_lb(high, 1.5)


def test_lower_bound_payoff_matches_quadrature():
    m = LowerBoundModel(0.3, 0.62)
    lo, hi = m.support
    for x in np.linspace(0, 1, 23):
        ref, _ = integrate.quad(lambda l: (m.pi_mean - l) / m.epsilon, lo, min(max(x, lo), hi))
        assert expected_payoff_lb(m, x) == pytest.approx(ref, abs=1e-12)


def test_lower_bound_lipschitz():
    rng = np.random.default_rng(2)
    (high, low), _ = lower_bound_instance(4)
    for m in (high, low, LowerBoundModel(0.5, 0.5)):
        a, b = rng.uniform(0, 1, size=(2, 5000))
        diff = np.abs([expected_payoff_lb(m, x) - expected_payoff_lb(m, y) for x, y in zip(a, b)])
        assert np.all(diff <= 1.5 * np.abs(a - b) + 1e-12)


def test_lower_bound_optimal_bid():
    (high, low), _ = lower_bound_instance(400)
    for m in (high, low):
        x = optimal_bid(m, 1.0)[0]
        grid = np.linspace(0, 1, 20001)
        assert expected_payoff_lb(m, x) >= max(expected_payoff_lb(m, g) for g in grid) - 1e-12
