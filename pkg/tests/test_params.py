import math

import numpy as np
import pytest

from adasplit import (
    GammaBelowThreshold, InfeasibleGamma, InfeasiblePair, NonMonotonePair, NonStrongPair,
    Problem, Regime, ScaledIdentity, SubdiffL1, ZeroMap, ZeroOp, delta_range, diagnostic_plan,
    gamma_threshold, plan_for, plan_neutral, plan_strong, suggest,
)
from adasplit.params import RegimeMismatch


def cond_i(alpha, beta, sigma, gamma, delta):
    """Direct feasibility quantity, written out independently of the package."""
    num = 4 * gamma * delta * (1 + gamma * alpha) * (1 + delta * beta) - (gamma + delta) ** 2
    tail = 0.0 if math.isinf(sigma) else gamma / (2 * sigma)
    return num / (2 * gamma * delta ** 2 * (alpha + beta)) - tail


INV_DELTA_GRID = np.concatenate([[0.0], np.geomspace(1e-6, 1e3, 400001)])


def feasible_inv_delta(alpha, beta, sigma, gamma):
    """Grid of 1/δ values where the direct condition holds."""
    inv = INV_DELTA_GRID[1:]
    num = 4 * gamma / inv * (1 + gamma * alpha) * (1 + beta / inv) - (gamma + 1 / inv) ** 2
    tail = 0.0 if math.isinf(sigma) else gamma / (2 * sigma)
    val = num / (2 * gamma / inv ** 2 * (alpha + beta)) - tail
    return inv[val > 0]


# --- neutral ------------------------------------------------------------------

def test_neutral_monotone_example():
    p = plan_neutral(0.0, 0.0, 1.0, 2.0, 0.5)
    assert (p.delta, p.lam, p.eta_star, p.eta) == (2.0, 2.0, 1.0, 0.5)
    assert p.regime is Regime.NEUTRAL


def test_neutral_shifted_example():
    p = plan_neutral(0.5, -0.5, 1.0, 1.0, 0.5)
    assert p.delta == pytest.approx(0.5)
    assert p.lam == pytest.approx(1.5)
    assert p.eta_star == pytest.approx(2.5)


def test_neutral_infeasible_gamma_cites_recipe():
    with pytest.raises(InfeasibleGamma, match="max"):
        plan_neutral(-1.0, 1.0, 1.0, 1.0)


def test_neutral_eta_star_nonpositive():
    with pytest.raises(InfeasibleGamma):
        plan_neutral(0.0, 0.0, 1.0, 4.0)


def test_neutral_requires_zero_sum():
    with pytest.raises(RegimeMismatch):
        plan_neutral(0.1, 0.0, 1.0, 1.0)


@pytest.mark.parametrize("frac", [0.0, 1.0, 1.5])
def test_eta_fraction_open_interval(frac):
    with pytest.raises(Exception):
        plan_neutral(0.0, 0.0, 1.0, 1.0, frac)


# --- threshold and interval ---------------------------------------------------

def test_gamma_threshold_cases():
    assert gamma_threshold(1.0, 1.0, 0.25) == 0.0
    assert gamma_threshold(0.0, 1.0, 1.0) == 0.25
    assert gamma_threshold(-1.0, 2.0, 1.0) == pytest.approx(4 - 2 * math.sqrt(1.75), rel=1e-15)
    assert gamma_threshold(-1.0, 2.0, 1.0) == pytest.approx(1.3542487, abs=1e-7)


def test_gamma_threshold_grid_scan():
    # 1/γ just above γ₀ admits some δ, just below admits none
    alpha, beta, sigma = -1.0, 2.0, 1.0
    g0 = gamma_threshold(alpha, beta, sigma)
    assert feasible_inv_delta(alpha, beta, sigma, 1 / (g0 + 2e-3)).size > 0
    assert feasible_inv_delta(alpha, beta, sigma, 1 / (g0 - 2e-3)).size == 0


def test_gamma_threshold_requires_strong_pair():
    with pytest.raises(NonStrongPair):
        gamma_threshold(1.0, -1.0, 1.0)


def test_gamma_threshold_lower_bound(rng):
    for _ in range(2000):
        alpha = rng.uniform(-5, 5)
        beta = -alpha + rng.uniform(1e-4, 5)
        sigma = math.exp(rng.uniform(-4, 4))
        g0 = gamma_threshold(alpha, beta, sigma)
        assert g0 >= max(0.0, -alpha + 1 / (4 * sigma)) - 1e-12 * (1 + abs(g0))


@pytest.mark.parametrize("alpha,beta,sigma,gamma", [(0, 1, 1, 1), (1, 1, 1, 1), (-0.5, 1.5, 2.0, 0.5)])
def test_delta_range_matches_scan(alpha, beta, sigma, gamma):
    rng_ = delta_range(alpha, beta, sigma, gamma)
    feas = feasible_inv_delta(alpha, beta, sigma, gamma)
    lo_scan = 0.0 if feas[0] < 2e-6 else feas[0]
    assert feas[-1] == pytest.approx(rng_.inv_delta_hi, rel=1e-4)
    assert lo_scan == pytest.approx(rng_.inv_delta_lo, abs=1e-4)
    assert np.all(np.diff(feas) / feas[:-1] < 1e-4)  # one contiguous interval


def test_delta_range_first_example():
    r = delta_range(0.0, 1.0, 1.0, 1.0)
    assert r.inv_delta_lo == 0.0
    assert r.inv_delta_hi == pytest.approx(1 + 2 * math.sqrt(0.75))
    assert r.delta_bounds[0] == pytest.approx(0.3660254, abs=1e-7)
    assert r.discriminant == pytest.approx(0.75)


def test_delta_range_second_example():
    r = delta_range(1.0, 1.0, 1.0, 1.0)
    assert r.inv_delta_lo == max(0.0, 3 - 2 * math.sqrt(3.5))
    assert r.inv_delta_hi == pytest.approx(3 + 2 * math.sqrt(3.5))


def test_delta_range_below_threshold():
    with pytest.raises(GammaBelowThreshold):
        delta_range(0.0, 1.0, 1.0, 5.0)


# --- strong plans ------------------------------------------------------------

def test_plan_strong_zero_map_example():
    p = plan_strong(1.0, 0.0, math.inf, 1.0, 1.0, 0.5)
    assert (p.eta_star, p.lam, p.eta) == (2.0, 2.0, 1.0)


def test_plan_strong_outside_interval():
    feas = feasible_inv_delta(0.0, 1.0, 1.0, 1.0)
    assert not (feas[0] < 10 < feas[-1])
    with pytest.raises(InfeasiblePair) as exc:
        plan_strong(0.0, 1.0, 1.0, 1.0, 0.1)
    assert exc.value.delta_range is not None
    assert exc.value.delta_range.inv_delta_hi == pytest.approx(2.7320508, abs=1e-7)


def test_eta_star_positive_iff_direct_condition(rng):
    for _ in range(10_000):
        alpha = rng.uniform(-2, 2)
        beta = -alpha + math.exp(rng.uniform(-6, 1))
        sigma = math.exp(rng.uniform(-3, 3))
        gamma, delta = np.exp(rng.uniform(-4, 3, 2))
        direct = cond_i(alpha, beta, sigma, gamma, delta)
        if abs(direct) < 1e-8:
            continue
        try:
            plan_strong(alpha, beta, sigma, gamma, delta)
            ok = True
        except InfeasiblePair:
            ok = False
        assert ok == (direct > 0)


def test_endpoint_degeneracy(rng):
    for _ in range(200):
        alpha = rng.uniform(-1, 2)
        beta = -alpha + rng.uniform(0.05, 2)
        sigma = math.exp(rng.uniform(-1, 2))
        g0 = gamma_threshold(alpha, beta, sigma)
        gamma = 1 / (g0 + rng.uniform(0.1, 3))
        r = delta_range(alpha, beta, sigma, gamma)
        inside = [r.inv_delta_hi * (1 - 1e-6)]
        outside = [r.inv_delta_hi * (1 + 1e-6)]
        if r.inv_delta_lo > 0:
            inside.append(r.inv_delta_lo * (1 + 1e-6))
            outside.append(r.inv_delta_lo * (1 - 1e-6))
        for v in inside:
            assert cond_i(alpha, beta, sigma, gamma, 1 / v) > 0
        for v in outside:
            assert cond_i(alpha, beta, sigma, gamma, 1 / v) <= 0
        # the expression vanishes at the upper endpoint
        assert abs(cond_i(alpha, beta, sigma, gamma, 1 / r.inv_delta_hi)) < 1e-6


def test_neutral_strong_continuity(rng):
    for _ in range(100):
        alpha = rng.uniform(-0.3, 1)
        sigma = math.exp(rng.uniform(-1, 2))
        bound = max(0.0, -2 * alpha, -alpha + 1 / (4 * sigma))
        gamma = 1 / (bound + rng.uniform(0.2, 2))
        neutral = plan_neutral(alpha, -alpha, sigma, gamma)
        for eps in (1e-3, 1e-4, 1e-5):
            strong = cond_i(alpha, -alpha + eps, sigma, gamma, neutral.delta)
            assert abs(strong - neutral.eta_star) <= 10 * eps * (1 + neutral.eta_star)


# --- suggestions -------------------------------------------------------------

def test_suggest_neutral_example():
    p = suggest(0.0, 0.0, 1.0)
    assert 1 / p.gamma == pytest.approx(1.25)
    assert p.delta == p.gamma and p.lam == 2.0
    assert p.eta == pytest.approx(0.9 * p.eta_star)


def test_suggest_strong_example():
    p = suggest(0.0, 1.0, 1.0)
    assert 1 / p.gamma == pytest.approx(1.25)
    assert 1 / p.delta == pytest.approx((0 + 1.25 + 2 * math.sqrt(1.0)) / 2)


def test_suggest_rejects_nonmonotone():
    with pytest.raises(NonMonotonePair):
        suggest(-1.0, 0.5, 1.0)


def test_suggested_plans_validate(rng):
    for _ in range(500):
        alpha = rng.uniform(-3, 3)
        beta = -alpha + (0.0 if rng.random() < 0.3 else math.exp(rng.uniform(-5, 2)))
        sigma = math.inf if rng.random() < 0.1 else math.exp(rng.uniform(-3, 3))
        p = suggest(alpha, beta, sigma)
        if p.regime is Regime.NEUTRAL:
            q = plan_neutral(alpha, beta, sigma, p.gamma, 0.9)
        else:
            q = plan_strong(alpha, beta, sigma, p.gamma, p.delta, 0.9)
            assert cond_i(alpha, beta, sigma, p.gamma, p.delta) > 0
        assert (q.delta, q.eta_star) == (p.delta, p.eta_star)
        assert p.eta < p.eta_star


def test_plan_for_problem_and_overrides():
    pb = Problem(ScaledIdentity(0.5), SubdiffL1(1.0), ZeroMap(), 2)
    p = plan_for(pb, gamma=1.0)
    assert p.regime is Regime.STRONG and p.gamma == 1.0
    r = delta_range(0.5, 0.0, math.inf, 1.0)
    assert 1 / p.delta == pytest.approx(r.midpoint)
    with pytest.raises(Exception):
        plan_for(pb, delta=1.0)


def test_diagnostic_plan_allows_large_eta():
    pb = Problem(ScaledIdentity(1.0), ZeroOp(), ZeroMap(), 1)
    p = diagnostic_plan(pb, eta_fraction=3.0)
    assert p.certification_only and p.eta == pytest.approx(3 * p.eta_star)
    assert not diagnostic_plan(pb, eta_fraction=0.5).certification_only
