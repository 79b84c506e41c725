import math

import numpy as np
import pytest

from adasplit import (
    BoxIndicator, LinearPSD, ParamPlan, Problem, Regime, ScaledIdentity, SubdiffL1,
    SubdiffQuadratic, ZeroMap, ZeroOp, apply_T, fixed_point_from_zero, gen, kkt_residual,
    make_bf, make_dr, make_fb, plan_for, regularity_stats, shadow_membership, solve,
    t_bf, t_dr, t_fb,
)
from adasplit import backend
from adasplit._lowering import lower_forward, lower_resolvent
from adasplit.core import SplittingError
from adasplit.engine import FULL_RECORDS, PlanMismatch, Status, t_parts
from adasplit.problems import TAGS, lasso, quad3, slow_instances
from adasplit.resolvents import forward, operator_value


def zero_problem(n=3):
    return Problem(ZeroOp(), ZeroOp(), ZeroMap(), n)


def unit_plan():
    # γ = δ = 1, λ = 2, η = 1, η* = 2 for α = 1, β = 0, σ = inf
    return ParamPlan(1.0, 1.0, 1.0, 2.0, Regime.STRONG)


def contractive_problem():
    return Problem(ScaledIdentity(1.0), ZeroOp(), ZeroMap(), 1)


# --- apply_T -----------------------------------------------------------------

def test_apply_T_zero_specs_is_identity(rng):
    x = rng.standard_normal(3)
    r = apply_T(zero_problem(), ParamPlan(1.0, 1.0, 1.0, 2.0, Regime.NEUTRAL), x)
    assert np.array_equal(r.next_x(ParamPlan(1.0, 1.0, 1.0, 2.0, Regime.NEUTRAL)), x)
    assert r.residual == 0.0


def test_apply_T_hand_example():
    r = apply_T(contractive_problem(), unit_plan(), [1.0])
    assert r.a.tolist() == [0.5] and r.s.tolist() == [0.0] and r.b.tolist() == [0.0]
    assert r.next_x(unit_plan()).tolist() == [0.5]
    assert r.residual == 0.5


def test_next_x_zero_ulps(rng):
    nb = gen("P-L1", 4, 3)
    plan = plan_for(nb.problem)
    x = rng.standard_normal(4)
    r = apply_T(nb.problem, plan, x)
    a, s, b, c = t_parts(nb.problem, plan, x)
    assert np.array_equal(r.next_x(plan), x - plan.eta * a + plan.eta * b)
    assert np.array_equal(r.s, (1 - plan.lam) * x + plan.lam * a - plan.delta * c)


# --- solve -------------------------------------------------------------------

def test_solve_three_quadratics():
    pb = quad3((1.0, 4.0, 7.0))
    assert (pb.alpha, pb.beta, pb.sigma) == (1.0, 1.0, 1.0)
    rep = solve(pb, plan_for(pb), [0.0])
    assert rep.status is Status.CONVERGED
    assert rep.final_shadow == pytest.approx([4.0], abs=1e-10)
    assert rep.kkt <= 1e-10


def test_solve_zero_problem_stops_at_once(rng):
    x0 = rng.standard_normal(3)
    rep = solve(zero_problem(), plan_for(zero_problem()), x0)
    assert rep.status is Status.CONVERGED and rep.n_iter == 0
    assert np.array_equal(rep.final_shadow, x0)


def test_solve_lasso_matches_oracle():
    pb = lasso(np.eye(2), [3.0, 0.1], 0.5)
    rep = solve(pb, plan_for(pb), [0.0, 0.0])
    assert np.max(np.abs(rep.final_shadow - [2.5, 0.0])) <= 1e-6


def test_converged_runs_certify(rng):
    for tag in TAGS:
        for regime in ("strong", "neutral"):
            nb = gen(tag, 4, 1, regime)
            plan = plan_for(nb.problem)
            rep = solve(nb.problem, plan, rng.standard_normal(4))
            assert rep.status is Status.CONVERGED
            assert rep.kkt <= rep.tol_kkt
            last = rep.records[-1]
            assert np.linalg.norm(last.a - last.b) <= 1e-10
            assert shadow_membership(nb.problem, plan, last, 1e-8)
            assert np.max(np.abs(rep.final_shadow - nb.oracle_solution)) <= 1e-6


def test_strong_uniqueness(rng):
    nb = gen("P-BOX", 5, 7)
    plan = plan_for(nb.problem)
    s1 = solve(nb.problem, plan, 10 * rng.standard_normal(5)).final_shadow
    s2 = solve(nb.problem, plan, 10 * rng.standard_normal(5)).final_shadow
    assert np.max(np.abs(s1 - s2)) <= 1e-6


def test_max_iters_and_thinning():
    name, pb, x0 = slow_instances()[0]
    rep = solve(pb, plan_for(pb), x0, tol_resid=0.0, tol_kkt=0.0, max_iter=FULL_RECORDS + 95)
    assert rep.status is Status.MAX_ITERS
    idx = rep.records.indices
    assert idx[:FULL_RECORDS + 1].tolist() == list(range(FULL_RECORDS + 1))
    assert np.all(np.diff(idx[FULL_RECORDS:-1]) == 10)
    assert idx[-1] == rep.n_iter == FULL_RECORDS + 95
    assert rep.residuals.size == rep.n_iter + 1


def test_record_chain_is_exact(rng):
    nb = gen("P-WEAK", 3, 2)
    plan = plan_for(nb.problem)
    rep = solve(nb.problem, plan, rng.standard_normal(3), max_iter=200, tol_resid=0, tol_kkt=0)
    for k in range(len(rep.records) - 1):
        assert np.array_equal(rep.records[k].next_x(plan), rep.records[k + 1].x)


def test_plan_mismatch():
    pb = quad3((1.0, 4.0, 7.0))
    other = plan_for(quad3((1.0, 4.0, 7.0), (2.0, 2.0, 1.0)))
    with pytest.raises(PlanMismatch):
        solve(pb, other, [0.0])
    neutral = ParamPlan(1.0, 1.0, 0.5, 1.0, Regime.NEUTRAL)
    with pytest.raises(PlanMismatch):
        solve(pb, neutral, [0.0])


def test_solve_rejects_diagnostic_plan():
    pb = quad3((1.0, 4.0, 7.0))
    p = plan_for(pb)
    bad = ParamPlan(p.gamma, p.delta, 3 * p.eta_star, p.eta_star, p.regime, certification_only=True)
    with pytest.raises(SplittingError):
        solve(pb, bad, [0.0])


@pytest.mark.parametrize("name", backend.available())
def test_kernel_divergence_sentinel(name):
    # an oversized η is refused by solve, so drive the kernel directly
    pb = quad3((1.0, 4.0, 7.0))
    kern = backend.get(name)
    rec = np.empty((600, 5, 1))
    rec_n = np.empty(600, dtype=np.int_)
    resid, kkt = np.empty(501), np.empty(501)
    code, last, _ = kern.iterate(
        np.array([1.0]), lower_resolvent(pb.a, 1.0, 1).args(), lower_resolvent(pb.b, 1.0, 1).args(),
        lower_forward(pb.c, 1).args(), (1.0, 1.0, 2.0, 50.0), (0.0, 0.0, 500, 1e12),
        (FULL_RECORDS, 10), rec, rec_n, resid, kkt)
    assert code == backend.DIVERGED
    assert resid[last] > 1e12 * resid[0]


# --- kkt ---------------------------------------------------------------------

def test_kkt_zero_at_fixed_point():
    pb = quad3((1.0, 4.0, 7.0))
    plan = plan_for(pb)
    x_star = fixed_point_from_zero(pb, plan, [4.0])
    r = apply_T(pb, plan, x_star)
    assert kkt_residual(pb, plan, r) <= 1e-10
    assert r.residual <= 1e-12


def test_kkt_positive_off_fixed_points(rng):
    nb = gen("P-QUAD3", 3, 0)
    pb = nb.problem
    plan = plan_for(pb)
    lip_b = np.linalg.norm(pb.b.Q, 2)
    for _ in range(200):
        x = 5 * rng.standard_normal(3)
        r = apply_T(pb, plan, x)
        k = kkt_residual(pb, plan, r)
        # oracle: direct residual of the single-valued sum at the shadow
        direct = np.linalg.norm(operator_value(pb.a, r.a) + operator_value(pb.b, r.a)
                                + forward(pb.c, r.a))
        assert k > 0
        assert direct <= max(1.0, lip_b * plan.delta) * k * (1 + 1e-12)


# --- presets -----------------------------------------------------------------

def fb_problem():
    return Problem(ZeroOp(), SubdiffL1(0.3), LinearPSD(2 * np.eye(2), [1.0, -2.0]), 2)


def bf_problem():
    return Problem(SubdiffQuadratic(np.diag([1.0, 2.0]), [1.0, 0.0]), ZeroOp(),
                   LinearPSD(2 * np.eye(2), [0.0, -1.0]), 2)


def dr_problem():
    return Problem(SubdiffL1(0.5), BoxIndicator([-1.0, -1.0], [1.0, 2.0]), ZeroMap(), 2)


def test_fb_preset_eta_star():
    pb, plan = make_fb(fb_problem(), gamma=2 * 0.5)
    assert plan.eta_star == 1.0 and plan.delta == plan.gamma and plan.lam == 2.0


def test_dr_preset_neutral():
    pb, plan = make_dr(dr_problem(), gamma=0.7)
    assert plan.delta == 0.7 and plan.eta_star == 2.0


def test_presets_reject_wrong_slots():
    with pytest.raises(SplittingError):
        make_fb(bf_problem())
    with pytest.raises(SplittingError):
        make_bf(fb_problem())
    with pytest.raises(SplittingError):
        make_dr(fb_problem())
    with pytest.raises(SplittingError):
        make_fb(fb_problem(), gamma=2.0)  # γ must be below 4σ = 2


@pytest.mark.parametrize("maker,direct,build", [
    (make_fb, t_fb, fb_problem), (make_bf, t_bf, bf_problem), (make_dr, t_dr, dr_problem)])
def test_special_case_collapse(rng, maker, direct, build):
    pb, plan = maker(build())
    x = y = 3 * rng.standard_normal(2)
    for _ in range(100):
        x = apply_T(pb, plan, x).next_x(plan)
        y = direct(pb, plan, y)
        assert np.max(np.abs(x - y)) <= 1e-14 * max(1.0, np.max(np.abs(y)))


# --- regularity --------------------------------------------------------------

def test_telescoping_three_quadratics():
    pb = quad3((1.0, 4.0, 7.0))
    plan = plan_for(pb)
    y = fixed_point_from_zero(pb, plan, [4.0])
    rep = solve(pb, plan, [30.0], reference=y)
    st = regularity_stats(rep, y)
    # oracle: direct summation of the residual trace
    lhs = (plan.eta_star / plan.eta - 1) * sum(r * r for r in rep.residuals.tolist())
    assert st["telescoping_lhs"] == pytest.approx(lhs, rel=1e-12)
    assert lhs <= (30.0 - y[0]) ** 2
    assert rep.telescoping_bound_checked


def test_contractive_geometric_residuals():
    plan = unit_plan()
    rep = solve(contractive_problem(), plan, [3.0], tol_resid=0, tol_kkt=0, max_iter=40)
    n = np.arange(41)
    assert rep.residuals == pytest.approx(plan.eta * 3.0 / 2.0 ** (n + 1), rel=1e-15)
    st = regularity_stats(rep, [0.0])
    assert st["sqrtn_scaled"][-1] < 1e-10


def test_residuals_nonincreasing(rng):
    for tag in TAGS:
        nb = gen(tag, 5, 4, oracle=False)
        rep = solve(nb.problem, plan_for(nb.problem), 5 * rng.standard_normal(5))
        r = rep.residuals
        scale = max(1.0, float(np.linalg.norm(rep.x0)) ** 2)
        assert np.all(r[1:] <= r[:-1] + 1e-12 * scale)


def test_regularity_needs_records():
    rep = solve(zero_problem(), plan_for(zero_problem()), np.ones(3))
    with pytest.raises(SplittingError):
        regularity_stats(rep, np.ones(3))
