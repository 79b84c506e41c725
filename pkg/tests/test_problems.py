import numpy as np
import pytest

from adasplit import gen, oracle_solve, plan_for, solve
from adasplit.core import SplittingError
from adasplit.problems import (
    ORACLE_DIM_CAP, TAGS, UnsupportedDim, contains_zero, lasso, neutralize, objective, quad3,
    slow_instances, weak,
)
from adasplit.problems import _split_quadratic


def prox_gradient(problem, iters=20_000):
    """Independent oracle: proximal gradient on ½xᵀHx + gᵀx + nonsmooth."""
    H, g, ns = _split_quadratic(problem)
    L = np.linalg.eigvalsh(H)[-1]
    t = 1.0 / L
    kind = None if ns is None else ns.kind
    x = np.zeros(problem.dim)
    for _ in range(iters):
        z = x - t * (H @ x + g)
        if kind == "subdiff_l1":
            z = np.sign(z) * np.maximum(np.abs(z) - t * ns.w, 0.0)
        elif kind == "box":
            z = np.clip(z, ns.lo, ns.hi)
        elif kind == "ball":
            nz = np.linalg.norm(z)
            z = z if nz <= ns.radius else z * (ns.radius / nz)
        if np.max(np.abs(z - x)) < 1e-15:
            return z
        x = z
    return x


def test_same_seed_bit_identical():
    for tag in TAGS:
        p1, p2 = gen(tag, 4, 17), gen(tag, 4, 17)
        assert np.array_equal(p1.oracle_solution, p2.oracle_solution)
        for s1, s2 in ((p1.problem.a, p2.problem.a), (p1.problem.b, p2.problem.b)):
            assert repr(s1) == repr(s2)
        assert not np.array_equal(gen(tag, 4, 18).oracle_solution, p1.oracle_solution)


def test_quad3_example():
    nb = quad3((1.0, 4.0, 7.0))
    from adasplit.problems import oracle_solve_problem
    assert oracle_solve_problem(nb) == pytest.approx([4.0], abs=1e-14)


def test_lasso_example():
    from adasplit.problems import oracle_solve_problem
    pb = lasso(np.eye(2), [3.0, 0.1], 0.5)
    assert oracle_solve_problem(pb) == pytest.approx([2.5, 0.0], abs=1e-14)


def test_weak_rejects_nonmonotone_sum():
    Q = np.diag([1.0, 2.0])
    with pytest.raises(SplittingError):
        weak(Q, np.zeros(2), 0.2, 0.2 + 1.0 + 0.01, 1.0)
    pb = weak(Q, np.zeros(2), 0.2, 0.5, 1.0)
    assert pb.alpha == pytest.approx(1.2) and pb.beta == pytest.approx(-0.5)


def test_gen_moduli():
    for tag in TAGS:
        for seed in range(4):
            s = gen(tag, 3, seed, oracle=False).problem
            assert s.alpha + s.beta > 0
            assert s.alpha > 0 or tag == "P-WEAK"
            n = gen(tag, 3, seed, "neutral", oracle=False).problem
            assert abs(n.alpha + n.beta) <= 1e-12
            if seed % 2:
                assert n.alpha < 0
    w = gen("P-WEAK", 3, 0, oracle=False).problem
    assert w.beta < 0


@pytest.mark.parametrize("tag", TAGS)
@pytest.mark.parametrize("regime", ["strong", "neutral"])
def test_oracles_solve_inclusion(tag, regime):
    for seed in range(3):
        nb = gen(tag, 6, seed, regime)
        assert contains_zero(nb.problem, nb.oracle_solution, 1e-10)


@pytest.mark.parametrize("tag", TAGS)
def test_oracles_match_prox_gradient(tag):
    for seed in range(3):
        nb = gen(tag, 5, seed)
        ref = prox_gradient(nb.problem)
        assert np.max(np.abs(ref - nb.oracle_solution)) <= 1e-9


def test_neutralize_keeps_solution():
    for tag in TAGS:
        s = gen(tag, 4, 3).oracle_solution
        n = gen(tag, 4, 3, "neutral").oracle_solution
        assert np.max(np.abs(s - n)) <= 1e-10


def test_neutralize_needs_linear_map():
    from adasplit import HuberGrad, Problem, ZeroOp
    with pytest.raises(SplittingError):
        neutralize(Problem(ZeroOp(), ZeroOp(), HuberGrad(1.0, [0.0]), 1))


@pytest.mark.parametrize("tag", TAGS)
def test_shadow_minimizes_objective(rng, tag):
    nb = gen(tag, 4, 2)
    rep = solve(nb.problem, plan_for(nb.problem), np.zeros(4))
    # J_{δB}S x_N equals the shadow to solver tolerance and lies inside dom g,
    # where J_{γA}x_N can sit an ulp outside a box or ball
    last = rep.records[-1]
    assert np.max(np.abs(last.b - rep.final_shadow)) <= 1e-10
    x = last.b
    f0 = objective(nb.problem, x)
    for scale in (1e-3, 1e-1, 1.0):
        pert = x + scale * rng.standard_normal((334, 4))
        vals = np.array([objective(nb.problem, p) for p in pert])
        assert np.all(f0 <= vals + 1e-8)


def test_unsupported_dim():
    for tag in ("P-L1", "P-BOX", "P-WEAK"):
        with pytest.raises(UnsupportedDim):
            gen(tag, ORACLE_DIM_CAP + 1, 0)
        assert gen(tag, ORACLE_DIM_CAP + 1, 0, oracle=False).oracle_solution is None
    assert gen("P-BALL", 20, 0).oracle_solution.size == 20
    assert gen("P-QUAD3", 20, 0).oracle_solution.size == 20


def test_oracle_at_cap_dimension():
    nb = gen("P-L1", 8, 0)
    assert contains_zero(nb.problem, nb.oracle_solution, 1e-10)
    assert oracle_solve(nb) is not nb.oracle_solution


def test_bad_arguments():
    with pytest.raises(SplittingError):
        gen("P-NOPE", 2, 0)
    with pytest.raises(SplittingError):
        gen("P-L1", 0, 0)
    with pytest.raises(SplittingError):
        gen("P-L1", 2, 0, regime="weak")


def test_slow_instances_have_oracles():
    for name, pb, x0 in slow_instances():
        from adasplit.problems import oracle_solve_problem
        z = oracle_solve_problem(pb)
        assert contains_zero(pb, z, 1e-10), name


def test_contains_zero_rejects_non_solution():
    nb = gen("P-L1", 4, 1)
    assert not contains_zero(nb.problem, nb.oracle_solution + 1e-3, 1e-10)
