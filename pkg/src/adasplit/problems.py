"""Seeded test problems f + g + h and exact solution oracles.

The oracles never touch a resolvent.  They collapse the problem into a
quadratic ``½xᵀHx + gᵀx`` plus at most one nonsmooth term and then solve
that by brute force: a linear solve, enumeration of all 3^n sign or
active-set patterns (n ≤ 12), or the secular equation on the sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Affine, BallIndicator, BoxIndicator, LinearPSD, Problem, ScaledIdentity,
    Shifted, SplittingError, SubdiffL1, SubdiffQuadratic, ZeroMap, ZeroOp,
)
from .resolvents import (
    flatten_shift, forward, function_value, operator_value, smooth_value, subdiff_contains_zero,
)

__all__ = [
    "TAGS", "ORACLE_DIM_CAP", "UnsupportedDim", "NoConsistentPattern", "NamedProblem",
    "gen", "oracle_solve", "objective", "neutralize",
    "quad3", "lasso", "weak", "random_spd", "slow_instances", "contains_zero",
]

TAGS = ("P-QUAD3", "P-L1", "P-BOX", "P-WEAK", "P-BALL")
ORACLE_DIM_CAP = 12
_CHUNK = 1 << 15


class UnsupportedDim(SplittingError):
    pass


class NoConsistentPattern(SplittingError):
    pass


@dataclass(frozen=True, eq=False)
class NamedProblem:
    tag: str
    problem: Problem
    oracle_solution: np.ndarray | None
    seed: int
    regime: str = "strong"


def random_spd(rng, n, lo=1.0, hi=10.0):
    """Random symmetric matrix with spectrum in [lo, hi] (condition ≤ hi/lo)."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = rng.uniform(lo, hi, n)
    eig[0], eig[-1] = lo, hi
    return (q * eig) @ q.T


def _random_psd(rng, n, hi=3.0):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = rng.uniform(0.0, hi, n)
    eig[rng.random(n) < 0.3] = 0.0
    m = (q * eig) @ q.T
    return 0.5 * (m + m.T)


def neutralize(problem, t=0.0):
    """Same zeros, moduli moved to (α, β) = (-t, t) and the excess into C.

    Needs C linear: the removed curvature (α + β)·Id is added to it.
    """
    if not isinstance(problem.c, (LinearPSD, ZeroMap)):
        raise SplittingError("neutralize needs a linear cocoercive map")
    alpha, beta = problem.alpha, problem.beta
    n = problem.dim
    if isinstance(problem.c, LinearPSD):
        Q, q = problem.c.Q, problem.c.q
    else:
        Q, q = np.zeros((n, n)), np.zeros(n)
    return Problem(Shifted(problem.a, -alpha - t), Shifted(problem.b, -beta + t),
                   LinearPSD(Q + (alpha + beta) * np.eye(n), q), n)


# --------------------------------------------------------------------------
# explicit instances


def quad3(centers, curvatures=(1.0, 1.0, 1.0)):
    """Three 1-D quadratics ½k(x - m)²: A, B by resolvent, C by gradient."""
    (ma, mb, mc), (ka, kb, kc) = centers, curvatures
    prob = Problem(SubdiffQuadratic([[ka]], [-ka * ma]), SubdiffQuadratic([[kb]], [-kb * mb]),
                   LinearPSD([[kc]], [-kc * mc]), 1)
    return prob


def lasso(Q, center, w, P=None, p=None):
    """½(x - m)ᵀQ(x - m) + w‖x‖₁ + ½xᵀPx + pᵀx."""
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    m = np.asarray(center, dtype=float)
    c = ZeroMap() if P is None else LinearPSD(P, np.zeros(n) if p is None else p)
    return Problem(SubdiffQuadratic(Q, -Q @ m), SubdiffL1(w), c, n)


def weak(Q, q, tau, tau_prime, w, P=None, p=None):
    """A = ∇(½xᵀQx + qᵀx) + τId, B = ∂(w‖·‖₁) - τ'Id.

    Rejected when α + β = λ_min(Q) + τ - τ' < 0.
    """
    A = Shifted(SubdiffQuadratic(Q, q), tau)
    B = Shifted(SubdiffL1(w), -tau_prime)
    s = A.modulus + B.modulus
    if s < -1e-12:
        raise SplittingError(f"alpha + beta = {s:.6g} < 0: tau' exceeds tau + alpha_base + beta_base")
    n = A.dim
    c = ZeroMap() if P is None else LinearPSD(P, np.zeros(n) if p is None else p)
    return Problem(A, B, c, n)


def slow_instances(eps=1e-3):
    """2-D instances with curvature ratio 1/eps; they need more than 10⁴ steps.

    Returned as ``(name, problem, x0)``.  All have exact oracles.
    """
    Q = np.diag([1.0, eps])
    q = np.array([-1.0, -1.0])
    x0 = np.array([5.0, 5.0])
    return [
        ("quad-dr", Problem(SubdiffQuadratic(Q, q), ZeroOp(), ZeroMap(), 2), x0),
        ("quad-l1-c", Problem(SubdiffQuadratic(Q, q), SubdiffL1(1e-4),
                              LinearPSD(np.diag([eps, 0.0]), np.zeros(2)), 2), x0),
        ("quad-l1-neutral", neutralize(Problem(SubdiffQuadratic(Q, q), SubdiffL1(1e-4),
                                               LinearPSD(np.zeros((2, 2)), np.zeros(2)), 2),
                                       0.5 * eps), x0),
    ]


# --------------------------------------------------------------------------
# seeded generator


def gen(tag, dim, seed, regime="strong", oracle=True):
    """Reproducible instance of `tag`; bit-identical for equal arguments.

    ``regime="neutral"`` rebalances the moduli to α + β = 0 without
    changing the solution (see :func:`neutralize`); odd seeds also make A
    weakly monotone.
    """
    if tag not in TAGS:
        raise SplittingError(f"unknown tag {tag!r}, expected one of {TAGS}")
    if int(dim) != dim or dim < 1:
        raise SplittingError("dim must be a positive integer")
    if regime not in ("strong", "neutral"):
        raise SplittingError(f"unknown regime {regime!r}")
    if oracle and tag in ("P-L1", "P-BOX", "P-WEAK") and dim > ORACLE_DIM_CAP:
        raise UnsupportedDim(f"{tag} oracle enumerates 3^n patterns; dim {dim} > {ORACLE_DIM_CAP}")
    n = int(dim)
    rng = np.random.default_rng([int(seed), TAGS.index(tag), n])
    Qa = random_spd(rng, n, 1.0, 10.0)
    P = _random_psd(rng, n)
    if tag == "P-QUAD3":
        Qb = random_spd(rng, n, 0.5, 5.0)
        qa, qb, p = rng.standard_normal((3, n))
        prob = Problem(SubdiffQuadratic(Qa, qa), SubdiffQuadratic(Qb, qb), LinearPSD(P, p), n)
    elif tag == "P-L1":
        qa, p = 3.0 * rng.standard_normal((2, n))
        prob = Problem(SubdiffQuadratic(Qa, qa), SubdiffL1(rng.uniform(1.0, 3.0)),
                       LinearPSD(P, p), n)
    elif tag == "P-BOX":
        qa, p = 4.0 * rng.standard_normal((2, n))
        lo = -rng.uniform(0.2, 1.0, n)
        hi = rng.uniform(0.2, 1.0, n)
        prob = Problem(SubdiffQuadratic(Qa, qa), BoxIndicator(lo, hi), LinearPSD(P, p), n)
    elif tag == "P-BALL":
        qa, p = 3.0 * rng.standard_normal((2, n))
        x_free = np.linalg.solve(Qa + P, -(qa + p))
        r = float(np.linalg.norm(x_free)) * rng.uniform(0.3, 1.5)
        prob = Problem(SubdiffQuadratic(Qa, qa), BallIndicator(max(r, 1e-3)), LinearPSD(P, p), n)
    else:  # P-WEAK
        qa, p = 3.0 * rng.standard_normal((2, n))
        tau = rng.uniform(0.0, 1.0)
        tau_p = rng.uniform(0.0, 0.9) * (tau + 1.0) + 0.1
        prob = weak(Qa, qa, tau, tau_p, rng.uniform(1.0, 3.0), P, p)
    if regime == "neutral":
        prob = neutralize(prob, 0.0 if seed % 2 == 0 else rng.uniform(0.1, 0.5))
    sol = oracle_solve_problem(prob) if oracle else None
    return NamedProblem(tag, prob, sol, int(seed), regime)


# --------------------------------------------------------------------------
# oracles


def _split_quadratic(problem):
    """Return (H, g, nonsmooth) with f + g + h = ½xᵀHx + gᵀx + nonsmooth(x)."""
    n = problem.dim
    H = np.zeros((n, n))
    g = np.zeros(n)
    nonsmooth = []
    for spec in (problem.a, problem.b):
        base, tau = flatten_shift(spec)
        H += tau * np.eye(n)
        if isinstance(base, ZeroOp):
            pass
        elif isinstance(base, ScaledIdentity):
            H += base.alpha * np.eye(n)
        elif isinstance(base, SubdiffQuadratic):
            H += base.Q
            g += base.q
        elif isinstance(base, Affine):
            if not np.allclose(base.M, base.M.T):
                raise SplittingError("oracle needs a symmetric affine map")
            H += base.M
            g += base.b
        else:
            nonsmooth.append(base)
    c = problem.c
    if isinstance(c, LinearPSD):
        H += c.Q
        g += c.q
    elif not isinstance(c, ZeroMap):
        raise SplittingError(f"no oracle for cocoercive kind {c.kind}")
    if len(nonsmooth) > 1:
        raise SplittingError("oracle handles at most one nonsmooth term")
    H = 0.5 * (H + H.T)
    if np.linalg.eigvalsh(H)[0] <= 1e-10:
        raise SplittingError("oracle needs a strongly convex smooth part")
    return H, g, (nonsmooth[0] if nonsmooth else None)


def _patterns(n, start, stop):
    """Rows of base-3 digits for pattern indices [start, stop), values in {-1, 0, 1}."""
    idx = np.arange(start, stop)
    out = np.empty((idx.size, n), dtype=np.int8)
    for j in range(n):
        idx, out[:, j] = np.divmod(idx, 3)
    return out - 1


def _enumerate(H, rhs_of, fixed_of, accept, n):
    """Solve every pattern's equality system and keep the consistent ones.

    For a pattern, rows in ``fixed_of(p)`` pin x_i to a value, the rest are
    stationarity rows of H.
    """
    hits = []
    total = 3 ** n
    for start in range(0, total, _CHUNK):
        pat = _patterns(n, start, min(total, start + _CHUNK))
        fixed = fixed_of(pat)
        M = np.where(fixed[:, :, None], np.eye(n)[None], H[None])
        x = np.linalg.solve(M, rhs_of(pat)[..., None])[..., 0]
        ok = accept(pat, x)
        hits.extend(x[ok])
    if not hits:
        raise NoConsistentPattern("no pattern satisfies the optimality conditions")
    hits = np.array(hits)
    if np.max(np.abs(hits - hits[0])) > 1e-8 * max(1.0, np.abs(hits[0]).max()):
        raise NoConsistentPattern("consistent patterns disagree; problem is not strongly convex")
    return hits[0]


def _lasso_oracle(H, g, w):
    n = g.size
    tol = 1e-12 * max(1.0, w, np.abs(g).max())

    def accept(pat, x):
        grad = x @ H.T + g
        free = pat != 0
        sign_ok = np.where(free, pat * x >= 0, True)
        zero_ok = np.where(free, True, np.abs(grad) <= w + tol)
        return np.all(sign_ok & zero_ok, axis=1)

    return _enumerate(H, lambda pat: np.where(pat != 0, -(g + w * pat), 0.0),
                      lambda pat: pat == 0, accept, n)


def _box_oracle(H, g, lo, hi):
    n = g.size
    tol = 1e-12 * max(1.0, np.abs(g).max())

    def rhs(pat):
        return np.where(pat == -1, lo, np.where(pat == 1, hi, -g))

    def accept(pat, x):
        grad = x @ H.T + g
        inside = (x >= lo - tol) & (x <= hi + tol)
        mult = np.where(pat == -1, grad >= -tol, np.where(pat == 1, grad <= tol, True))
        return np.all(inside & mult, axis=1)

    return _enumerate(H, rhs, lambda pat: pat != 0, accept, n)


def _ball_oracle(H, g, r):
    x = np.linalg.solve(H, -g)
    if np.linalg.norm(x) <= r:
        return x
    # boundary face: x(μ) = -(H + μI)^{-1} g with ‖x(μ)‖ = r, μ > 0
    lam, V = np.linalg.eigh(H)
    gt = V.T @ g
    radius = lambda mu: math.sqrt(float(np.sum((gt / (lam + mu)) ** 2)))
    lo_mu, hi_mu = 0.0, float(np.linalg.norm(g)) / r
    while radius(hi_mu) > r:
        hi_mu *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo_mu + hi_mu)
        if mid in (lo_mu, hi_mu):
            break
        if radius(mid) > r:
            lo_mu = mid
        else:
            hi_mu = mid
    mu = 0.5 * (lo_mu + hi_mu)
    return -V @ (gt / (lam + mu))


def oracle_solve_problem(problem):
    H, g, ns = _split_quadratic(problem)
    n = problem.dim
    if ns is None:
        return np.linalg.solve(H, -g)
    if isinstance(ns, BallIndicator):
        return _ball_oracle(H, g, ns.radius)
    if n > ORACLE_DIM_CAP:
        raise UnsupportedDim(f"pattern enumeration capped at dim {ORACLE_DIM_CAP}, got {n}")
    if isinstance(ns, SubdiffL1):
        return _lasso_oracle(H, g, ns.w)
    if isinstance(ns, BoxIndicator):
        return _box_oracle(H, g, ns.lo, ns.hi)
    raise SplittingError(f"no oracle for nonsmooth kind {ns.kind}")


def oracle_solve(named):
    """Exact zero of A + B + C for a generated problem."""
    if named.oracle_solution is not None:
        return named.oracle_solution.copy()
    return oracle_solve_problem(named.problem)


def objective(problem, x):
    """f(x) + g(x) + h(x) for the functions whose (sub)gradients form A, B, C."""
    return (function_value(problem.a, x) + function_value(problem.b, x)
            + smooth_value(problem.c, x))


def contains_zero(problem, x, tol=1e-10):
    """Test 0 ∈ A(x) + B(x) + C(x) when A or B is single-valued."""
    x = np.asarray(x, dtype=float)
    for single, other in ((problem.a, problem.b), (problem.b, problem.a)):
        try:
            u = operator_value(single, x)
        except SplittingError:
            continue
        return subdiff_contains_zero(other, x, -(u + forward(problem.c, x)), tol)
    raise SplittingError("membership test needs A or B single-valued")
