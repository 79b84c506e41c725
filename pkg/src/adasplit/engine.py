"""The splitting operator T_{A,B,C}, its special cases, and the solver loop.

One application of the operator, with a = J_{γA}x, reads::

    c = C a
    s = (1 - λ) x + λ a - δ c
    b = J_{δB} s
    T x = x - η a + η b

The shadow point a solves 0 ∈ A + B + C once x is a fixed point.
"""

from __future__ import annotations

import enum
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from . import backend as _backend
from ._lowering import lower_forward, lower_resolvent
from .core import (
    ParamPlan, Problem, Regime, SplittingError, ZeroMap, ZeroOp, as_vec,
)
from .params import (
    DEFAULT_ETA_FRACTION, eta_star_neutral, eta_star_strong, plan_for, regime_of,
)
from .resolvents import forward, operator_value, resolvent, subdiff_contains_zero

__all__ = [
    "IterateRecord", "RecordView", "RunReport", "Status", "PlanMismatch",
    "apply_T", "t_parts", "kkt_residual", "solve", "validate_plan",
    "make_fb", "make_bf", "make_dr", "t_fb", "t_bf", "t_dr",
    "fixed_point_from_zero", "regularity_stats", "shadow_membership",
]

log = logging.getLogger(__name__)

FULL_RECORDS = 10_000
THIN_EVERY = 10
DIVERGE_FACTOR = 1e12


class PlanMismatch(SplittingError):
    """The plan was not derived for this problem's moduli."""


class Status(enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    DIVERGED = "diverged"


_STATUS = {_backend.CONVERGED: Status.CONVERGED, _backend.MAX_ITERS: Status.MAX_ITERS,
           _backend.DIVERGED: Status.DIVERGED}


@dataclass(frozen=True, eq=False)
class IterateRecord:
    n: int
    x: np.ndarray
    a: np.ndarray
    s: np.ndarray
    b: np.ndarray
    c: np.ndarray
    residual: float

    def next_x(self, plan):
        return self.x - plan.eta * self.a + plan.eta * self.b


@dataclass(eq=False)
class RunReport:
    records: list
    status: Status
    final_shadow: np.ndarray
    kkt: float
    plan: ParamPlan
    telescoping_bound_checked: bool
    residuals: np.ndarray
    kkts: np.ndarray
    n_iter: int
    backend: str
    tol_kkt: float = field(default=math.nan)

    @property
    def x0(self):
        return self.records[0].x


class RecordView(Sequence):
    """Read-only list of `IterateRecord` built on demand from kernel buffers."""

    def __init__(self, rec, rec_n, resid, count):
        self._rec, self._n, self._r, self._count = rec, rec_n, resid, count

    def __len__(self):
        return self._count

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(self._count))]
        if i < 0:
            i += self._count
        if not 0 <= i < self._count:
            raise IndexError(i)
        v = self._rec[i]
        k = int(self._n[i])
        return IterateRecord(k, v[0], v[1], v[2], v[3], v[4], float(self._r[k]))

    @property
    def indices(self):
        return self._n[:self._count]


def t_parts(problem, plan, x):
    """Intermediate vectors (a, s, b, c) of one application; batches allowed."""
    a = resolvent(problem.a, plan.gamma, x)
    c = forward(problem.c, a)
    s = (1.0 - plan.lam) * x + plan.lam * a - plan.delta * c
    b = resolvent(problem.b, plan.delta, s)
    return a, s, b, c


def apply_T(problem, plan, x, n=0):
    x = as_vec(x, problem.dim)
    a, s, b, c = t_parts(problem, plan, x)
    return IterateRecord(n, x, a, s, b, c, plan.eta * float(np.linalg.norm(a - b)))


def kkt_residual(problem, plan, record):
    """‖(x-a)/γ + (s-b)/δ + Ca‖ + ‖a-b‖/δ for a record of `problem`.

    The first vector is u + v + Ca with u = (x-a)/γ ∈ A(a) and
    v = (s-b)/δ ∈ B(b), so the value vanishes exactly at a fixed point.
    """
    r = record
    g = (r.x - r.a) / plan.gamma + (r.s - r.b) / plan.delta + r.c
    return float(np.linalg.norm(g)) + float(np.linalg.norm(r.a - r.b)) / plan.delta


def shadow_membership(problem, plan, record, tol=1e-8):
    """Check 0 ∈ A(a) + B(a) + C(a) at the shadow a of `record`.

    Uses u = (x - a)/γ as the element of A(a), so B(a) must contain
    -u - C(a); both memberships are tested on the `tol`-enlarged graphs.
    """
    u = (record.x - record.a) / plan.gamma
    return (subdiff_contains_zero(problem.a, record.a, u, tol)
            and subdiff_contains_zero(problem.b, record.a, -u - forward(problem.c, record.a), tol))


def validate_plan(problem, plan, rtol=1e-9):
    """Check that `plan` satisfies the feasibility rules for `problem`."""
    alpha, beta, sigma = problem.alpha, problem.beta, problem.sigma
    regime = regime_of(alpha, beta)
    if regime is not plan.regime:
        raise PlanMismatch(f"problem is in the {regime.value} regime, plan is {plan.regime.value}")
    if regime is Regime.NEUTRAL:
        tie = plan.gamma / (1.0 + 2.0 * plan.gamma * alpha)
        if not math.isclose(tie, plan.delta, rel_tol=rtol):
            raise PlanMismatch(f"neutral regime needs delta = {tie:.17g}, plan has {plan.delta:.17g}")
        expected = eta_star_neutral(alpha, plan.gamma, sigma)
    else:
        expected = eta_star_strong(alpha, beta, sigma, plan.gamma, plan.delta)
    if not math.isclose(expected, plan.eta_star, rel_tol=rtol, abs_tol=1e-14):
        raise PlanMismatch(f"plan eta*={plan.eta_star:.17g} but the problem gives {expected:.17g}")


def solve(problem, plan, x0=None, tol_resid=1e-12, tol_kkt=1e-10, max_iter=100_000,
          backend=None, reference=None, allow_uncertified=False):
    """Iterate x_{n+1} = T x_n from `x0` until both stopping tests pass.

    Stops when ``residual <= tol_resid * (1 + ‖x‖)`` and
    ``kkt <= tol_kkt``, after `max_iter` steps, or once the residual grows
    past 1e12 times its initial value.  If `reference` (a fixed point of T)
    is given, the telescoped averagedness bound is checked on the full
    residual history.  Plans with η ≥ η* are refused unless
    `allow_uncertified` is set; such runs may diverge.
    """
    if plan.eta >= plan.eta_star and not allow_uncertified:
        raise SplittingError("solve needs eta < eta*; certification-only plans cannot be run")
    validate_plan(problem, plan)
    n = problem.dim
    x0 = np.zeros(n) if x0 is None else as_vec(x0, n, "x0")
    max_iter = int(max_iter)
    if max_iter < 0:
        raise SplittingError("max_iter must be >= 0")

    kern = _backend.get(backend)
    low_a = lower_resolvent(problem.a, plan.gamma, n)
    low_b = lower_resolvent(problem.b, plan.delta, n)
    low_c = lower_forward(problem.c, n)
    n_store = min(max_iter, FULL_RECORDS) + 2 + max(0, max_iter - FULL_RECORDS) // THIN_EVERY
    rec = np.empty((n_store, 5, n))
    rec_n = np.empty(n_store, dtype=np.int_)
    resid = np.empty(max_iter + 1)
    kkt = np.empty(max_iter + 1)
    code, last, nrec = kern.iterate(
        x0, low_a.args(), low_b.args(), low_c.args(),
        (plan.gamma, plan.delta, plan.lam, plan.eta),
        (float(tol_resid), float(tol_kkt), max_iter, DIVERGE_FACTOR),
        (FULL_RECORDS, THIN_EVERY), rec, rec_n, resid, kkt)

    rec.setflags(write=False)
    records = RecordView(rec, rec_n, resid, nrec)
    report = RunReport(records, _STATUS[code], records[-1].a.copy(), float(kkt[last]), plan,
                       False, resid[:last + 1].copy(), kkt[:last + 1].copy(), int(last),
                       _backend.name_of(kern), float(tol_kkt))
    if reference is not None:
        stats = regularity_stats(report, reference)
        ok = stats["telescoping_lhs"] <= stats["telescoping_rhs"]
        if not ok:
            log.warning("telescoping bound violated: %.6g > %.6g",
                        stats["telescoping_lhs"], stats["telescoping_rhs"])
        report.telescoping_bound_checked = ok
    return report


def fixed_point_from_zero(problem, plan, z):
    """A fixed point x* of T with J_{γA}x* = z, for a known zero z of A + B + C.

    Needs A or B single-valued: x* = z + γA(z), or x* = z - γ(B(z) + C(z)).
    """
    z = as_vec(z, problem.dim, "z")
    try:
        u = operator_value(problem.a, z)
    except SplittingError:
        u = -(operator_value(problem.b, z) + forward(problem.c, z))
    return z + plan.gamma * u


def regularity_stats(report, reference):
    """√n-scaled residuals and both sides of the telescoped bound

    ``(η*/η - 1) Σ_n ‖x_n - T x_n‖² ≤ ‖x_0 - y‖²`` for a fixed point y.
    """
    if len(report.records) < 10:
        raise SplittingError("regularity stats need at least 10 records")
    r = report.residuals
    plan = report.plan
    omega1 = plan.eta_star / plan.eta - 1.0
    idx = np.arange(r.size)
    d = report.x0 - np.asarray(reference, dtype=float)
    return {
        "sqrtn_scaled": list(np.sqrt(idx) * r),
        "telescoping_lhs": omega1 * math.fsum(r * r),
        "telescoping_rhs": float(d @ d),
    }


# --------------------------------------------------------------------------
# two-operator special cases


def _two_op_plan(problem, gamma, eta_fraction, modulus):
    sigma = problem.sigma
    if gamma is None:
        gamma = sigma if math.isfinite(sigma) else 1.0
    if not 0 < gamma < 4 * sigma:
        raise SplittingError(f"gamma must lie in (0, 4*sigma) = (0, {4 * sigma:.6g})")
    if not 0 < eta_fraction < 1:
        raise SplittingError("eta_fraction must lie in (0, 1)")
    eta_star = eta_star_neutral(0.0, gamma, sigma)
    regime = Regime.STRONG if modulus > 0 else Regime.NEUTRAL
    return ParamPlan(gamma, gamma, eta_fraction * eta_star, eta_star, regime)


def make_fb(problem, gamma=None, eta_fraction=DEFAULT_ETA_FRACTION):
    """Relaxed forward-backward: A = 0, δ = γ, λ = 2, η* = 2 - γ/(2σ)."""
    if not isinstance(problem.a, ZeroOp):
        raise SplittingError("forward-backward needs A = 0")
    if problem.beta < 0:
        raise SplittingError("forward-backward needs B monotone (beta >= 0)")
    return problem, _two_op_plan(problem, gamma, eta_fraction, problem.beta)


def make_bf(problem, gamma=None, eta_fraction=DEFAULT_ETA_FRACTION):
    """Relaxed backward-forward: B = 0, δ = γ, λ = 2, η* = 2 - γ/(2σ)."""
    if not isinstance(problem.b, ZeroOp):
        raise SplittingError("backward-forward needs B = 0")
    if problem.alpha < 0:
        raise SplittingError("backward-forward needs A monotone (alpha >= 0)")
    return problem, _two_op_plan(problem, gamma, eta_fraction, problem.alpha)


def make_dr(problem, gamma=None, delta=None, eta_fraction=DEFAULT_ETA_FRACTION):
    """Adaptive Douglas-Rachford: C = 0, so σ = inf drops every γ/(2σ) term."""
    if not isinstance(problem.c, ZeroMap):
        raise SplittingError("adaptive Douglas-Rachford needs C = 0")
    return problem, plan_for(problem, gamma, delta, eta_fraction)


def t_fb(problem, plan, x):
    """(1 - η)x + η J_{γB}(x - γCx)."""
    x = np.asarray(x, dtype=float)
    return (1.0 - plan.eta) * x + plan.eta * resolvent(
        problem.b, plan.gamma, x - plan.gamma * forward(problem.c, x))


def t_bf(problem, plan, x):
    """(1 - η)x + η (Id - γC) J_{γA} x."""
    x = np.asarray(x, dtype=float)
    a = resolvent(problem.a, plan.gamma, x)
    return (1.0 - plan.eta) * x + plan.eta * (a - plan.gamma * forward(problem.c, a))


def t_dr(problem, plan, x):
    """x - η J_{γA}x + η J_{δB}((1 - λ)x + λ J_{γA}x)."""
    x = np.asarray(x, dtype=float)
    a = resolvent(problem.a, plan.gamma, x)
    b = resolvent(problem.b, plan.delta, (1.0 - plan.lam) * x + plan.lam * a)
    return x - plan.eta * a + plan.eta * b
