"""Numerical checks of the identities and inequalities behind the method.

All checks return raw numbers; tolerances are applied by the caller
against ``scale = max(1, ‖x‖², ‖y‖²)`` (see :func:`pair_scale`).

The averagedness inequality is checked through :func:`check_conical` in two
forms.  `GenericConfig` takes three arbitrary cocoercive maps T1, T2, T3
and the operator ``T = Id - ηT1 + ηT2(-νId + λT1 - δT3T1)``.
`ProblemConfig` takes a problem and plan, i.e. T1 = J_{γA}, T2 = J_{δB},
T3 = C, and evaluates the deduction terms both through the generic
constants and through their closed forms in (γ, δ, α, β, σ).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import ParamPlan, Problem, Regime, SplittingError
from .engine import t_parts
from .params import (
    GammaBelowThreshold, delta_range, eta_star_strong, gamma_threshold,
)

__all__ = [
    "HypothesisViolated", "AveragedCheck", "GenericConfig", "ProblemConfig",
    "CASE_TOL", "identity_sides", "check_identity", "identity_scale",
    "generic_constants", "check_conical", "check_conical_batch",
    "check_averaged_equivalence", "expansion", "existence_agreement", "pair_scale",
]

CASE_TOL = 1e-9
_LD = np.longdouble


class HypothesisViolated(SplittingError):
    pass


def pair_scale(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.maximum(1.0, np.maximum(np.sum(x * x, axis=-1), np.sum(y * y, axis=-1)))


# --------------------------------------------------------------------------
# the four-vector identity


def _rows(v):
    v = np.asarray(v)
    return v[None] if v.ndim == 1 else v


def identity_sides(a, b, c, d, eta, nu, lam, delta, sigma, dtype=_LD):
    """Both sides of the identity for ‖f‖², f = a - ηb + ηd, e = -νa + λb - δc.

    Inputs may be stacked along a leading axis.  Evaluated in `dtype`
    (extended precision by default) so the left-over is rounding only.
    """
    if not all(p > 0 and math.isfinite(p) for p in (eta, nu, lam, delta, sigma)):
        raise SplittingError("identity parameters must be finite and > 0")
    a, b, c, d = (_rows(v).astype(dtype) for v in (a, b, c, d))
    eta, nu, lam, delta, sigma = (dtype(p) for p in (eta, nu, lam, delta, sigma))
    e = -nu * a + lam * b - delta * c
    f = a - eta * b + eta * d
    sq = lambda v: np.sum(v * v, axis=-1)
    ip = lambda u, v: np.sum(u * v, axis=-1)
    k = delta / (2 * eta * nu * sigma)
    lhs = sq(f)
    rhs = (sq(a) - (lam / (eta * nu) - k - 1) * sq(a - f)
           - k * sq(a - f - 2 * eta * sigma * c)
           + (lam * eta / nu) * sq(b) + (lam * eta / nu) * sq(d)
           - 2 * eta * ip(a, b) - 2 * (eta / nu) * ip(e, d)
           - (2 * delta * eta / nu) * (ip(c, b) - sigma * sq(c)))
    return lhs, rhs


def identity_scale(a, b, c, d):
    return np.maximum.reduce([np.ones(_rows(a).shape[0])]
                             + [np.sum(_rows(v) ** 2, axis=-1) for v in (a, b, c, d)])


def check_identity(a, b, c, d, eta, nu, lam, delta, sigma):
    """|LHS - RHS| of the identity; a float, or an array for stacked inputs."""
    lhs, rhs = identity_sides(a, b, c, d, eta, nu, lam, delta, sigma)
    err = np.abs(lhs - rhs).astype(float)
    return float(err[0]) if np.ndim(a) == 1 else err


# --------------------------------------------------------------------------
# conical averagedness


@dataclass(frozen=True)
class AveragedCheck:
    """One pair (x, y): lhs = ‖Tx - Ty‖², margin = lhs - (‖x - y‖² - Σ deductions).

    A positive margin beyond tolerance is a violation.  `expansion` is
    ``‖Tx - Ty‖² - ‖x - y‖²``, positive only for expansive pairs.
    """

    lhs: float
    rhs_terms: list
    margin: float
    dist2: float
    expansion: float
    scale: float
    case: str
    specialized_margin: float | None = None


@dataclass(frozen=True, eq=False)
class GenericConfig:
    t1: Callable
    t2: Callable
    t3: Callable
    sigma1: float
    sigma2: float
    sigma3: float
    eta: float
    nu: float
    lam: float
    delta: float

    def parts(self, x):
        b = self.t1(x)
        c = self.t3(b)
        s = -self.nu * x + self.lam * b - self.delta * c
        d = self.t2(s)
        return b, c, s, d


@dataclass(frozen=True, eq=False)
class ProblemConfig:
    problem: Problem
    plan: ParamPlan
    generic: GenericConfig = field(init=False)

    def __post_init__(self):
        pb, pl = self.problem, self.plan
        g = GenericConfig(None, None, None, 1.0 + pl.gamma * pb.alpha, 1.0 + pl.delta * pb.beta,
                          pb.sigma, pl.eta, pl.lam - 1.0, pl.lam, pl.delta)
        object.__setattr__(self, "generic", g)

    def parts(self, x):
        a, s, b, c = t_parts(self.problem, self.plan, x)
        return a, c, s, b


def generic_constants(sigma1, sigma2, sigma3, eta, nu, lam, delta):
    """Case name, η*, and the three deduction weights of the generic inequality."""
    half = 0.0 if math.isinf(sigma3) else delta / (2.0 * sigma3)
    width = nu * sigma1 + sigma2 - lam
    if (abs(lam - 2.0 * nu * sigma1) <= CASE_TOL * lam
            and abs(lam - 2.0 * sigma2) <= CASE_TOL * lam):
        case = "equal"
        eta_star = (lam - half) / nu
        w3 = 0.0
    elif lam < nu * sigma1 + sigma2:
        case = "below"
        eta_star = ((2 * nu * sigma1 - lam) * (2 * sigma2 - lam) / (2.0 * width)
                    + lam - half) / nu
        w3 = eta / (2.0 * nu * width)
    else:
        raise HypothesisViolated(
            f"need lambda = 2*nu*sigma1 = 2*sigma2 or lambda < nu*sigma1 + sigma2; got "
            f"lambda={lam:.6g}, 2*nu*sigma1={2 * nu * sigma1:.6g}, 2*sigma2={2 * sigma2:.6g}")
    if not eta_star > 0:
        raise HypothesisViolated(f"eta* = {eta_star:.6g} must be > 0")
    w1 = eta_star / eta - 1.0
    w2 = 0.0 if math.isinf(sigma3) else delta / (2.0 * eta * nu * sigma3)
    return case, eta_star, (w1, w2, w3)


def _sq(v):
    return np.sum(v * v, axis=-1)


def _terms(g, x, y, px, py):
    """Deduction norms shared by the generic and closed-form evaluations."""
    b = px[0] - py[0]
    c = px[1] - py[1]
    d = px[3] - py[3]
    a = x - y
    f = a - g.eta * b + g.eta * d
    r = a - f
    n1 = _sq(r)
    n2 = np.zeros_like(n1) if math.isinf(g.sigma3) else _sq(r - 2.0 * g.eta * g.sigma3 * c)
    return a, f, b, d, n1, n2


def check_conical_batch(config, x, y):
    """Vectorized :func:`check_conical` over rows of `x` and `y`."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    g = config.generic if isinstance(config, ProblemConfig) else config
    case, eta_star, (w1, w2, w3) = generic_constants(
        g.sigma1, g.sigma2, g.sigma3, g.eta, g.nu, g.lam, g.delta)
    px, py = config.parts(x), config.parts(y)
    a, f, b, d, n1, n2 = _terms(g, x, y, px, py)
    k1, k2 = 2 * g.nu * g.sigma1 - g.lam, 2 * g.sigma2 - g.lam
    n3 = _sq(k1 * b + k2 * d) if case == "below" else np.zeros_like(n1)
    lhs = _sq(f)
    dist2 = _sq(a)
    margin = lhs - (dist2 - w1 * n1 - w2 * n2 - w3 * n3)
    out = {"lhs": lhs, "dist2": dist2, "margin": margin, "expansion": lhs - dist2,
           "scale": pair_scale(x, y), "case": case, "eta_star": eta_star,
           "terms": {"omega1": w1 * n1, "omega2": w2 * n2, "omega3": w3 * n3}}
    if isinstance(config, ProblemConfig):
        out["specialized_margin"] = lhs - (dist2 - _closed_form(config, a, b, d, n1, n2))
    return out


def _closed_form(config, a, b, d, n1, n2):
    """Deductions written with γ, δ, α, β, σ directly instead of σ1, σ2, σ3, ν."""
    pb, pl = config.problem, config.plan
    gamma, delta, eta, lam = pl.gamma, pl.delta, pl.eta, pl.lam
    alpha, beta, sigma = pb.alpha, pb.beta, pb.sigma
    total = (pl.eta_star / eta - 1.0) * n1
    if not math.isinf(sigma):
        total = total + gamma / (2.0 * eta * sigma) * n2
    if pl.regime is Regime.STRONG:
        v = (lam - 2.0 + 2.0 * delta * alpha) * b + (2.0 - lam + 2.0 * delta * beta) * d
        total = total + gamma * eta / (2.0 * delta ** 2 * (alpha + beta)) * _sq(v)
    return total


def check_conical(config, x, y):
    """Evaluate the averagedness inequality for one pair; see `AveragedCheck`."""
    r = check_conical_batch(config, np.asarray(x, dtype=float)[None],
                            np.asarray(y, dtype=float)[None])
    sm = r.get("specialized_margin")
    return AveragedCheck(float(r["lhs"][0]), [(k, float(v[0])) for k, v in r["terms"].items()],
                         float(r["margin"][0]), float(r["dist2"][0]),
                         float(r["expansion"][0]), float(r["scale"][0]), r["case"],
                         None if sm is None else float(sm[0]))


def _apply_rows(T, x):
    try:
        out = np.asarray(T(x), dtype=float)
        if out.shape == x.shape:
            return out
    except (ValueError, TypeError):
        pass
    return np.array([T(row) for row in x], dtype=float)


def check_averaged_equivalence(T, theta, x, y, rtol=1e-9):
    """True iff ‖Tx-Ty‖² ≤ ‖x-y‖² - (1/θ - 1)‖(Id-T)x - (Id-T)y‖² on every pair.

    `T` may map one vector or a stack of rows.
    """
    if not theta > 0:
        raise SplittingError("theta must be > 0")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    tx, ty = _apply_rows(T, x), _apply_rows(T, y)
    lhs = _sq(tx - ty)
    rhs = _sq(x - y) - (1.0 / theta - 1.0) * _sq((x - tx) - (y - ty))
    return bool(np.all(lhs - rhs <= rtol * pair_scale(x, y)))


def expansion(T, x, y):
    """‖Tx - Ty‖² - ‖x - y‖² per pair."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    return _sq(_apply_rows(T, x) - _apply_rows(T, y)) - _sq(x - y)


# --------------------------------------------------------------------------
# step-parameter existence


def existence_agreement(alpha, beta, sigma, gamma, delta, band=1e-10):
    """Compare the direct η* > 0 test with the γ₀ / 1/δ-interval test.

    Returns ``(direct, via_interval, in_band)``; `in_band` flags samples
    within a relative `band` of a boundary of either test, where strict
    inequalities cannot be decided in floating point.
    """
    eta_star = eta_star_strong(alpha, beta, sigma, gamma, delta)
    direct = eta_star > 0
    g0 = gamma_threshold(alpha, beta, sigma)
    inv_g, inv_d = 1.0 / gamma, 1.0 / delta
    terms = abs(4 * gamma * delta * (1 + gamma * alpha) * (1 + delta * beta)) + (gamma + delta) ** 2
    q = 0.0 if math.isinf(sigma) else gamma / (2 * sigma)
    mag = terms / (2 * gamma * delta ** 2 * (alpha + beta)) + q
    in_band = abs(eta_star) <= band * max(1.0, mag)
    in_band |= abs(inv_g - g0) <= band * max(1.0, abs(g0), inv_g)
    try:
        rng = delta_range(alpha, beta, sigma, gamma)
    except GammaBelowThreshold:
        return direct, False, bool(in_band)
    width = band * max(1.0, abs(rng.inv_delta_hi), inv_d)
    in_band |= abs(inv_d - rng.inv_delta_hi) <= width
    in_band |= rng.inv_delta_lo > 0 and abs(inv_d - rng.inv_delta_lo) <= width
    return direct, rng.contains(delta), bool(in_band)
