"""Feasibility rules and suggestions for the step parameters (γ, δ, λ, η).

Two regimes are distinguished by the modulus sum α + β of the two resolvent
operators:

* neutral, α + β = 0: δ is tied to γ by 1/δ = 1/γ + 2α and
  η* = 2 + 2γα - γ/(2σ);
* strong, α + β > 0: 1/δ ranges over an open interval that is non-empty
  exactly when 1/γ exceeds the threshold γ₀, and η* is the rational
  expression in :func:`eta_star_strong`.

σ = inf (a zero cocoercive map) makes every γ/(2σ) and 1/(4σ) term vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import ParamPlan, Regime, SplittingError

__all__ = [
    "InfeasibleGamma", "NonStrongPair", "GammaBelowThreshold", "InfeasiblePair",
    "NonMonotonePair", "RegimeMismatch", "DeltaRange",
    "NEUTRAL_TOL", "DEFAULT_ETA_FRACTION",
    "eta_star_neutral", "eta_star_strong", "plan_neutral", "gamma_threshold",
    "delta_range", "plan_strong", "suggest", "plan_for", "regime_of", "diagnostic_plan",
]

NEUTRAL_TOL = 1e-12
DEFAULT_ETA_FRACTION = 0.9


class InfeasibleGamma(SplittingError):
    pass


class NonStrongPair(SplittingError):
    pass


class GammaBelowThreshold(SplittingError):
    pass


class InfeasiblePair(SplittingError):
    def __init__(self, msg, delta_range=None):
        super().__init__(msg)
        self.delta_range = delta_range


class NonMonotonePair(SplittingError):
    pass


class RegimeMismatch(SplittingError):
    pass


def _quarter_inv(sigma):
    if not sigma > 0:
        raise SplittingError(f"sigma must be > 0, got {sigma}")
    return 0.0 if math.isinf(sigma) else 1.0 / (4.0 * sigma)


def _half_ratio(gamma, sigma):
    return 0.0 if math.isinf(sigma) else gamma / (2.0 * sigma)


def _check_fraction(eta_fraction):
    if not 0.0 < eta_fraction < 1.0:
        raise SplittingError(f"eta_fraction must lie in (0, 1), got {eta_fraction}")


def regime_of(alpha, beta):
    s = alpha + beta
    if abs(s) <= NEUTRAL_TOL:
        return Regime.NEUTRAL
    if s > 0:
        return Regime.STRONG
    raise NonMonotonePair(f"alpha + beta = {s:.6g} < 0 is outside the convergence theory")


@dataclass(frozen=True)
class DeltaRange:
    """Open interval (inv_delta_lo, inv_delta_hi) of admissible 1/δ."""

    inv_delta_lo: float
    inv_delta_hi: float
    discriminant: float

    def contains(self, delta):
        return self.inv_delta_lo < 1.0 / delta < self.inv_delta_hi

    @property
    def midpoint(self):
        return 0.5 * (self.inv_delta_lo + self.inv_delta_hi)

    @property
    def delta_bounds(self):
        """The same interval expressed for δ itself."""
        hi = math.inf if self.inv_delta_lo == 0.0 else 1.0 / self.inv_delta_lo
        return 1.0 / self.inv_delta_hi, hi


def eta_star_neutral(alpha, gamma, sigma):
    return 2.0 + 2.0 * gamma * alpha - _half_ratio(gamma, sigma)


def eta_star_strong(alpha, beta, sigma, gamma, delta):
    num = 4.0 * gamma * delta * (1.0 + gamma * alpha) * (1.0 + delta * beta) - (gamma + delta) ** 2
    return num / (2.0 * gamma * delta ** 2 * (alpha + beta)) - _half_ratio(gamma, sigma)


def plan_neutral(alpha, beta, sigma, gamma, eta_fraction=DEFAULT_ETA_FRACTION):
    if abs(alpha + beta) > NEUTRAL_TOL:
        raise RegimeMismatch(f"neutral plan needs alpha + beta = 0, got {alpha + beta:.6g}")
    _check_fraction(eta_fraction)
    if not gamma > 0:
        raise InfeasibleGamma(f"gamma must be > 0, got {gamma}")
    tie = 1.0 + 2.0 * gamma * alpha
    eta_star = eta_star_neutral(alpha, gamma, sigma)
    if tie <= 0 or eta_star <= 0:
        bound = max(-2.0 * alpha, -alpha + _quarter_inv(sigma))
        raise InfeasibleGamma(
            f"gamma={gamma:.6g} gives 1+2*gamma*alpha={tie:.6g}, eta*={eta_star:.6g}; "
            f"need 1/gamma > max(-2*alpha, -alpha + 1/(4*sigma)) = {bound:.6g}")
    delta = gamma / tie
    return ParamPlan(gamma, delta, eta_fraction * eta_star, eta_star, Regime.NEUTRAL)


def gamma_threshold(alpha, beta, sigma):
    """Infimum γ₀ of admissible 1/γ when α + β > 0."""
    if not alpha + beta > 0:
        raise NonStrongPair(f"alpha + beta = {alpha + beta:.6g} must be > 0")
    q = _quarter_inv(sigma)
    if alpha >= q:
        return 0.0
    if alpha >= -q:
        return -alpha + q
    return 2.0 * beta - 2.0 * math.sqrt((alpha + beta) * (beta - q))


def delta_range(alpha, beta, sigma, gamma):
    g0 = gamma_threshold(alpha, beta, sigma)
    inv_g = 1.0 / gamma
    if not inv_g > g0:
        raise GammaBelowThreshold(f"1/gamma = {inv_g:.6g} must exceed gamma_0 = {g0:.6g}")
    disc = (alpha + beta) * (inv_g + alpha - _quarter_inv(sigma))
    root = 2.0 * math.sqrt(disc)
    centre = inv_g + 2.0 * alpha
    return DeltaRange(max(0.0, centre - root), centre + root, disc)


def plan_strong(alpha, beta, sigma, gamma, delta, eta_fraction=DEFAULT_ETA_FRACTION):
    if not alpha + beta > 0:
        raise NonStrongPair(f"alpha + beta = {alpha + beta:.6g} must be > 0")
    _check_fraction(eta_fraction)
    if not (gamma > 0 and delta > 0):
        raise InfeasiblePair(f"gamma and delta must be > 0, got {gamma}, {delta}")
    eta_star = eta_star_strong(alpha, beta, sigma, gamma, delta)
    if not eta_star > 0:
        try:
            rng = delta_range(alpha, beta, sigma, gamma)
        except GammaBelowThreshold:
            rng = None
        hint = "" if rng is None else (
            f"; feasible 1/delta in ({rng.inv_delta_lo:.6g}, {rng.inv_delta_hi:.6g})")
        raise InfeasiblePair(
            f"gamma={gamma:.6g}, delta={delta:.6g} give eta*={eta_star:.6g} <= 0{hint}", rng)
    return ParamPlan(gamma, delta, eta_fraction * eta_star, eta_star, Regime.STRONG)


def suggest(alpha, beta, sigma, eta_fraction=DEFAULT_ETA_FRACTION):
    """A feasible plan with unit margin on 1/γ and a centred 1/δ."""
    regime = regime_of(alpha, beta)
    if regime is Regime.NEUTRAL:
        # clamped at 0 so that γ stays positive when α is large
        inv_g = max(0.0, -2.0 * alpha, -alpha + _quarter_inv(sigma)) + 1.0
        return plan_neutral(alpha, beta, sigma, 1.0 / inv_g, eta_fraction)
    gamma = 1.0 / (gamma_threshold(alpha, beta, sigma) + 1.0)
    rng = delta_range(alpha, beta, sigma, gamma)
    return plan_strong(alpha, beta, sigma, gamma, 1.0 / rng.midpoint, eta_fraction)


def plan_for(problem, gamma=None, delta=None, eta_fraction=DEFAULT_ETA_FRACTION):
    """Plan for a concrete problem; missing parameters are filled by the recipes."""
    alpha, beta, sigma = problem.alpha, problem.beta, problem.sigma
    regime = regime_of(alpha, beta)
    if gamma is None:
        if delta is not None:
            raise SplittingError("delta given without gamma")
        return suggest(alpha, beta, sigma, eta_fraction)
    if regime is Regime.NEUTRAL:
        plan = plan_neutral(alpha, beta, sigma, gamma, eta_fraction)
        if delta is not None and not math.isclose(delta, plan.delta, rel_tol=1e-12):
            raise RegimeMismatch(
                f"neutral regime fixes delta = {plan.delta:.17g}, got {delta:.17g}")
        return plan
    if delta is None:
        delta = 1.0 / delta_range(alpha, beta, sigma, gamma).midpoint
    return plan_strong(alpha, beta, sigma, gamma, delta, eta_fraction)


def diagnostic_plan(problem, gamma=None, delta=None, eta_fraction=DEFAULT_ETA_FRACTION):
    """Like :func:`plan_for` but any ``eta_fraction > 0`` is accepted.

    Fractions ≥ 1 give a ``certification_only`` plan; such plans exist to
    show the averagedness guarantee failing; the solver runs them only on
    explicit request.
    """
    if not eta_fraction > 0:
        raise SplittingError(f"eta_fraction must be > 0, got {eta_fraction}")
    if eta_fraction < 1:
        return plan_for(problem, gamma, delta, eta_fraction)
    base = plan_for(problem, gamma, delta, 0.5)
    return ParamPlan(base.gamma, base.delta, eta_fraction * base.eta_star, base.eta_star,
                     base.regime, certification_only=True)
