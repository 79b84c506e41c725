"""Vectors, operator descriptions, problems and parameter plans.

Everything here is immutable after construction.  Operator descriptions are
small tagged records; the numerical work on them lives in
:mod:`adasplit.resolvents`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "SplittingError", "DimensionMismatch", "SpecError", "ResolventDomainError",
    "as_vec", "dot", "norm",
    "OperatorSpec", "ZeroOp", "ScaledIdentity", "Affine", "SubdiffQuadratic",
    "SubdiffL1", "BoxIndicator", "BallIndicator", "Shifted",
    "CocoerciveSpec", "ZeroMap", "LinearPSD", "HuberGrad",
    "certify_modulus", "certify_sigma",
    "Problem", "Regime", "ParamPlan",
]

EIG_TOL = 1e-10


class SplittingError(ValueError):
    """Base class for every error raised by this package."""


class DimensionMismatch(SplittingError):
    pass


class SpecError(SplittingError):
    """An operator or map description is malformed."""


class ResolventDomainError(SplittingError):
    """The resolvent is not single-valued for the requested step (1 + γα ≤ 0)."""


def _frozen(arr):
    arr.setflags(write=False)
    return arr


def as_vec(x, dim=None, name="x"):
    """Return `x` as a finite, read-only 1-D float64 array."""
    v = np.array(x, dtype=float, ndmin=1)
    if v.ndim != 1:
        raise SpecError(f"{name} must be a vector, got shape {v.shape}")
    if v.size == 0:
        raise SpecError(f"{name} must be non-empty")
    if not np.all(np.isfinite(v)):
        raise SpecError(f"{name} has non-finite entries")
    if dim is not None and v.size != dim:
        raise DimensionMismatch(f"{name} has dim {v.size}, expected {dim}")
    return _frozen(v)


def _as_matrix(m, name):
    a = np.array(m, dtype=float, ndmin=2)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SpecError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise SpecError(f"{name} has non-finite entries")
    return _frozen(a)


def _symmetric(m, name):
    a = _as_matrix(m, name)
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise SpecError(f"{name} must be symmetric")
    return _frozen(0.5 * (a + a.T))


def dot(x, y):
    """Euclidean inner product of two vectors of equal dimension."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionMismatch(f"dot of shapes {x.shape} and {y.shape}")
    return float(np.dot(x.ravel(), y.ravel()))


def norm(x):
    return float(np.linalg.norm(x))


def _min_eig(sym):
    w = np.linalg.eigvalsh(sym)
    lo = float(w[0])
    if abs(lo) <= EIG_TOL * max(1.0, float(np.abs(w).max())):
        lo = 0.0
    return lo


def _max_eig(sym):
    w = np.linalg.eigvalsh(sym)
    hi = float(w[-1])
    if abs(hi) <= EIG_TOL * max(1.0, float(np.abs(w).max())):
        hi = 0.0
    return hi


# --------------------------------------------------------------------------
# monotone operators with closed-form resolvents


class OperatorSpec:
    """Maximally α-monotone operator with a closed-form resolvent."""

    kind = "abstract"

    @property
    def dim(self):
        """Fixed dimension, or None when the operator acts on any R^n."""
        return None

    @cached_property
    def modulus(self):
        return certify_modulus(self)


@dataclass(frozen=True, eq=False)
class ZeroOp(OperatorSpec):
    kind = "zero"


@dataclass(frozen=True, eq=False)
class ScaledIdentity(OperatorSpec):
    """x ↦ αx."""

    alpha: float
    kind = "scaled_identity"

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise SpecError("alpha must be finite")
        object.__setattr__(self, "alpha", float(self.alpha))


@dataclass(frozen=True, eq=False)
class Affine(OperatorSpec):
    """x ↦ Mx + b, monotone up to the smallest eigenvalue of sym(M)."""

    M: np.ndarray
    b: np.ndarray
    kind = "affine"

    def __post_init__(self):
        M = _as_matrix(self.M, "M")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "b", as_vec(self.b, M.shape[0], "b"))

    @property
    def dim(self):
        return self.M.shape[0]


@dataclass(frozen=True, eq=False)
class SubdiffQuadratic(OperatorSpec):
    """Gradient of f(x) = ½xᵀQx + qᵀx with symmetric Q."""

    Q: np.ndarray
    q: np.ndarray
    kind = "subdiff_quadratic"

    def __post_init__(self):
        Q = _symmetric(self.Q, "Q")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "q", as_vec(self.q, Q.shape[0], "q"))

    @property
    def dim(self):
        return self.Q.shape[0]


@dataclass(frozen=True, eq=False)
class SubdiffL1(OperatorSpec):
    """Subdifferential of w‖x‖₁."""

    w: float
    kind = "subdiff_l1"

    def __post_init__(self):
        if not (math.isfinite(self.w) and self.w >= 0):
            raise SpecError("l1 weight must be finite and >= 0")
        object.__setattr__(self, "w", float(self.w))


@dataclass(frozen=True, eq=False)
class BoxIndicator(OperatorSpec):
    """Normal cone of the box [lo, hi]."""

    lo: np.ndarray
    hi: np.ndarray
    kind = "box"

    def __post_init__(self):
        lo = as_vec(self.lo, name="lo")
        hi = as_vec(self.hi, lo.size, "hi")
        if np.any(lo > hi):
            raise SpecError("box requires lo <= hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.size


@dataclass(frozen=True, eq=False)
class BallIndicator(OperatorSpec):
    """Normal cone of the centred Euclidean ball of the given radius."""

    radius: float
    kind = "ball"

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise SpecError("ball radius must be finite and > 0")
        object.__setattr__(self, "radius", float(self.radius))


@dataclass(frozen=True, eq=False)
class Shifted(OperatorSpec):
    """base + τ·Id; moves monotonicity between the two set-valued slots."""

    base: OperatorSpec
    tau: float
    kind = "shifted"

    def __post_init__(self):
        if not isinstance(self.base, OperatorSpec):
            raise SpecError("shifted base must be an OperatorSpec")
        if not math.isfinite(self.tau):
            raise SpecError("tau must be finite")
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def dim(self):
        return self.base.dim


def certify_modulus(spec):
    """Monotonicity constant α of `spec`.

    Matrix kinds use the smallest eigenvalue of the symmetric part; values
    within 1e-10 (relative) of zero are reported as exactly zero.
    """
    if isinstance(spec, (ZeroOp, SubdiffL1, BoxIndicator, BallIndicator)):
        return 0.0
    if isinstance(spec, ScaledIdentity):
        return spec.alpha
    if isinstance(spec, Affine):
        return _min_eig(0.5 * (spec.M + spec.M.T))
    if isinstance(spec, SubdiffQuadratic):
        return _min_eig(spec.Q)
    if isinstance(spec, Shifted):
        return certify_modulus(spec.base) + spec.tau
    raise SpecError(f"unknown operator spec {spec!r}")


# --------------------------------------------------------------------------
# cocoercive single-valued maps


class CocoerciveSpec:
    """Single-valued σ-cocoercive map; σ = inf means any σ > 0 works."""

    kind = "abstract"

    @property
    def dim(self):
        return None

    @cached_property
    def sigma(self):
        return certify_sigma(self)


@dataclass(frozen=True, eq=False)
class ZeroMap(CocoerciveSpec):
    kind = "zero"


@dataclass(frozen=True, eq=False)
class LinearPSD(CocoerciveSpec):
    """x ↦ Qx + q with Q symmetric positive semidefinite."""

    Q: np.ndarray
    q: np.ndarray
    kind = "linear_psd"

    def __post_init__(self):
        Q = _symmetric(self.Q, "Q")
        if _min_eig(Q) < 0:
            raise SpecError("cocoercive linear map needs a PSD matrix")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "q", as_vec(self.q, Q.shape[0], "q"))

    @property
    def dim(self):
        return self.Q.shape[0]


@dataclass(frozen=True, eq=False)
class HuberGrad(CocoerciveSpec):
    """Gradient of the separable Huber loss centred at p with threshold μ."""

    mu: float
    p: np.ndarray
    kind = "huber"

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise SpecError("huber threshold must be finite and > 0")
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "p", as_vec(self.p, name="p"))

    @property
    def dim(self):
        return self.p.size


def certify_sigma(spec):
    if isinstance(spec, ZeroMap):
        return math.inf
    if isinstance(spec, LinearPSD):
        hi = _max_eig(spec.Q)
        return math.inf if hi == 0.0 else 1.0 / hi
    if isinstance(spec, HuberGrad):
        return spec.mu
    raise SpecError(f"unknown cocoercive spec {spec!r}")


# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Problem:
    """Find x with 0 ∈ A(x) + B(x) + C(x)."""

    a: OperatorSpec
    b: OperatorSpec
    c: CocoerciveSpec
    dim: int

    def __post_init__(self):
        if not (isinstance(self.a, OperatorSpec) and isinstance(self.b, OperatorSpec)):
            raise SpecError("a and b must be OperatorSpecs")
        if not isinstance(self.c, CocoerciveSpec):
            raise SpecError("c must be a CocoerciveSpec")
        if int(self.dim) != self.dim or self.dim < 1:
            raise SpecError("dim must be a positive integer")
        object.__setattr__(self, "dim", int(self.dim))
        for name in ("a", "b", "c"):
            d = getattr(self, name).dim
            if d is not None and d != self.dim:
                raise DimensionMismatch(f"operator {name} has dim {d}, problem has {self.dim}")

    @property
    def alpha(self):
        return self.a.modulus

    @property
    def beta(self):
        return self.b.modulus

    @property
    def sigma(self):
        return self.c.sigma


class Regime(enum.Enum):
    NEUTRAL = "neutral"  # α + β = 0
    STRONG = "strong"    # α + β > 0


@dataclass(frozen=True)
class ParamPlan:
    """Validated step parameters; λ is derived as 1 + δ/γ.

    A plan with η ≥ η* only exists for certification experiments and must be
    built with ``certification_only=True``.
    """

    gamma: float
    delta: float
    eta: float
    eta_star: float
    regime: Regime
    certification_only: bool = False
    lam: float = field(init=False)

    def __post_init__(self):
        for name in ("gamma", "delta", "eta", "eta_star"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise SplittingError(f"plan {name} must be finite and > 0, got {v}")
            object.__setattr__(self, name, float(v))
        object.__setattr__(self, "regime", Regime(self.regime))
        object.__setattr__(self, "lam", 1.0 + self.delta / self.gamma)
        if self.eta >= self.eta_star and not self.certification_only:
            raise SplittingError(
                f"eta={self.eta} must be below eta*={self.eta_star} "
                "(pass certification_only=True for diagnostic plans)")

    @property
    def theta(self):
        """Conical averagedness constant η/η*."""
        return self.eta / self.eta_star
