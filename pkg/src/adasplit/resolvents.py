"""Resolvents J_{γA} = (Id + γA)^{-1}, forward maps and graph membership.

All evaluators accept a single vector of shape ``(n,)`` or a batch of shape
``(m, n)``; operators act on the last axis.
"""

from __future__ import annotations

import math

import numpy as np

from .core import (
    Affine, BallIndicator, BoxIndicator, CocoerciveSpec, DimensionMismatch,
    HuberGrad, LinearPSD, OperatorSpec, ResolventDomainError, ScaledIdentity,
    Shifted, SpecError, SplittingError, SubdiffL1, SubdiffQuadratic, ZeroMap,
    ZeroOp,
)

__all__ = [
    "resolvent", "forward", "operator_value", "subdiff_contains_zero",
    "function_value", "smooth_value", "soft_threshold", "flatten_shift",
]

SOLVE_RESIDUAL_TOL = 1e-12


def _check_dim(spec, x):
    d = spec.dim
    if d is not None and x.shape[-1] != d:
        raise DimensionMismatch(f"{spec.kind} acts on dim {d}, got {x.shape[-1]}")


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def _linear_solve(mat, rhs):
    # rhs is (n,) or (m, n); solve mat @ a = rhs row by row
    sol = np.linalg.solve(mat, rhs.T).T
    res = np.linalg.norm(mat @ sol.T - rhs.T)
    if not res <= SOLVE_RESIDUAL_TOL * np.linalg.norm(rhs):
        raise SplittingError(f"linear solve residual {res:.3e} too large")
    return sol


def resolvent(spec, gamma, x):
    """Return the unique a with x - a ∈ γ·A(a).

    Requires ``gamma > 0`` and ``1 + gamma * spec.modulus > 0``.
    """
    if not isinstance(spec, OperatorSpec):
        raise SpecError(f"not an operator spec: {spec!r}")
    gamma = float(gamma)
    if not gamma > 0:
        raise ResolventDomainError(f"gamma must be > 0, got {gamma}")
    x = np.asarray(x, dtype=float)
    _check_dim(spec, x)
    if not 1.0 + gamma * spec.modulus > 0:
        raise ResolventDomainError(
            f"1 + gamma*alpha = {1.0 + gamma * spec.modulus:.6g} <= 0 for {spec.kind}")
    return _resolvent(spec, gamma, x)


def flatten_shift(spec):
    """Split nested shifts into (non-shifted base, total τ)."""
    tau = 0.0
    while isinstance(spec, Shifted):
        tau += spec.tau
        spec = spec.base
    return spec, tau


def _resolvent(spec, gamma, x):
    base, tau = flatten_shift(spec)
    # linear kinds absorb the shift into the system matrix, which keeps the
    # rule valid even when 1 + γτ ≤ 0 is compensated by the base modulus
    if isinstance(base, ZeroOp):
        return x / (1.0 + gamma * tau)
    if isinstance(base, ScaledIdentity):
        return x / (1.0 + gamma * (base.alpha + tau))
    if isinstance(base, (Affine, SubdiffQuadratic)):
        mat, off = (base.M, base.b) if isinstance(base, Affine) else (base.Q, base.q)
        n = base.dim
        return _linear_solve((1.0 + gamma * tau) * np.eye(n) + gamma * mat, x - gamma * off)
    # set-valued kinds have modulus 0, so k = 1 + γτ > 0 by the precondition;
    # J_{γ(A+τId)}(x) = J_{(γ/k)A}(x/k)
    k = 1.0 + gamma * tau
    g, y = gamma / k, x / k
    if isinstance(base, SubdiffL1):
        return soft_threshold(y, g * base.w)
    if isinstance(base, BoxIndicator):
        return np.clip(y, base.lo, base.hi)
    if isinstance(base, BallIndicator):
        nrm = np.linalg.norm(y, axis=-1, keepdims=True)
        return y * np.minimum(1.0, base.radius / np.maximum(nrm, 1e-300))
    raise SpecError(f"unknown operator spec {spec!r}")


def forward(spec, x):
    """Evaluate the cocoercive map C at `x`."""
    if not isinstance(spec, CocoerciveSpec):
        raise SpecError(f"not a cocoercive spec: {spec!r}")
    x = np.asarray(x, dtype=float)
    _check_dim(spec, x)
    if isinstance(spec, ZeroMap):
        return np.zeros_like(x)
    if isinstance(spec, LinearPSD):
        return x @ spec.Q.T + spec.q
    if isinstance(spec, HuberGrad):
        return np.clip((x - spec.p) / spec.mu, -1.0, 1.0)
    raise SpecError(f"unknown cocoercive spec {spec!r}")


def operator_value(spec, x):
    """A(x) for single-valued kinds; raises for set-valued ones."""
    x = np.asarray(x, dtype=float)
    _check_dim(spec, x)
    if isinstance(spec, ZeroOp):
        return np.zeros_like(x)
    if isinstance(spec, ScaledIdentity):
        return spec.alpha * x
    if isinstance(spec, Affine):
        return x @ spec.M.T + spec.b
    if isinstance(spec, SubdiffQuadratic):
        return x @ spec.Q.T + spec.q
    if isinstance(spec, Shifted):
        return operator_value(spec.base, x) + spec.tau * x
    raise SpecError(f"{spec.kind} is set-valued")


def subdiff_contains_zero(spec, x, residual_vec, tol):
    """Test ``residual_vec ∈ A(x)``, i.e. ``0 ∈ A(x) - residual_vec``, within `tol`.

    The graph is enlarged by `tol` in both arguments: a component of `x`
    within `tol` of a kink is allowed the whole subdifferential interval.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(residual_vec, dtype=float)
    if x.ndim != 1 or x.shape != v.shape:
        raise DimensionMismatch(f"x has shape {x.shape}, residual has {v.shape}")
    _check_dim(spec, x)
    if isinstance(spec, Shifted):
        return subdiff_contains_zero(spec.base, x, v - spec.tau * x, tol)
    if isinstance(spec, SubdiffL1):
        w = spec.w
        at_kink = np.abs(x) <= tol
        dist = np.where(at_kink,
                        np.maximum(np.abs(v) - w, 0.0),
                        np.abs(v - w * np.sign(x)))
        return bool(np.all(dist <= tol))
    if isinstance(spec, BoxIndicator):
        lo, hi = spec.lo, spec.hi
        if np.any(x < lo - tol) or np.any(x > hi + tol):
            return False
        at_lo = x <= lo + tol
        at_hi = x >= hi - tol
        # normal cone: v <= 0 at the lower face, v >= 0 at the upper face
        upper_ok = np.where(at_hi, True, v <= tol)
        lower_ok = np.where(at_lo, True, v >= -tol)
        return bool(np.all(upper_ok & lower_ok))
    if isinstance(spec, BallIndicator):
        r = spec.radius
        nx = np.linalg.norm(x)
        if nx > r + tol:
            return False
        if nx < r - tol:
            return bool(np.linalg.norm(v) <= tol)
        # distance from v to the ray {t·x/‖x‖ : t ≥ 0}
        u = x / nx if nx > 0 else v / max(np.linalg.norm(v), 1e-300)
        t = max(float(v @ u), 0.0)
        return bool(np.linalg.norm(v - t * u) <= tol)
    return bool(np.linalg.norm(operator_value(spec, x) - v) <= tol)


def function_value(spec, x):
    """f(x) for an operator that is the subdifferential of f (up to a constant)."""
    x = np.asarray(x, dtype=float)
    _check_dim(spec, x)
    if isinstance(spec, ZeroOp):
        return 0.0
    if isinstance(spec, ScaledIdentity):
        return 0.5 * spec.alpha * float(x @ x)
    if isinstance(spec, SubdiffQuadratic):
        return 0.5 * float(x @ spec.Q @ x) + float(spec.q @ x)
    if isinstance(spec, Affine):
        if not np.allclose(spec.M, spec.M.T):
            raise SpecError("non-symmetric affine map is not a gradient")
        return 0.5 * float(x @ spec.M @ x) + float(spec.b @ x)
    if isinstance(spec, SubdiffL1):
        return spec.w * float(np.abs(x).sum())
    if isinstance(spec, BoxIndicator):
        inside = np.all(x >= spec.lo) and np.all(x <= spec.hi)
        return 0.0 if inside else math.inf
    if isinstance(spec, BallIndicator):
        return 0.0 if np.linalg.norm(x) <= spec.radius else math.inf
    if isinstance(spec, Shifted):
        return function_value(spec.base, x) + 0.5 * spec.tau * float(x @ x)
    raise SpecError(f"unknown operator spec {spec!r}")


def smooth_value(spec, x):
    """h(x) whose gradient is the cocoercive map (up to a constant)."""
    x = np.asarray(x, dtype=float)
    _check_dim(spec, x)
    if isinstance(spec, ZeroMap):
        return 0.0
    if isinstance(spec, LinearPSD):
        return 0.5 * float(x @ spec.Q @ x) + float(spec.q @ x)
    if isinstance(spec, HuberGrad):
        r = np.abs(x - spec.p)
        mu = spec.mu
        return float(np.where(r <= mu, r * r / (2 * mu), r - mu / 2).sum())
    raise SpecError(f"unknown cocoercive spec {spec!r}")
