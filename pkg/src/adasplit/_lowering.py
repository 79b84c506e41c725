"""Flatten operator specs into the plain arrays consumed by the kernels.

A lowered resolvent computes ``a = P(K(scale * x) + off)`` where the
linear part is only present for matrix kinds and ``P`` is one of identity,
soft-thresholding, clamping or ball projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Affine, BallIndicator, BoxIndicator, HuberGrad, LinearPSD, ScaledIdentity,
    SpecError, SubdiffL1, SubdiffQuadratic, ZeroMap, ZeroOp,
)
from .resolvents import flatten_shift

IDENT, LINEAR, SOFT, CLIP, BALL = range(5)
FWD_ZERO, FWD_LINEAR, FWD_HUBER = range(3)


@dataclass(frozen=True)
class LoweredResolvent:
    kind: int
    scale: float
    mat: np.ndarray
    off: np.ndarray
    thr: float
    lo: np.ndarray
    hi: np.ndarray

    def args(self):
        return (self.kind, self.scale, self.mat, self.off, self.thr, self.lo, self.hi)


@dataclass(frozen=True)
class LoweredForward:
    kind: int
    mat: np.ndarray
    off: np.ndarray
    mu: float

    def args(self):
        return (self.kind, self.mat, self.off, self.mu)


def lower_resolvent(spec, gamma, n):
    base, tau = flatten_shift(spec)
    eye = np.eye(n)
    zeros = np.zeros(n)
    empty = np.zeros((n, n))

    def make(kind, scale=1.0, mat=empty, off=zeros, thr=0.0, lo=zeros, hi=zeros):
        return LoweredResolvent(kind, float(scale), np.ascontiguousarray(mat, dtype=float),
                                np.ascontiguousarray(off, dtype=float), float(thr),
                                np.ascontiguousarray(lo, dtype=float),
                                np.ascontiguousarray(hi, dtype=float))

    if isinstance(base, ZeroOp):
        return make(IDENT, 1.0 / (1.0 + gamma * tau))
    if isinstance(base, ScaledIdentity):
        return make(IDENT, 1.0 / (1.0 + gamma * (base.alpha + tau)))
    if isinstance(base, (Affine, SubdiffQuadratic)):
        mat, off = (base.M, base.b) if isinstance(base, Affine) else (base.Q, base.q)
        inv = np.linalg.inv((1.0 + gamma * tau) * eye + gamma * mat)
        return make(LINEAR, 1.0, inv, -gamma * (inv @ off))
    k = 1.0 + gamma * tau
    if isinstance(base, SubdiffL1):
        return make(SOFT, 1.0 / k, thr=gamma * base.w / k)
    if isinstance(base, BoxIndicator):
        return make(CLIP, 1.0 / k, lo=base.lo, hi=base.hi)
    if isinstance(base, BallIndicator):
        return make(BALL, 1.0 / k, thr=base.radius)
    raise SpecError(f"cannot lower {spec!r}")


def lower_forward(spec, n):
    zeros = np.zeros(n)
    if isinstance(spec, ZeroMap):
        return LoweredForward(FWD_ZERO, np.zeros((n, n)), zeros, 1.0)
    if isinstance(spec, LinearPSD):
        return LoweredForward(FWD_LINEAR, np.ascontiguousarray(spec.Q),
                              np.ascontiguousarray(spec.q), 1.0)
    if isinstance(spec, HuberGrad):
        return LoweredForward(FWD_HUBER, np.zeros((n, n)), np.ascontiguousarray(spec.p), spec.mu)
    raise SpecError(f"cannot lower {spec!r}")
