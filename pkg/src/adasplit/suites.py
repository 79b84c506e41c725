"""Seeded property suites over the checks in :mod:`adasplit.certify`.

Each suite returns a `SuiteResult` whose ``worst`` is the largest
scale-normalised violation seen (≤ 0 or ≤ tolerance means sound) and whose
``violation`` holds enough of the offending instance to reproduce it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import certify
from .core import (
    BallIndicator, BoxIndicator, HuberGrad, LinearPSD, Regime, ScaledIdentity, Shifted,
    SplittingError, SubdiffL1, SubdiffQuadratic, ZeroMap, ZeroOp,
)
from .params import delta_range, gamma_threshold, plan_neutral, plan_strong
from .problems import TAGS, gen, random_spd
from .resolvents import forward, resolvent

__all__ = [
    "SuiteResult", "SUITES", "IDENTITY_TOL", "CONICAL_TOL", "AGREE_TOL", "COCO_TOL",
    "run_suite", "identity_suite", "conical_suite", "cocoercive_suite", "existence_suite",
    "random_plan", "conical_pairs",
]

IDENTITY_TOL = 1e-10
CONICAL_TOL = 1e-9
AGREE_TOL = 1e-12
COCO_TOL = 1e-9
CONICAL_PLANS = 50


@dataclass
class SuiteResult:
    suite: str
    samples: int
    worst: float
    tol: float
    passed: bool
    violation: dict | None = None
    details: dict = field(default_factory=dict)


def _logu(rng, lo, hi, size=None):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


# --------------------------------------------------------------------------


def identity_suite(samples=10_000, seed=0, dim=5):
    rng = np.random.default_rng(seed)
    vecs = rng.standard_normal((4, samples, dim)) * _logu(rng, 0.1, 10.0, (4, samples, 1))
    par = _logu(rng, 0.1, 10.0, (samples, 5))
    errs = np.empty(samples)
    for i in range(samples):
        a, b, c, d = vecs[:, i]
        lhs, rhs = certify.identity_sides(a, b, c, d, *par[i])
        errs[i] = float(abs(lhs[0] - rhs[0]))
    scale = certify.identity_scale(*vecs)
    ratio = errs / scale
    k = int(np.argmax(ratio))
    worst = float(ratio[k])
    where = {"index": k, "seed": seed, "params(eta,nu,lam,delta,sigma)": par[k].tolist(),
             "a": vecs[0, k].tolist(), "b": vecs[1, k].tolist(),
             "c": vecs[2, k].tolist(), "d": vecs[3, k].tolist(), "error": float(errs[k])}
    ok = worst <= IDENTITY_TOL
    return SuiteResult("lemma31", samples, worst, IDENTITY_TOL, ok, None if ok else where)


# --------------------------------------------------------------------------


def random_plan(rng, problem, regime):
    """A random feasible plan for `problem`, away from the feasibility boundary."""
    alpha, beta, sigma = problem.alpha, problem.beta, problem.sigma
    frac = rng.uniform(0.05, 0.99)
    q = 0.0 if math.isinf(sigma) else 1.0 / (4.0 * sigma)
    if regime is Regime.NEUTRAL:
        bound = max(-2.0 * alpha, -alpha + q)
        inv_g = bound + _logu(rng, 0.02, 5.0) * max(1.0, abs(bound))
        return plan_neutral(alpha, beta, sigma, 1.0 / inv_g, frac)
    g0 = gamma_threshold(alpha, beta, sigma)
    inv_g = g0 + _logu(rng, 0.02, 5.0) * max(1.0, g0)
    rg = delta_range(alpha, beta, sigma, 1.0 / inv_g)
    inv_d = rg.inv_delta_lo + rng.uniform(0.05, 0.95) * (rg.inv_delta_hi - rg.inv_delta_lo)
    return plan_strong(alpha, beta, sigma, 1.0 / inv_g, 1.0 / inv_d, frac)


def conical_pairs(rng, dim, count, centre=None):
    """Pairs at mixed scales, half of them close together."""
    s = _logu(rng, 0.1, 10.0, (count, 1))
    x = s * rng.standard_normal((count, dim))
    y = s * rng.standard_normal((count, dim))
    near = rng.random(count) < 0.5
    y[near] = x[near] + 1e-2 * s[near] * rng.standard_normal((near.sum(), dim))
    if centre is not None:
        x, y = x + centre, y + centre
    return x, y


def _conical_one(config, x, y):
    r = certify.check_conical_batch(config, x, y)
    sc = r["scale"]
    m = r["margin"] / sc
    e = r["expansion"] / sc
    agree = (np.abs(r["margin"] - r["specialized_margin"]) / sc
             if "specialized_margin" in r else np.zeros_like(m))
    return m, e, agree, r


def conical_suite(samples=1000, seed=0, plans=CONICAL_PLANS, config=None):
    """Averagedness inequality on random valid plans, or on one given `config`.

    With a given config (possibly with η ≥ η*), the suite also searches
    for expansive pairs: for a valid plan T is averaged hence nonexpansive,
    so an expansive pair shows the guarantee has been lost.
    """
    rng = np.random.default_rng(seed)
    worst = {"margin": -math.inf, "expansion": -math.inf, "agree": 0.0}
    violation = None
    configs = []
    if config is not None:
        configs.append(config)
    else:
        for i in range(plans):
            tag = TAGS[i % len(TAGS)]
            regime = Regime.STRONG if (i // len(TAGS)) % 2 == 0 else Regime.NEUTRAL
            nb = gen(tag, int(rng.integers(1, 7)), seed * 1000 + i, regime.value, oracle=False)
            configs.append(certify.ProblemConfig(nb.problem, random_plan(rng, nb.problem, regime)))
    for idx, cfg in enumerate(configs):
        x, y = conical_pairs(rng, cfg.problem.dim, samples)
        m, e, agree, _ = _conical_one(cfg, x, y)
        bad = (m > CONICAL_TOL) | (e > CONICAL_TOL) | (agree > AGREE_TOL)
        worst["margin"] = max(worst["margin"], float(m.max()))
        worst["expansion"] = max(worst["expansion"], float(e.max()))
        worst["agree"] = max(worst["agree"], float(agree.max()))
        if violation is None and bad.any():
            k = int(np.argmax(bad))
            p = cfg.plan
            violation = {"config": idx, "seed": seed, "gamma": p.gamma, "delta": p.delta,
                         "eta": p.eta, "eta_star": p.eta_star, "x": x[k].tolist(),
                         "y": y[k].tolist(), "margin/scale": float(m[k]),
                         "expansion/scale": float(e[k]), "agreement": float(agree[k])}
    worst_all = max(worst["margin"], worst["expansion"])
    return SuiteResult("conical", samples * len(configs), worst_all, CONICAL_TOL,
                       violation is None, violation, {"plans": len(configs), **worst})


# --------------------------------------------------------------------------


def _random_spec(rng, n):
    k = int(rng.integers(0, 7))
    if k == 0:
        return ZeroOp()
    if k == 1:
        return ScaledIdentity(rng.uniform(-0.5, 3.0))
    if k == 2:
        return SubdiffQuadratic(random_spd(rng, n, 0.1, 5.0), rng.standard_normal(n))
    if k == 3:
        return SubdiffL1(rng.uniform(0.0, 2.0))
    if k == 4:
        lo = -rng.uniform(0.1, 2.0, n)
        return BoxIndicator(lo, lo + rng.uniform(0.0, 3.0, n))
    if k == 5:
        return BallIndicator(rng.uniform(0.1, 3.0))
    return Shifted(SubdiffL1(rng.uniform(0.0, 2.0)), rng.uniform(-1.0, 1.0))


def _random_map(rng, n):
    k = int(rng.integers(0, 3))
    if k == 0:
        return ZeroMap()
    if k == 1:
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        eig = rng.uniform(0.0, 4.0, n)
        return LinearPSD((q * eig) @ q.T, rng.standard_normal(n))
    return HuberGrad(rng.uniform(0.1, 3.0), rng.standard_normal(n))


def cocoercive_suite(samples=1000, seed=0):
    """Resolvents are (1 + γα)-cocoercive and forward maps σ-cocoercive."""
    rng = np.random.default_rng(seed)
    worst, violation = -math.inf, None
    batch = 50
    for i in range(max(1, samples // batch)):
        n = int(rng.integers(1, 6))
        spec = _random_spec(rng, n)
        alpha = spec.modulus
        gmax = 10.0 if alpha >= 0 else min(10.0, 0.9 / -alpha)
        gamma = rng.uniform(0.05, gmax)
        x, y = conical_pairs(rng, n, batch)
        jx, jy = resolvent(spec, gamma, x), resolvent(spec, gamma, y)
        sc = certify.pair_scale(x, y)
        dj = jx - jy
        gap = (1 + gamma * alpha) * np.sum(dj * dj, -1) - np.sum((x - y) * dj, -1)
        cmap = _random_map(rng, n)
        sigma = cmap.sigma
        dc = forward(cmap, x) - forward(cmap, y)
        gap_c = (np.zeros(batch) if math.isinf(sigma)
                 else sigma * np.sum(dc * dc, -1) - np.sum((x - y) * dc, -1))
        r = np.maximum(gap, gap_c) / sc
        worst = max(worst, float(r.max()))
        if violation is None and r.max() > COCO_TOL:
            k = int(np.argmax(r))
            violation = {"block": i, "seed": seed, "spec": repr(spec), "gamma": gamma,
                         "map": repr(cmap), "x": x[k].tolist(), "y": y[k].tolist(),
                         "gap/scale": float(r[k])}
    return SuiteResult("cocoercive", max(1, samples // batch) * batch, worst, COCO_TOL,
                       violation is None, violation)


# --------------------------------------------------------------------------


def existence_samples(rng, samples):
    alpha = rng.uniform(-2.0, 2.0, samples)
    beta = -alpha + _logu(rng, 1e-3, 3.0, samples)
    sigma = _logu(rng, 0.05, 20.0, samples)
    sigma[rng.random(samples) < 0.1] = math.inf
    inv_g = _logu(rng, 0.01, 20.0, samples)
    q = np.where(np.isinf(sigma), 0.0, 1.0 / (4.0 * np.where(np.isinf(sigma), 1.0, sigma)))
    disc = np.abs((alpha + beta) * (inv_g + alpha - q))
    centred = inv_g + 2 * alpha + rng.uniform(-3.0, 3.0, samples) * np.sqrt(disc)
    inv_d = np.where(rng.random(samples) < 0.5, _logu(rng, 0.01, 20.0, samples), centred)
    inv_d = np.where(inv_d > 0, inv_d, _logu(rng, 0.01, 20.0, samples))
    return alpha, beta, sigma, 1.0 / inv_g, 1.0 / inv_d


def existence_suite(samples=10_000, seed=0, band=1e-10):
    """Direct η* > 0 test against the γ₀ / interval characterisation."""
    rng = np.random.default_rng(seed)
    cols = existence_samples(rng, samples)
    disagree = 0
    banded = 0
    positives = 0
    violation = None
    for i in range(samples):
        args = tuple(float(c[i]) for c in cols)
        direct, via, in_band = certify.existence_agreement(*args, band=band)
        if in_band:
            banded += 1
            continue
        positives += direct
        if direct != via:
            disagree += 1
            if violation is None:
                violation = dict(zip(("alpha", "beta", "sigma", "gamma", "delta"), args),
                                 direct=direct, interval=via, seed=seed, index=i)
    return SuiteResult("lemma43", samples, float(disagree), 0.0, disagree == 0, violation,
                       {"banded": banded, "feasible": positives})


SUITES = {
    "lemma31": identity_suite,
    "conical": conical_suite,
    "cocoercive": cocoercive_suite,
    "lemma43": existence_suite,
}


def run_suite(name, samples=None, seed=0, **kw):
    if name not in SUITES:
        raise SplittingError(f"unknown suite {name!r}; expected one of {sorted(SUITES)}")
    fn = SUITES[name]
    return fn(seed=seed, **kw) if samples is None else fn(samples=samples, seed=seed, **kw)
