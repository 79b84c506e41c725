"""Wall-clock comparison of the compiled and pure-Python kernels."""

from __future__ import annotations

import time

from . import backend
from .engine import solve
from .params import plan_for
from .problems import gen

__all__ = ["CASES", "run_bench"]

# (tag, dim); fixed iteration counts so both backends do identical work
CASES = (("P-QUAD3", 2), ("P-L1", 8), ("P-BOX", 8), ("P-BALL", 32), ("P-QUAD3", 64))


def _time_one(problem, plan, name, max_iter, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        rep = solve(problem, plan, tol_resid=0.0, tol_kkt=0.0, max_iter=max_iter, backend=name)
        best = min(best, time.perf_counter() - t0)
    return best, rep.n_iter


def run_bench(repeats=5, max_iter=2000, seed=0, cases=CASES):
    """Best-of-`repeats` time per (case, backend); speedup is relative to python."""
    rows = []
    for tag, dim in cases:
        nb = gen(tag, dim, seed, oracle=False)
        plan = plan_for(nb.problem)
        times = {}
        for name in backend.available():
            times[name], iters = _time_one(nb.problem, plan, name, max_iter, repeats)
        for name, t in times.items():
            rows.append({"problem": tag, "dim": dim, "iters": iters, "backend": name,
                         "seconds": t, "speedup": times["python"] / t})
    return rows
