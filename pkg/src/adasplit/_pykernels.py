"""Pure numpy implementation of the fixed-point loop.

Mirrors ``_kernels.pyx`` argument for argument; used when the compiled
extension is unavailable or explicitly disabled.
"""

import math

import numpy as np

CONVERGED, MAX_ITERS, DIVERGED = 0, 1, 2


def _resolve(low, x):
    kind, scale, mat, off, thr, lo, hi = low
    y = scale * x
    if kind == 0:
        return y
    if kind == 1:
        return mat @ y + off
    if kind == 2:
        return np.sign(y) * np.maximum(np.abs(y) - thr, 0.0)
    if kind == 3:
        return np.minimum(np.maximum(y, lo), hi)
    nrm = math.sqrt(float(y @ y))
    return y * (thr / nrm) if nrm > thr else y


def _forward(low, a):
    kind, mat, off, mu = low
    if kind == 0:
        return np.zeros_like(a)
    if kind == 1:
        return mat @ a + off
    return np.minimum(np.maximum((a - off) / mu, -1.0), 1.0)


def iterate(x0, low_a, low_b, low_c, steps, stop, thinning, rec, rec_n, resid, kkt):
    """Run x_{k+1} = T x_k, writing traces into the preallocated buffers.

    Returns ``(status, last_iteration, records_written)``.
    """
    gamma, delta, lam, eta = steps
    tol_resid, tol_kkt, max_iter, diverge = stop
    full, every = thinning
    x = np.array(x0, dtype=float)
    r0 = 0.0
    nrec = 0
    status = MAX_ITERS
    it = 0
    while True:
        a = _resolve(low_a, x)
        c = _forward(low_c, a)
        s = (1.0 - lam) * x + lam * a - delta * c
        b = _resolve(low_b, s)
        d = a - b
        nd = math.sqrt(float(d @ d))
        r = eta * nd
        g = (x - a) / gamma + (s - b) / delta + c
        k = math.sqrt(float(g @ g)) + nd / delta
        resid[it] = r
        kkt[it] = k
        if it == 0:
            r0 = r
        if r <= tol_resid * (1.0 + math.sqrt(float(x @ x))) and k <= tol_kkt:
            status = CONVERGED
        elif not math.isfinite(r) or (r0 > 0 and r > diverge * r0):
            status = DIVERGED
        elif it >= max_iter:
            status = MAX_ITERS
        else:
            status = -1
        if status != -1 or it <= full or (it - full) % every == 0:
            rec[nrec, 0] = x
            rec[nrec, 1] = a
            rec[nrec, 2] = s
            rec[nrec, 3] = b
            rec[nrec, 4] = c
            rec_n[nrec] = it
            nrec += 1
        if status != -1:
            return status, it, nrec
        x = x - eta * a + eta * b
        it += 1
