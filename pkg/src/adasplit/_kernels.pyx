# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled fixed-point loop; same contract as ``_pykernels.iterate``."""

from libc.math cimport sqrt, fabs, isfinite

import numpy as np

cdef enum:
    CONVERGED = 0
    MAX_ITERS = 1
    DIVERGED = 2


cdef inline void _resolve(int kind, double scale, const double[:, ::1] mat,
                          const double[::1] off, double thr,
                          const double[::1] lo, const double[::1] hi,
                          double[::1] x, double[::1] work, double[::1] out,
                          Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc, v, nrm
    for i in range(n):
        work[i] = scale * x[i]
    if kind == 0:
        for i in range(n):
            out[i] = work[i]
    elif kind == 1:
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc = acc + mat[i, j] * work[j]
            out[i] = acc + off[i]
    elif kind == 2:
        for i in range(n):
            v = work[i]
            if v > thr:
                out[i] = v - thr
            elif v < -thr:
                out[i] = v + thr
            else:
                out[i] = 0.0
    elif kind == 3:
        for i in range(n):
            v = work[i]
            if v < lo[i]:
                v = lo[i]
            if v > hi[i]:
                v = hi[i]
            out[i] = v
    else:
        acc = 0.0
        for i in range(n):
            acc = acc + work[i] * work[i]
        nrm = sqrt(acc)
        if nrm > thr:
            for i in range(n):
                out[i] = work[i] * (thr / nrm)
        else:
            for i in range(n):
                out[i] = work[i]


cdef inline void _forward(int kind, const double[:, ::1] mat, const double[::1] off,
                          double mu, double[::1] a, double[::1] out,
                          Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc, v
    if kind == 0:
        for i in range(n):
            out[i] = 0.0
    elif kind == 1:
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc = acc + mat[i, j] * a[j]
            out[i] = acc + off[i]
    else:
        for i in range(n):
            v = (a[i] - off[i]) / mu
            if v > 1.0:
                v = 1.0
            elif v < -1.0:
                v = -1.0
            out[i] = v


def iterate(x0, low_a, low_b, low_c, steps, stop, thinning,
            double[:, :, ::1] rec, long[::1] rec_n, double[::1] resid, double[::1] kkt):
    cdef int ak = low_a[0], bk = low_b[0], ck = low_c[0]
    cdef double a_scale = low_a[1], b_scale = low_b[1]
    cdef const double[:, ::1] a_mat = low_a[2]
    cdef const double[::1] a_off = low_a[3]
    cdef double a_thr = low_a[4]
    cdef const double[::1] a_lo = low_a[5]
    cdef const double[::1] a_hi = low_a[6]
    cdef const double[:, ::1] b_mat = low_b[2]
    cdef const double[::1] b_off = low_b[3]
    cdef double b_thr = low_b[4]
    cdef const double[::1] b_lo = low_b[5]
    cdef const double[::1] b_hi = low_b[6]
    cdef const double[:, ::1] c_mat = low_c[1]
    cdef const double[::1] c_off = low_c[2]
    cdef double c_mu = low_c[3]

    cdef double gamma = steps[0], delta = steps[1], lam = steps[2], eta = steps[3]
    cdef double tol_resid = stop[0], tol_kkt = stop[1], diverge = stop[3]
    cdef long max_iter = stop[2]
    cdef long full = thinning[0], every = thinning[1]

    cdef double[::1] x = np.array(x0, dtype=float)
    cdef Py_ssize_t n = x.shape[0]
    cdef double[::1] a = np.empty(n)
    cdef double[::1] s = np.empty(n)
    cdef double[::1] b = np.empty(n)
    cdef double[::1] c = np.empty(n)
    cdef double[::1] work = np.empty(n)

    cdef Py_ssize_t i
    cdef long it = 0, nrec = 0
    cdef int status
    cdef double r0 = 0.0, r, nd, ng, nx, d, g

    with nogil:
        while True:
            _resolve(ak, a_scale, a_mat, a_off, a_thr, a_lo, a_hi, x, work, a, n)
            _forward(ck, c_mat, c_off, c_mu, a, c, n)
            for i in range(n):
                s[i] = (1.0 - lam) * x[i] + lam * a[i] - delta * c[i]
            _resolve(bk, b_scale, b_mat, b_off, b_thr, b_lo, b_hi, s, work, b, n)
            nd = 0.0
            ng = 0.0
            nx = 0.0
            for i in range(n):
                d = a[i] - b[i]
                nd = nd + d * d
                g = (x[i] - a[i]) / gamma + (s[i] - b[i]) / delta + c[i]
                ng = ng + g * g
                nx = nx + x[i] * x[i]
            nd = sqrt(nd)
            r = eta * nd
            resid[it] = r
            kkt[it] = sqrt(ng) + nd / delta
            if it == 0:
                r0 = r
            if r <= tol_resid * (1.0 + sqrt(nx)) and kkt[it] <= tol_kkt:
                status = CONVERGED
            elif not isfinite(r) or (r0 > 0 and r > diverge * r0):
                status = DIVERGED
            elif it >= max_iter:
                status = MAX_ITERS
            else:
                status = -1
            if status != -1 or it <= full or (it - full) % every == 0:
                for i in range(n):
                    rec[nrec, 0, i] = x[i]
                    rec[nrec, 1, i] = a[i]
                    rec[nrec, 2, i] = s[i]
                    rec[nrec, 3, i] = b[i]
                    rec[nrec, 4, i] = c[i]
                rec_n[nrec] = it
                nrec += 1
            if status != -1:
                break
            for i in range(n):
                x[i] = (x[i] - eta * a[i]) + eta * b[i]
            it += 1
    return status, it, nrec
