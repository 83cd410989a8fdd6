# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; arithmetic mirrors ``_kernels_py`` line for line."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, atan2, asinh, sinh

cnp.import_array()

cdef enum:
    EUCLIDEAN = 0
    SPHERE = 1
    HYPERBOLIC = 2


cdef inline double _inner3(int kind, double x0, double x1, double x2,
                           double y0, double y1, double y2) noexcept nogil:
    if kind == HYPERBOLIC:
        return x0 * y0 + x1 * y1 - x2 * y2
    return x0 * y0 + x1 * y1 + x2 * y2


cdef inline double _dist(int kind, const double* x, const double* y, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0, d, c0, c1, c2, dot
    if kind == SPHERE:
        c0 = x[1] * y[2] - x[2] * y[1]
        c1 = x[2] * y[0] - x[0] * y[2]
        c2 = x[0] * y[1] - x[1] * y[0]
        dot = x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
        return atan2(sqrt(c0 * c0 + c1 * c1 + c2 * c2), dot)
    if kind == HYPERBOLIC:
        c0 = y[0] - x[0]
        c1 = y[1] - x[1]
        c2 = y[2] - x[2]
        acc = c0 * c0 + c1 * c1 - c2 * c2
        if acc < 0.0:
            acc = 0.0
        return 2.0 * asinh(0.5 * sqrt(acc))
    for i in range(n):
        d = y[i] - x[i]
        acc += d * d
    return sqrt(acc)


cdef inline void _log(int kind, const double* q, const double* p, Py_ssize_t n,
                      double* out) noexcept nogil:
    cdef Py_ssize_t i
    cdef double half, sin_t, theta, scale, s, d, sinh_d
    for i in range(n):
        out[i] = p[i] - q[i]
    if kind == EUCLIDEAN:
        return
    if kind == SPHERE:
        half = 0.5 * (out[0] * out[0] + out[1] * out[1] + out[2] * out[2])
        for i in range(3):
            out[i] = out[i] + half * q[i]
        sin_t = sqrt(out[0] * out[0] + out[1] * out[1] + out[2] * out[2])
        theta = atan2(sin_t, 1.0 - half)
        if theta > 1e-8:
            scale = theta / sin_t
        else:
            scale = 1.0 + theta * theta / 6.0
    else:
        s = out[0] * out[0] + out[1] * out[1] - out[2] * out[2]
        if s < 0.0:
            s = 0.0
        d = 2.0 * asinh(0.5 * sqrt(s))
        for i in range(3):
            out[i] = out[i] - 0.5 * s * q[i]
        sinh_d = sinh(d)
        if d > 1e-8:
            scale = d / sinh_d
        else:
            scale = 1.0 - d * d / 6.0
    for i in range(3):
        out[i] = out[i] * scale


def dist_matrix(int kind, Q, P):
    cdef const double[:, ::1] q = np.ascontiguousarray(Q, dtype=np.float64)
    cdef const double[:, ::1] p = np.ascontiguousarray(P, dtype=np.float64)
    cdef Py_ssize_t i, j, m = q.shape[0], k = p.shape[0], D = q.shape[1]
    out = np.empty((m, k))
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(m):
            for j in range(k):
                o[i, j] = _dist(kind, &q[i, 0], &p[j, 0], D)
    return out


def log_batch(int kind, q, P):
    cdef const double[::1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef const double[:, ::1] pp = np.ascontiguousarray(np.atleast_2d(P), dtype=np.float64)
    cdef Py_ssize_t i, k = pp.shape[0]
    out = np.empty((k, qq.shape[0]))
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(k):
            _log(kind, &qq[0], &pp[i, 0], qq.shape[0], &o[i, 0])
    return out


def weighted_covariance(int kind, q, P, w, double a, frame):
    cdef const double[::1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef const double[:, ::1] pp = np.ascontiguousarray(np.atleast_2d(P), dtype=np.float64)
    cdef const double[::1] ww = np.ascontiguousarray(w, dtype=np.float64)
    cdef const double[:, ::1] E = np.ascontiguousarray(frame, dtype=np.float64)
    cdef Py_ssize_t i, r, s, t, k = pp.shape[0], n = E.shape[0], D = qq.shape[0]
    cdef double wi, d, acc
    cdef double buf[16]
    cdef double comp[16]
    if D > 16 or n > 16:
        raise ValueError("compiled kernel supports ambient dimension <= 16")
    out = np.zeros((n, n))
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(k):
            _log(kind, &qq[0], &pp[i, 0], D, buf)
            wi = ww[i]
            if a != 0.0:
                if kind == HYPERBOLIC:
                    d = buf[0] * buf[0] + buf[1] * buf[1] - buf[2] * buf[2]
                else:
                    d = 0.0
                    for t in range(D):
                        d += buf[t] * buf[t]
                if d < 0.0:
                    d = 0.0
                d = sqrt(d)
                if d > 0.0:
                    wi = wi * (1.0 - a / d) * (1.0 - a / d)
                else:
                    wi = 0.0
            for r in range(n):
                if kind == HYPERBOLIC:
                    comp[r] = _inner3(kind, buf[0], buf[1], buf[2],
                                      E[r, 0], E[r, 1], E[r, 2])
                else:
                    acc = 0.0
                    for t in range(D):
                        acc += buf[t] * E[r, t]
                    comp[r] = acc
            for r in range(n):
                for s in range(n):
                    o[r, s] += wi * comp[r] * comp[s]
    return out


def covariance_moments(int kind, q, P, double a, frame):
    cdef const double[::1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef const double[:, ::1] pp = np.ascontiguousarray(np.atleast_2d(P), dtype=np.float64)
    cdef const double[:, ::1] E = np.ascontiguousarray(frame, dtype=np.float64)
    cdef Py_ssize_t i, r, s, t, k = pp.shape[0], n = E.shape[0], D = qq.shape[0]
    cdef double wi, d, acc, tr, tr_sum = 0.0, tr_sq = 0.0
    cdef double buf[16]
    cdef double comp[16]
    if D > 16 or n > 16:
        raise ValueError("compiled kernel supports ambient dimension <= 16")
    out = np.zeros((n, n))
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(k):
            _log(kind, &qq[0], &pp[i, 0], D, buf)
            if kind == HYPERBOLIC:
                d = buf[0] * buf[0] + buf[1] * buf[1] - buf[2] * buf[2]
            else:
                d = 0.0
                for t in range(D):
                    d += buf[t] * buf[t]
            if d < 0.0:
                d = 0.0
            d = sqrt(d)
            wi = 1.0
            if a != 0.0:
                if d > 0.0:
                    wi = (1.0 - a / d) * (1.0 - a / d)
                else:
                    wi = 0.0
            tr = wi * d * d
            tr_sum += tr
            tr_sq += tr * tr
            for r in range(n):
                if kind == HYPERBOLIC:
                    comp[r] = _inner3(kind, buf[0], buf[1], buf[2],
                                      E[r, 0], E[r, 1], E[r, 2])
                else:
                    acc = 0.0
                    for t in range(D):
                        acc += buf[t] * E[r, t]
                    comp[r] = acc
            for r in range(n):
                for s in range(n):
                    o[r, s] += wi * comp[r] * comp[s]
    return out, tr_sum, tr_sq


def pair_trace_sums(int kind, X, double a):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t i, j, k = x.shape[0], D = x.shape[1]
    rows_sq = np.zeros(k)
    rows_amp = np.zeros(k)
    cdef double[::1] rs = rows_sq
    cdef double[::1] ra = rows_amp
    cdef double d, sq, amp, ss_sq = 0.0, ss_amp = 0.0
    with nogil:
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                d = _dist(kind, &x[i, 0], &x[j, 0], D)
                sq = d * d
                amp = (d - a) * (d - a)
                rs[i] += sq
                ra[i] += amp
                ss_sq += sq * sq
                ss_amp += amp * amp
    return rows_sq, rows_amp, ss_sq, ss_amp


def log_chord_ratios(int kind, Q, P1, P2):
    cdef const double[:, ::1] q = np.ascontiguousarray(Q, dtype=np.float64)
    cdef const double[:, ::1] p1 = np.ascontiguousarray(P1, dtype=np.float64)
    cdef const double[:, ::1] p2 = np.ascontiguousarray(P2, dtype=np.float64)
    cdef Py_ssize_t i, t, N = q.shape[0], D = q.shape[1]
    cdef double b1[16]
    cdef double b2[16]
    cdef double num
    if D > 16:
        raise ValueError("compiled kernel supports ambient dimension <= 16")
    out = np.empty(N)
    cdef double[::1] o = out
    with nogil:
        for i in range(N):
            _log(kind, &q[i, 0], &p1[i, 0], D, b1)
            _log(kind, &q[i, 0], &p2[i, 0], D, b2)
            for t in range(D):
                b1[t] = b1[t] - b2[t]
            if kind == HYPERBOLIC:
                num = b1[0] * b1[0] + b1[1] * b1[1] - b1[2] * b1[2]
            else:
                num = 0.0
                for t in range(D):
                    num += b1[t] * b1[t]
            if num < 0.0:
                num = 0.0
            o[i] = sqrt(num) / _dist(kind, &p1[i, 0], &p2[i, 0], D)
    return out
