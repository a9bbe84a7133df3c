# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled scalar kernels; see ``_kernels_py`` for the reference semantics."""

import numpy as np

from libc.math cimport sqrt, sin, cos, tan, copysign, INFINITY, M_PI_2
from libcpp.vector cimport vector

cdef double INF = INFINITY
cdef double HALF_PI = M_PI_2


cdef object _to_array(vector[double]& lo, vector[double]& hi):
    cdef Py_ssize_t k = lo.size(), i
    out = np.empty((k, 2))
    cdef double[:, ::1] o = out
    for i in range(k):
        o[i, 0] = lo[i]
        o[i, 1] = hi[i]
    return out


cdef void _intersect(vector[double]& alo, vector[double]& ahi,
                     vector[double]& blo, vector[double]& bhi,
                     vector[double]& olo, vector[double]& ohi) noexcept nogil:
    cdef size_t i = 0, j = 0
    cdef double lo, hi
    olo.clear()
    ohi.clear()
    while i < alo.size() and j < blo.size():
        lo = alo[i] if alo[i] > blo[j] else blo[j]
        hi = ahi[i] if ahi[i] < bhi[j] else bhi[j]
        if hi > lo:
            olo.push_back(lo)
            ohi.push_back(hi)
        if ahi[i] < bhi[j]:
            i += 1
        else:
            j += 1


def intersect_intervals(a, b):
    cdef const double[:, :] av = np.ascontiguousarray(a, dtype=float).reshape(-1, 2)
    cdef const double[:, :] bv = np.ascontiguousarray(b, dtype=float).reshape(-1, 2)
    cdef vector[double] alo, ahi, blo, bhi, olo, ohi
    cdef Py_ssize_t i
    for i in range(av.shape[0]):
        alo.push_back(av[i, 0])
        ahi.push_back(av[i, 1])
    for i in range(bv.shape[0]):
        blo.push_back(bv[i, 0])
        bhi.push_back(bv[i, 1])
    _intersect(alo, ahi, blo, bhi, olo, ohi)
    return _to_array(olo, ohi)


cdef void _quadratic_rows(double a2, double a1, double a0,
                          vector[double]& lo, vector[double]& hi) noexcept nogil:
    cdef double root, disc, q, r1, r2, tmp
    lo.clear()
    hi.clear()
    if a2 == 0.0:
        if a1 == 0.0:
            if a0 >= 0.0:
                lo.push_back(0.0)
                hi.push_back(INF)
            return
        root = -a0 / a1
        if a1 > 0.0:
            lo.push_back(root if root > 0.0 else 0.0)
            hi.push_back(INF)
        elif root > 0.0:
            lo.push_back(0.0)
            hi.push_back(root)
        return
    disc = a1 * a1 - 4.0 * a2 * a0
    if disc < 0.0:
        if a2 > 0.0:
            lo.push_back(0.0)
            hi.push_back(INF)
        return
    q = -0.5 * (a1 + copysign(sqrt(disc), a1))
    if q == 0.0:
        r1 = 0.0
        r2 = 0.0
    else:
        r1 = q / a2
        r2 = a0 / q
        if r1 > r2:
            tmp = r1
            r1 = r2
            r2 = tmp
    if a2 > 0.0:
        if r1 > 0.0:
            lo.push_back(0.0)
            hi.push_back(r1)
        lo.push_back(r2 if r2 > 0.0 else 0.0)
        hi.push_back(INF)
        return
    if r2 <= 0.0:
        return
    lo.push_back(r1 if r1 > 0.0 else 0.0)
    hi.push_back(r2)


def quadratic_nonneg(double a2, double a1, double a0):
    cdef vector[double] lo, hi
    _quadratic_rows(a2, a1, a0, lo, hi)
    return _to_array(lo, hi)


def quadratic_region(a2, a1, a0):
    cdef const double[::1] A2 = np.ascontiguousarray(a2, dtype=float)
    cdef const double[::1] A1 = np.ascontiguousarray(a1, dtype=float)
    cdef const double[::1] A0 = np.ascontiguousarray(a0, dtype=float)
    cdef vector[double] rlo, rhi, qlo, qhi, olo, ohi
    cdef Py_ssize_t j, bad = -1
    rlo.push_back(0.0)
    rhi.push_back(INF)
    with nogil:
        for j in range(A2.shape[0]):
            _quadratic_rows(A2[j], A1[j], A0[j], qlo, qhi)
            if qlo.size() == 1 and qlo[0] == 0.0 and qhi[0] == INF:
                continue
            _intersect(rlo, rhi, qlo, qhi, olo, ohi)
            rlo.swap(olo)
            rhi.swap(ohi)
            if rlo.size() == 0:
                bad = j
                break
    return _to_array(rlo, rhi), bad


cdef inline double _value_t(double* x, double r, double c, double t) noexcept nogil:
    cdef double g1, g2, ct
    if t == INF:
        g1 = r
        g2 = 0.0
    else:
        ct = c * t
        g1 = r * sqrt(ct / (1.0 + ct))
        g2 = r / sqrt(1.0 + ct)
    return (g1 * g1 * x[0] + g1 * g2 * x[1] + g2 * g2 * x[2]
            + g1 * x[3] + g2 * x[4] + x[5])


cdef inline double _value_theta(double* x, double r, double th) noexcept nogil:
    cdef double g1 = r * sin(th)
    cdef double g2 = r * cos(th) if th < HALF_PI else 0.0
    return (g1 * g1 * x[0] + g1 * g2 * x[1] + g2 * g2 * x[2]
            + g1 * x[3] + g2 * x[4] + x[5])


cdef inline double _theta_to_t(double th, double c) noexcept nogil:
    cdef double tn
    if th >= HALF_PI:
        return INF
    tn = tan(th)
    return tn * tn / c


cdef double _refine(double* x, double r, double c, double lo, double hi,
                    double rtol, int maxiter) noexcept nogil:
    cdef bint flo = _value_theta(x, r, lo) >= 0.0
    cdef double mid, tlo, thi
    cdef int it
    for it in range(40):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return _theta_to_t(mid, c)
        if (_value_theta(x, r, mid) >= 0.0) == flo:
            lo = mid
        else:
            hi = mid
    tlo = _theta_to_t(lo, c)
    thi = _theta_to_t(hi, c)
    if thi == INF:
        return _theta_to_t(0.5 * (lo + hi), c)
    flo = _value_t(x, r, c, tlo) >= 0.0
    if (_value_t(x, r, c, thi) >= 0.0) == flo:
        return 0.5 * (tlo + thi)
    for it in range(maxiter):
        mid = 0.5 * (tlo + thi)
        if thi - tlo <= rtol * thi or mid <= tlo or mid >= thi:
            break
        if (_value_t(x, r, c, mid) >= 0.0) == flo:
            tlo = mid
        else:
            thi = mid
    return 0.5 * (tlo + thi)


def fslice_value(x, double r, double c, double t):
    cdef double buf[6]
    cdef int i
    for i in range(6):
        buf[i] = x[i]
    return _value_t(buf, r, c, t)


def theta_to_t(double th, double c):
    return _theta_to_t(th, c)


def refine_root(x, double r, double c, double lo, double hi,
                double rtol=1e-12, int maxiter=200):
    cdef double buf[6]
    cdef int i
    for i in range(6):
        buf[i] = x[i]
    return _refine(buf, r, c, lo, hi, rtol, maxiter)


cdef bint _level_set(double* x, double r, double c, const double* th, Py_ssize_t m,
                     vector[double]& lo, vector[double]& hi) noexcept nogil:
    """Fill the level set; returns True when the constraint holds at every probe."""
    cdef Py_ssize_t i
    cdef bint prev, cur, all_nonneg = True
    cdef double start = 0.0, root
    cdef bint open_ = False
    lo.clear()
    hi.clear()
    prev = _value_theta(x, r, th[0]) >= 0.0
    if prev:
        open_ = True
        start = 0.0
    else:
        all_nonneg = False
    for i in range(1, m):
        cur = _value_theta(x, r, th[i]) >= 0.0
        if not cur:
            all_nonneg = False
        if cur != prev:
            root = _refine(x, r, c, th[i - 1], th[i], 1e-12, 200)
            if cur:
                start = root
                open_ = True
            else:
                if open_ and root > start:
                    lo.push_back(start)
                    hi.push_back(root)
                open_ = False
        prev = cur
    if open_:
        lo.push_back(start)
        hi.push_back(INF)
    return all_nonneg


cdef void _merge_probes(const double* grid, Py_ssize_t ng, const double* cand, Py_ssize_t nc,
                        vector[double]& out) noexcept nogil:
    # cand is sorted; merge two sorted sequences, skipping duplicates
    cdef Py_ssize_t i = 0, j = 0
    cdef double v
    out.clear()
    while i < ng or j < nc:
        if j >= nc or (i < ng and grid[i] <= cand[j]):
            v = grid[i]
            i += 1
        else:
            v = cand[j]
            j += 1
        if out.size() == 0 or v > out.back():
            out.push_back(v)


def fslice_nonneg(x, double r, double c, thetas):
    cdef const double[::1] th = np.ascontiguousarray(thetas, dtype=float)
    cdef double buf[6]
    cdef vector[double] lo, hi
    cdef int i
    for i in range(6):
        buf[i] = x[i]
    _level_set(buf, r, c, &th[0], th.shape[0], lo, hi)
    return _to_array(lo, hi)


def fslice_region(X, double r, double c, grid, cands, offsets):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=float).reshape(-1, 6)
    cdef const double[::1] gv = np.ascontiguousarray(grid, dtype=float)
    cands_arr = np.ascontiguousarray(cands, dtype=float)
    if cands_arr.shape[0] == 0:
        cands_arr = np.zeros(1)
    cdef const double[::1] cv = cands_arr
    cdef const long[::1] ov = np.ascontiguousarray(offsets, dtype=np.int64).astype(np.int_)
    cdef vector[double] rlo, rhi, qlo, qhi, olo, ohi, probes
    cdef Py_ssize_t j, bad = -1, a, b
    cdef double buf[6]
    cdef int i
    cdef const double* cp
    rlo.push_back(0.0)
    rhi.push_back(INF)
    with nogil:
        for j in range(Xv.shape[0]):
            for i in range(6):
                buf[i] = Xv[j, i]
            a = ov[j]
            b = ov[j + 1]
            cp = &cv[0] + a
            _merge_probes(&gv[0], gv.shape[0], cp, b - a, probes)
            if _level_set(buf, r, c, probes.data(), probes.size(), qlo, qhi):
                continue
            _intersect(rlo, rhi, qlo, qhi, olo, ohi)
            rlo.swap(olo)
            rhi.swap(ohi)
            if rlo.size() == 0:
                bad = j
                break
    return _to_array(rlo, rhi), bad
