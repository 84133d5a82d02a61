# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled point-to-segment kernels. Same contracts as ``udset._fallback``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, floor

cnp.import_array()


cdef inline double _seg_dist(const double* x, const double* a, const double* b,
                             int d, double* scale) noexcept nogil:
    cdef double L2 = 0.0, t = 0.0, L, r, acc = 0.0, s = 0.0, u
    cdef int i
    for i in range(d):
        u = b[i] - a[i]
        L2 += u * u
        if fabs(x[i]) > s: s = fabs(x[i])
        if fabs(a[i]) > s: s = fabs(a[i])
        if fabs(b[i]) > s: s = fabs(b[i])
    scale[0] = s
    if L2 == 0.0:
        for i in range(d):
            r = x[i] - a[i]
            acc += r * r
        return sqrt(acc)
    L = sqrt(L2)
    for i in range(d):
        t += (x[i] - a[i]) * ((b[i] - a[i]) / L)
    if t < 0.0:
        t = 0.0
    elif t > L:
        t = L
    for i in range(d):
        r = x[i] - (a[i] + t * ((b[i] - a[i]) / L))
        acc += r * r
    return sqrt(acc)


def any_within(const double[:, ::1] pts, const double[:, ::1] a,
               const double[:, ::1] b, const double[::1] thr,
               const long[::1] cell_start, const long[::1] cell_items,
               const double[::1] lo, double cell, const long[::1] shape,
               bint closed, double tol):
    cdef Py_ssize_t n = pts.shape[0], p, j, k
    cdef int d = pts.shape[1], i
    cdef long c, ci, stride
    cdef double dd, s, v
    cdef bint outside
    out = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] o = out
    with nogil:
        for p in range(n):
            c = 0
            stride = 1
            outside = False
            for i in range(d - 1, -1, -1):
                v = floor((pts[p, i] - lo[i]) / cell)
                if v < 0 or v >= shape[i]:
                    outside = True
                    break
                c += <long>v * stride
                stride *= shape[i]
            if outside:
                continue
            for k in range(cell_start[c], cell_start[c + 1]):
                j = cell_items[k]
                dd = _seg_dist(&pts[p, 0], &a[j, 0], &b[j, 0], d, &s)
                if closed:
                    if dd <= thr[j] + tol * s:
                        o[p] = 1
                        break
                elif dd < thr[j]:
                    o[p] = 1
                    break
    return out


def min_dist(const double[:, ::1] pts, const double[:, ::1] a,
             const double[:, ::1] b):
    cdef Py_ssize_t n = pts.shape[0], m = a.shape[0], p, j
    cdef int d = pts.shape[1]
    cdef double dd, s, best
    cdef long arg
    dist = np.full(n, np.inf)
    idx = np.full(n, -1, dtype=np.int64)
    cdef double[::1] dv = dist
    cdef long long[::1] iv = idx
    with nogil:
        for p in range(n):
            best = 1e308
            arg = -1
            for j in range(m):
                dd = _seg_dist(&pts[p, 0], &a[j, 0], &b[j, 0], d, &s)
                if dd < best:
                    best = dd
                    arg = j
            if arg >= 0:
                dv[p] = best
                iv[p] = arg
    return dist, idx
