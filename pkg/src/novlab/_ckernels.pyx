# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same API and semantics as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, NAN

cnp.import_array()

BACKEND = "cython"


cpdef tuple reduce_word(object letters):
    cdef list out = []
    cdef Py_ssize_t n = 0
    cdef long a
    for obj in letters:
        a = obj
        if n and <long>out[n - 1] == -a:
            out.pop()
            n -= 1
        else:
            out.append(a)
            n += 1
    return tuple(out)


cpdef tuple reduce_concat(tuple w1, tuple w2):
    cdef Py_ssize_t n1 = len(w1)
    cdef Py_ssize_t n2 = len(w2)
    cdef Py_ssize_t k = 0
    while k < n1 and k < n2 and <long>w1[n1 - 1 - k] == -<long>w2[k]:
        k += 1
    if k == 0:
        return w1 + w2
    return w1[: n1 - k] + w2[k:]


cpdef dict mul_terms(object a_items, object b_items, object valuation, double cutoff):
    cdef dict by_source = {}
    cdef dict out = {}
    cdef dict vcache = {}
    cdef list partners
    cdef tuple wa, wb, w, key
    cdef object sa, ta, ca, tb, cb, c, val
    for item in b_items:
        partners = by_source.get(item[0])
        if partners is None:
            by_source[item[0]] = [item]
        else:
            partners.append(item)
    for sa, ta, wa, ca in a_items:
        partners = by_source.get(ta)
        if partners is None:
            continue
        for item in partners:
            tb = item[1]
            wb = item[2]
            cb = item[3]
            w = reduce_concat(wa, wb)
            val = vcache.get(w)
            if val is None:
                val = valuation(w)
                vcache[w] = val
            if not (<double>val) > cutoff:
                continue
            key = (sa, tb, w)
            c = out.get(key, 0) + ca * cb
            if c:
                out[key] = c
            else:
                del out[key]
    return out


def descend_batch(xm_in, xp_in, double delta_star, double eps):
    # const views accept read-only inputs
    cdef const double[:, ::1] vm = np.ascontiguousarray(xm_in, dtype=np.float64)
    cdef const double[:, ::1] vp = np.ascontiguousarray(xp_in, dtype=np.float64)
    cdef Py_ssize_t n = vm.shape[0]
    cdef Py_ssize_t dm = vm.shape[1]
    cdef Py_ssize_t dp = vp.shape[1]
    cdef cnp.ndarray[double, ndim=2] om = np.empty((n, dm), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] op = np.empty((n, dp), dtype=np.float64)
    cdef double[:, ::1] wm = om
    cdef double[:, ::1] wp = op
    cdef Py_ssize_t r, j
    cdef double a2, b2, z, sz
    for r in range(n):
        a2 = 0.0
        b2 = 0.0
        for j in range(dm):
            a2 += vm[r, j] * vm[r, j]
        for j in range(dp):
            b2 += vp[r, j] * vp[r, j]
        if a2 < eps * eps:
            for j in range(dm):
                wm[r, j] = NAN
            for j in range(dp):
                wp[r, j] = NAN
            continue
        z = (delta_star + sqrt(delta_star * delta_star + 4.0 * a2 * b2)) / (2.0 * a2)
        sz = sqrt(z)
        for j in range(dm):
            wm[r, j] = vm[r, j] * sz
        for j in range(dp):
            wp[r, j] = vp[r, j] / sz
    return om, op


def ascend_batch(xm, xp, double delta_star, double eps):
    out_p, out_m = descend_batch(xp, xm, delta_star, eps)
    return out_m, out_p
