# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simplex inner kernels; see _pykernels for the reference semantics."""
import numpy as np
from libc.math cimport fabs, INFINITY, isfinite

cdef enum:
    AT_LOWER = 0
    AT_UPPER = 1


def pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t q):
    cdef Py_ssize_t rows = T.shape[0], cols = T.shape[1]
    cdef Py_ssize_t i, j, k, nnz = 0
    cdef double piv = T[r, q], f
    cdef Py_ssize_t[::1] nz = np.empty(cols, dtype=np.intp)
    with nogil:
        for j in range(cols):
            if T[r, j] != 0.0:
                T[r, j] /= piv
                nz[nnz] = j
                nnz += 1
        T[r, q] = 1.0
        for i in range(rows):
            if i == r:
                continue
            f = T[i, q]
            if f == 0.0:
                continue
            for k in range(nnz):
                j = nz[k]
                T[i, j] -= f * T[r, j]
            T[i, q] = 0.0


def select_entering(double[::1] d, signed char[::1] state, double tol, bint bland):
    cdef Py_ssize_t n = d.shape[0], j, best = -1
    cdef double score, best_score = 0.0
    with nogil:
        for j in range(n):
            if state[j] == AT_LOWER and d[j] < -tol:
                score = -d[j]
            elif state[j] == AT_UPPER and d[j] > tol:
                score = d[j]
            else:
                continue
            if bland:
                best = j
                break
            if score > best_score:
                best_score = score
                best = j
    if best < 0:
        return -1, 0
    return best, (1 if d[best] < 0 else -1)


cdef inline double _ratio(double a, double b, double ub, double ptol) nogil:
    cdef double room
    if a > ptol:
        return (b if b > 0.0 else 0.0) / a
    if a < -ptol and isfinite(ub):
        room = ub - b
        return (room if room > 0.0 else 0.0) / -a
    return INFINITY


def ratio_test(double[:, ::1] T, Py_ssize_t q, double[::1] beta, double[::1] ub_basic,
               Py_ssize_t[::1] basis, int direction, double ptol, double harris_tol, bint bland):
    cdef Py_ssize_t m = beta.shape[0], i, r = -1
    cdef double a, t, bound = INFINITY, tmin = INFINITY, best_a = -1.0, room
    if bland:
        for i in range(m):
            t = _ratio(T[i, q] * direction, beta[i], ub_basic[i], ptol)
            if t < tmin:
                tmin = t
        if tmin == INFINITY:
            return -1, INFINITY
        for i in range(m):
            t = _ratio(T[i, q] * direction, beta[i], ub_basic[i], ptol)
            if t <= tmin + 1e-12 and (r < 0 or basis[i] < basis[r]):
                r = i
        return r, _ratio(T[r, q] * direction, beta[r], ub_basic[r], ptol)
    for i in range(m):
        a = T[i, q] * direction
        if a > ptol:
            t = (beta[i] + harris_tol) / a
        elif a < -ptol and isfinite(ub_basic[i]):
            t = (ub_basic[i] - beta[i] + harris_tol) / -a
        else:
            continue
        if t < bound:
            bound = t
    if bound == INFINITY:
        return -1, INFINITY
    for i in range(m):
        a = T[i, q] * direction
        if a > ptol:
            room = beta[i] if beta[i] > 0.0 else 0.0
            t = room / a
        elif a < -ptol and isfinite(ub_basic[i]):
            room = ub_basic[i] - beta[i]
            t = (room if room > 0.0 else 0.0) / -a
        else:
            continue
        if t <= bound and fabs(a) > best_a:
            best_a = fabs(a)
            r = i
            tmin = t
    return r, tmin
