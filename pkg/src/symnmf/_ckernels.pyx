# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled kernels; the bit-identical twin of ``_purekernels``.

Compiled with -ffp-contract=off so no FMA contraction changes results
relative to the pure-Python reference. Loop nests and expression order
mirror the reference exactly.
"""

from cpython cimport array

import array

from libc.math cimport fabs, isfinite, sqrt

COMPILED = True

cdef array.array _D = array.array("d", [])


cdef array.array _zeros(Py_ssize_t n):
    return array.clone(_D, n, zero=True)


def matmul(Py_ssize_t m, Py_ssize_t k, Py_ssize_t n, double[::1] a, double[::1] b):
    cdef array.array outa = _zeros(m * n)
    cdef double[::1] out = outa
    cdef Py_ssize_t i, j, t, ai, ci
    cdef double acc
    for i in range(m):
        ai = i * k
        ci = i * n
        for j in range(n):
            acc = 0.0
            for t in range(k):
                acc = acc + a[ai + t] * b[t * n + j]
            out[ci + j] = acc
    return outa


def transpose(Py_ssize_t r, Py_ssize_t c, double[::1] a):
    cdef array.array outa = _zeros(r * c)
    cdef double[::1] out = outa
    cdef Py_ssize_t i, j, ai
    for i in range(r):
        ai = i * c
        for j in range(c):
            out[j * r + i] = a[ai + j]
    return outa


def gram(Py_ssize_t n, Py_ssize_t r, double[::1] u):
    cdef array.array outa = _zeros(r * r)
    cdef double[::1] out = outa
    cdef Py_ssize_t i, j, t, tr
    cdef double acc
    for i in range(r):
        for j in range(i, r):
            acc = 0.0
            for t in range(n):
                tr = t * r
                acc = acc + u[tr + i] * u[tr + j]
            out[i * r + j] = acc
            out[j * r + i] = acc
    return outa


def cholesky(Py_ssize_t r, double[::1] s, double[::1] l):
    cdef Py_ssize_t i, j, t
    cdef double d, ljj, acc
    for j in range(r):
        d = s[j * r + j]
        for t in range(j):
            d = d - l[j * r + t] * l[j * r + t]
        if not (d > 0.0):
            return j + 1
        ljj = sqrt(d)
        l[j * r + j] = ljj
        for i in range(j + 1, r):
            acc = s[i * r + j]
            for t in range(j):
                acc = acc - l[i * r + t] * l[j * r + t]
            l[i * r + j] = acc / ljj
    return 0


def spd_inverse_from_factor(Py_ssize_t r, double[::1] l):
    cdef array.array inva = _zeros(r * r)
    cdef double[::1] inv = inva
    cdef array.array ya = _zeros(r)
    cdef double[::1] y = ya
    cdef Py_ssize_t col, i, t
    cdef double acc
    for col in range(r):
        for i in range(r):
            acc = 1.0 if i == col else 0.0
            for t in range(i):
                acc = acc - l[i * r + t] * y[t]
            y[i] = acc / l[i * r + i]
        for i in range(r - 1, -1, -1):
            acc = y[i]
            for t in range(i + 1, r):
                acc = acc - l[t * r + i] * inv[t * r + col]
            inv[i * r + col] = acc / l[i * r + i]
    cdef array.array outa = _zeros(r * r)
    cdef double[::1] out = outa
    cdef Py_ssize_t j
    for i in range(r):
        for j in range(r):
            out[i * r + j] = (inv[i * r + j] + inv[j * r + i]) * 0.5
    return outa


def relu(Py_ssize_t sz, double[::1] a):
    cdef array.array outa = _zeros(sz)
    cdef array.array maska = _zeros(sz)
    cdef double[::1] out = outa
    cdef double[::1] mask = maska
    cdef Py_ssize_t i
    cdef double x
    for i in range(sz):
        x = a[i]
        if x > 0.0:
            out[i] = x
            mask[i] = 1.0
    return outa, maska


def hadamard(Py_ssize_t sz, double[::1] a, double[::1] b):
    cdef array.array outa = _zeros(sz)
    cdef double[::1] out = outa
    cdef Py_ssize_t i
    for i in range(sz):
        out[i] = a[i] * b[i]
    return outa


def add_scaled(Py_ssize_t sz, double[::1] a, double[::1] b, double beta):
    cdef array.array outa = _zeros(sz)
    cdef double[::1] out = outa
    cdef Py_ssize_t i
    for i in range(sz):
        out[i] = a[i] + beta * b[i]
    return outa


def scale(Py_ssize_t sz, double[::1] a, double alpha):
    cdef array.array outa = _zeros(sz)
    cdef double[::1] out = outa
    cdef Py_ssize_t i
    for i in range(sz):
        out[i] = alpha * a[i]
    return outa


def add_diag(Py_ssize_t n, double[::1] a, double alpha):
    cdef array.array outa = _zeros(n * n)
    cdef double[::1] out = outa
    cdef Py_ssize_t i, j, ai
    for i in range(n):
        ai = i * n
        for j in range(n):
            out[ai + j] = a[ai + j]
        out[ai + i] = out[ai + i] + alpha
    return outa


def sumsq(Py_ssize_t sz, double[::1] a):
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(sz):
        acc = acc + a[i] * a[i]
    return acc


def dot(Py_ssize_t sz, double[::1] a, double[::1] b):
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(sz):
        acc = acc + a[i] * b[i]
    return acc


def abs_sum(Py_ssize_t sz, double[::1] a):
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(sz):
        acc = acc + fabs(a[i])
    return acc


def trace(Py_ssize_t n, double[::1] a):
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        acc = acc + a[i * n + i]
    return acc


def max_abs(Py_ssize_t sz, double[::1] a):
    cdef double best = 0.0
    cdef double x
    cdef Py_ssize_t i
    for i in range(sz):
        x = fabs(a[i])
        if x > best:
            best = x
    return best


def count_nonfinite(Py_ssize_t sz, double[::1] a):
    cdef Py_ssize_t bad = 0
    cdef Py_ssize_t i
    for i in range(sz):
        if not isfinite(a[i]):
            bad += 1
    return bad


def adam_update(Py_ssize_t sz, double[::1] p, double[::1] g, double[::1] m,
                double[::1] v, double lr, double b1, double b2, double eps,
                double bc1, double bc2):
    cdef array.array p2a = _zeros(sz)
    cdef array.array m2a = _zeros(sz)
    cdef array.array v2a = _zeros(sz)
    cdef double[::1] p2 = p2a
    cdef double[::1] m2 = m2a
    cdef double[::1] v2 = v2a
    cdef Py_ssize_t i
    cdef double gi, mi, vi
    for i in range(sz):
        gi = g[i]
        mi = b1 * m[i] + (1.0 - b1) * gi
        vi = b2 * v[i] + (1.0 - b2) * (gi * gi)
        m2[i] = mi
        v2[i] = vi
        p2[i] = p[i] - lr * (mi / bc1) / (sqrt(vi / bc2) + eps)
    return p2a, m2a, v2a
