"""Pure-Python fallback kernels.

Every function here has a compiled twin in ``_ckernels.pyx``. The two must
stay bit-identical: same flat row-major layout, same loop nests, same
floating-point expression order. Anything numeric that runs per-entry
belongs here (or in the twin), not in the orchestration layers.
"""

from array import array
from math import fabs, isfinite, sqrt

COMPILED = False


def _zeros(n):
    return array("d", bytes(8 * n))


def matmul(m, k, n, a, b):
    """(m x k) @ (k x n), accumulating each output entry left to right."""
    out = _zeros(m * n)
    for i in range(m):
        ai = i * k
        ci = i * n
        for j in range(n):
            acc = 0.0
            for t in range(k):
                acc = acc + a[ai + t] * b[t * n + j]
            out[ci + j] = acc
    return out


def transpose(r, c, a):
    out = _zeros(r * c)
    for i in range(r):
        ai = i * c
        for j in range(c):
            out[j * r + i] = a[ai + j]
    return out


def gram(n, r, u):
    """U^T U for an n x r input; upper triangle computed, then mirrored."""
    out = _zeros(r * r)
    for i in range(r):
        for j in range(i, r):
            acc = 0.0
            for t in range(n):
                tr = t * r
                acc = acc + u[tr + i] * u[tr + j]
            out[i * r + j] = acc
            out[j * r + i] = acc
    return out


def cholesky(r, s, l):
    """Lower Cholesky factor of s into l (prezeroed).

    Returns 0 on success, or the 1-based index of the failing pivot.
    """
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


def spd_inverse_from_factor(r, l):
    """Inverse of L L^T via two triangular solves per unit column.

    The result is symmetrized entry by entry before returning.
    """
    inv = _zeros(r * r)
    y = _zeros(r)
    for col in range(r):
        # forward solve L y = e_col
        for i in range(r):
            acc = 1.0 if i == col else 0.0
            for t in range(i):
                acc = acc - l[i * r + t] * y[t]
            y[i] = acc / l[i * r + i]
        # backward solve L^T z = y, stored straight into the column
        for i in range(r - 1, -1, -1):
            acc = y[i]
            for t in range(i + 1, r):
                acc = acc - l[t * r + i] * inv[t * r + col]
            inv[i * r + col] = acc / l[i * r + i]
    out = _zeros(r * r)
    for i in range(r):
        for j in range(r):
            out[i * r + j] = (inv[i * r + j] + inv[j * r + i]) * 0.5
    return out


def relu(sz, a):
    """Elementwise max(x, 0) plus the 0/1 activation mask (0 at exactly 0)."""
    out = _zeros(sz)
    mask = _zeros(sz)
    for i in range(sz):
        x = a[i]
        if x > 0.0:
            out[i] = x
            mask[i] = 1.0
    return out, mask


def hadamard(sz, a, b):
    out = _zeros(sz)
    for i in range(sz):
        out[i] = a[i] * b[i]
    return out


def add_scaled(sz, a, b, beta):
    """a + beta * b."""
    out = _zeros(sz)
    for i in range(sz):
        out[i] = a[i] + beta * b[i]
    return out


def scale(sz, a, alpha):
    out = _zeros(sz)
    for i in range(sz):
        out[i] = alpha * a[i]
    return out


def add_diag(n, a, alpha):
    """a + alpha * I for square n x n input."""
    out = _zeros(n * n)
    for i in range(n):
        ai = i * n
        for j in range(n):
            out[ai + j] = a[ai + j]
        out[ai + i] = out[ai + i] + alpha
    return out


def sumsq(sz, a):
    acc = 0.0
    for i in range(sz):
        acc = acc + a[i] * a[i]
    return acc


def dot(sz, a, b):
    acc = 0.0
    for i in range(sz):
        acc = acc + a[i] * b[i]
    return acc


def abs_sum(sz, a):
    acc = 0.0
    for i in range(sz):
        acc = acc + fabs(a[i])
    return acc


def trace(n, a):
    acc = 0.0
    for i in range(n):
        acc = acc + a[i * n + i]
    return acc


def max_abs(sz, a):
    best = 0.0
    for i in range(sz):
        x = fabs(a[i])
        if x > best:
            best = x
    return best


def count_nonfinite(sz, a):
    bad = 0
    for i in range(sz):
        if not isfinite(a[i]):
            bad += 1
    return bad


def adam_update(sz, p, g, m, v, lr, b1, b2, eps, bc1, bc2):
    """One bias-corrected Adam step; bc1/bc2 are 1 - beta^t, precomputed."""
    p2 = _zeros(sz)
    m2 = _zeros(sz)
    v2 = _zeros(sz)
    for i in range(sz):
        gi = g[i]
        mi = b1 * m[i] + (1.0 - b1) * gi
        vi = b2 * v[i] + (1.0 - b2) * (gi * gi)
        m2[i] = mi
        v2[i] = vi
        p2[i] = p[i] - lr * (mi / bc1) / (sqrt(vi / bc2) + eps)
    return p2, m2, v2
