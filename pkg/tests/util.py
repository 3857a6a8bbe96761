"""Shared helpers for the test suite.

numpy appears only here and in the tests themselves, as an independent
oracle; the package under test never imports it.
"""

import math
import random
from array import array

import numpy as np

from symnmf import linalg as la


def mat(rows):
    """Build a DenseMatrix from a list of row lists."""
    return la.DenseMatrix.from_rows([[float(v) for v in row] for row in rows])


def to_numpy(m):
    return np.array(m.to_rows(), dtype=float)


def from_numpy(arr):
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return la.DenseMatrix.from_rows([[float(v) for v in row] for row in arr])


def max_abs_diff(a, b):
    """Largest entrywise difference between two matrices."""
    assert a.rows == b.rows and a.cols == b.cols
    return max(
        (abs(x - y) for x, y in zip(a.data, b.data)),
        default=0.0,
    )


def assert_close(a, b, tol=1e-12):
    d = max_abs_diff(a, b)
    assert d <= tol, f"matrices differ by {d} > {tol}"


def assert_bitwise_equal(a, b):
    assert a.rows == b.rows and a.cols == b.cols
    assert a.tobytes() == b.tobytes()


def rand_matrix(rows, cols, seed, lo=-1.0, hi=1.0):
    rng = random.Random(seed)
    data = array("d", [rng.uniform(lo, hi) for _ in range(rows * cols)])
    return la.DenseMatrix(rows, cols, data)


def rand_nonneg(rows, cols, seed, hi=1.0):
    return rand_matrix(rows, cols, seed, lo=0.0, hi=hi)


def rand_sym_psd(n, r, seed, hi=1.0):
    """Random symmetric PSD matrix X = B B^T with nonnegative B."""
    b = rand_nonneg(n, r, seed, hi=hi)
    return la.matmul(b, la.transpose(b))


def rand_symmetric(n, seed, lo=-1.0, hi=1.0):
    rng = random.Random(seed)
    out = la.DenseMatrix.zeros(n, n)
    for i in range(n):
        for j in range(i, n):
            v = rng.uniform(lo, hi)
            out.set(i, j, v)
            out.set(j, i, v)
    return out


def numeric_grad(f, m, h=1e-6):
    """Central-difference gradient of scalar f with respect to matrix m."""
    g = la.DenseMatrix.zeros(m.rows, m.cols)
    for idx in range(len(m.data)):
        orig = m.data[idx]
        m.data[idx] = orig + h
        hi = f()
        m.data[idx] = orig - h
        lo = f()
        m.data[idx] = orig
        g.data[idx] = (hi - lo) / (2.0 * h)
    return g


def numeric_grad_scalar(f, get, put, h=1e-6):
    """Central-difference derivative for a scalar parameter."""
    orig = get()
    put(orig + h)
    hi = f()
    put(orig - h)
    lo = f()
    put(orig)
    return (hi - lo) / (2.0 * h)


def blob_points(centers, per_cluster, spread, seed):
    """Gaussian blobs around 2-d centers; returns (matrix, labels)."""
    rng = random.Random(seed)
    rows, labels = [], []
    for ci, (cx, cy) in enumerate(centers):
        for _ in range(per_cluster):
            rows.append([cx + rng.gauss(0.0, spread), cy + rng.gauss(0.0, spread)])
            labels.append(ci)
    return mat(rows), labels


def fro(arr):
    return float(np.linalg.norm(arr, "fro"))


def spectral(arr):
    return float(np.linalg.norm(arr, 2))


def is_finite_matrix(m):
    return all(math.isfinite(v) for v in m.data)
