"""Dense matrix container and the numeric kernels everything else builds on.

Matrices are flat row-major float64 buffers. All per-entry arithmetic is
delegated to the active kernel backend (compiled or pure Python); both
backends use fixed loop nests, so results are bit-reproducible across runs
and identical between backends.
"""

import math
from array import array

from .backend import kernels
from .errors import CholeskyError, ConvergenceError, ShapeError


class DenseMatrix:
    """Row-major float64 matrix value type."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows, cols, data):
        if rows < 1 or cols < 1:
            raise ShapeError(f"matrix dimensions must be positive, got {rows}x{cols}")
        if len(data) != rows * cols:
            raise ShapeError(
                f"data length {len(data)} does not match {rows}x{cols}"
            )
        self.rows = rows
        self.cols = cols
        self.data = data if isinstance(data, array) else array("d", data)

    @classmethod
    def zeros(cls, rows, cols):
        return cls(rows, cols, array("d", bytes(8 * rows * cols)))

    @classmethod
    def identity(cls, n):
        m = cls.zeros(n, n)
        for i in range(n):
            m.data[i * n + i] = 1.0
        return m

    @classmethod
    def from_rows(cls, rows_list):
        """Build from a list of row lists; validates shape and finiteness."""
        rows = len(rows_list)
        if rows == 0:
            raise ShapeError("empty row list")
        cols = len(rows_list[0])
        flat = array("d")
        for row in rows_list:
            if len(row) != cols:
                raise ShapeError("ragged rows")
            flat.extend(row)
        m = cls(rows, cols, flat)
        m.require_finite()
        return m

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def size(self):
        return self.rows * self.cols

    def get(self, i, j):
        return self.data[i * self.cols + j]

    def set(self, i, j, value):
        self.data[i * self.cols + j] = value

    def to_rows(self):
        c = self.cols
        return [list(self.data[i * c : (i + 1) * c]) for i in range(self.rows)]

    def copy(self):
        return DenseMatrix(self.rows, self.cols, array("d", self.data))

    def tobytes(self):
        return self.data.tobytes()

    def require_finite(self, context="matrix"):
        bad = kernels.count_nonfinite(self.size, self.data)
        if bad:
            raise ValueError(f"{context} has {bad} non-finite entries")
        return self

    def __repr__(self):
        return f"DenseMatrix({self.rows}x{self.cols})"


class SpdFactor:
    """Lower-triangular Cholesky factor of an SPD matrix."""

    __slots__ = ("dim", "lower")

    def __init__(self, dim, lower):
        self.dim = dim
        self.lower = lower

    def inverse(self):
        """(L L^T)^-1, symmetrized."""
        inv = kernels.spd_inverse_from_factor(self.dim, self.lower.data)
        return DenseMatrix(self.dim, self.dim, inv)

    def reconstruct(self):
        """L L^T (for factorization-quality checks)."""
        return matmul(self.lower, transpose(self.lower))


def _require(cond, message):
    if not cond:
        raise ShapeError(message)


def matmul(a, b):
    """Matrix product with a fixed accumulation order."""
    _require(
        a.cols == b.rows,
        f"matmul shape mismatch: {a.rows}x{a.cols} @ {b.rows}x{b.cols}",
    )
    out = kernels.matmul(a.rows, a.cols, b.cols, a.data, b.data)
    return DenseMatrix(a.rows, b.cols, out)


def transpose(a):
    return DenseMatrix(a.cols, a.rows, kernels.transpose(a.rows, a.cols, a.data))


def gram(u):
    """U^T U, exactly symmetric by construction."""
    return DenseMatrix(u.cols, u.cols, kernels.gram(u.rows, u.cols, u.data))


def cholesky(s):
    """Lower Cholesky factor of a symmetric positive-definite matrix."""
    _require(s.rows == s.cols, f"cholesky needs a square matrix, got {s.rows}x{s.cols}")
    lower = DenseMatrix.zeros(s.rows, s.rows)
    pivot = kernels.cholesky(s.rows, s.data, lower.data)
    if pivot:
        raise CholeskyError(pivot - 1)
    return SpdFactor(s.rows, lower)


def spd_inverse(s, lam):
    """(S + lam*I)^-1 for a Gram-like S, via Cholesky."""
    _require(s.rows == s.cols, "spd_inverse needs a square matrix")
    if not lam > 0.0:
        raise ValueError(f"shift must be positive, got {lam}")
    return cholesky(add_diag(s, lam)).inverse()


def fro_norm(a):
    return math.sqrt(kernels.sumsq(a.size, a.data))


def relu(a):
    """Elementwise max(x, 0); returns (clipped, activation mask)."""
    out, mask = kernels.relu(a.size, a.data)
    return (
        DenseMatrix(a.rows, a.cols, out),
        DenseMatrix(a.rows, a.cols, mask),
    )


_POWER_STARTS = ("ones", "ramp", "e0")


def _start_vector(kind, k):
    v = DenseMatrix.zeros(k, 1)
    if kind == "ones":
        for i in range(k):
            v.data[i] = 1.0
    elif kind == "ramp":
        for i in range(k):
            v.data[i] = float(i + 1)
    else:
        v.data[0] = 1.0
    nrm = fro_norm(v)
    return DenseMatrix(k, 1, kernels.scale(k, v.data, 1.0 / nrm))


def spectral_norm(a, tol=1e-12, max_iter=10000):
    """Largest singular value by power iteration on A^T A.

    The start vector is deterministic (normalized all-ones, with fixed
    alternates if that start is annihilated), so repeated runs agree bit
    for bit.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if kernels.max_abs(a.size, a.data) == 0.0:
        return 0.0
    at = transpose(a)
    k = a.cols
    starts = iter(_POWER_STARTS)
    v = _start_vector(next(starts), k)
    prev = None
    est = 0.0
    for _ in range(max_iter):
        w = matmul(a, v)
        wn = fro_norm(w)
        if wn == 0.0:
            # this start lies in the null space; move to the next one
            try:
                v = _start_vector(next(starts), k)
            except StopIteration:
                raise ConvergenceError(0.0, "power iteration start vectors annihilated")
            prev = None
            continue
        est = wn
        if prev is not None and abs(est - prev) < tol * est:
            return est
        prev = est
        z = matmul(at, w)
        zn = fro_norm(z)
        v = DenseMatrix(k, 1, kernels.scale(k, z.data, 1.0 / zn))
    # near-tied leading singular values stall the iteration below tol; the
    # estimate is then still a lower bound accurate to ~sqrt(tol) relative,
    # which is enough for every bound check built on this routine
    if prev is not None and abs(est - prev) < math.sqrt(tol) * est:
        return est
    raise ConvergenceError(est)


# -- elementwise plumbing used across modules --


def add_scaled(a, b, beta):
    """a + beta * b."""
    _require(a.shape == b.shape, f"shape mismatch: {a.shape} vs {b.shape}")
    return DenseMatrix(a.rows, a.cols, kernels.add_scaled(a.size, a.data, b.data, beta))


def add(a, b):
    return add_scaled(a, b, 1.0)


def sub(a, b):
    return add_scaled(a, b, -1.0)


def scale(a, alpha):
    return DenseMatrix(a.rows, a.cols, kernels.scale(a.size, a.data, alpha))


def hadamard(a, b):
    _require(a.shape == b.shape, f"shape mismatch: {a.shape} vs {b.shape}")
    return DenseMatrix(a.rows, a.cols, kernels.hadamard(a.size, a.data, b.data))


def add_diag(a, alpha):
    """a + alpha * I."""
    _require(a.rows == a.cols, "add_diag needs a square matrix")
    return DenseMatrix(a.rows, a.cols, kernels.add_diag(a.rows, a.data, alpha))


def sumsq(a):
    return kernels.sumsq(a.size, a.data)


def dot_product(a, b):
    """Frobenius inner product."""
    _require(a.shape == b.shape, f"shape mismatch: {a.shape} vs {b.shape}")
    return kernels.dot(a.size, a.data, b.data)


def abs_sum(a):
    return kernels.abs_sum(a.size, a.data)


def trace_of(a):
    _require(a.rows == a.cols, "trace needs a square matrix")
    return kernels.trace(a.rows, a.data)


def max_abs_entry(a):
    return kernels.max_abs(a.size, a.data)


def max_asymmetry(a):
    """max |a_ij - a_ji| over all pairs."""
    _require(a.rows == a.cols, "asymmetry check needs a square matrix")
    return max_abs_entry(sub(a, transpose(a)))
