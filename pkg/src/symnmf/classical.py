"""Baseline iterative solvers for the penalized symmetric factorization.

The core update is the alternating scheme
    W <- max{(X + lam*I) V (V^T V + lam*I)^-1, 0}
    V <- max{(X + lam*I) W (W^T W + lam*I)^-1, 0}
plus a projected-gradient baseline on 0.25*||X - U U^T||_F^2.
"""

import math
import random
import time
from dataclasses import dataclass, field

from . import linalg as la
from .errors import DivergenceError


@dataclass
class ClassicalConfig:
    """Penalty weight, iteration budget, stopping tolerance, and init seed."""

    lam: float
    max_iters: int
    tol: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.lam > 0.0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol < 0.0:
            raise ValueError(f"tol must be >= 0, got {self.tol}")


@dataclass
class TraceRecord:
    iteration: int
    rel_error: float
    u_fro: float
    wall_time: float
    lam: float = None


@dataclass
class SolverTrace:
    """Per-iteration (or per-epoch) history of a solver run."""

    records: list = field(default_factory=list)

    def append(self, record):
        self.records.append(record)

    def final_error(self):
        return self.records[-1].rel_error

    def errors(self):
        return [rec.rel_error for rec in self.records]

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


# plateau window for the stopping rule: the spread of the last 5 relative
# errors must fall below tol
_STALL_WINDOW = 5


def require_nonnegative(m, context="factor"):
    clipped, _ = la.relu(la.scale(m, -1.0))
    worst = la.max_abs_entry(clipped)
    if worst > 0.0:
        raise ValueError(f"{context} has negative entries (largest magnitude {worst:g})")
    return m


def scheme_half_step(u, x, lam, xl=None):
    """One single-variable update U <- max{(X+lam*I) U (U^T U+lam*I)^-1, 0}.

    A full alternating sweep is two of these; the unrolled network's blocks
    correspond one-to-one with half steps.
    """
    if xl is None:
        xl = la.add_diag(x, lam)
    inv = la.spd_inverse(la.gram(u), lam)
    out, _ = la.relu(la.matmul(la.matmul(xl, u), inv))
    return out


def scheme_step(w, v, x, lam):
    """One full alternating sweep; returns the updated (W, V)."""
    xl = la.add_diag(x, lam)
    w2 = scheme_half_step(v, x, lam, xl=xl)
    v2 = scheme_half_step(w2, x, lam, xl=xl)
    return w2, v2


def relative_sq_error(x, u, x_sumsq=None):
    """||X - U U^T||_F^2 / ||X||_F^2."""
    if x_sumsq is None:
        x_sumsq = la.sumsq(x)
    resid = la.add_scaled(x, la.matmul(u, la.transpose(u)), -1.0)
    return la.sumsq(resid) / x_sumsq


def _should_stop(errors, tol):
    if tol <= 0.0:
        return False
    if errors[-1] < tol:
        return True
    if len(errors) >= _STALL_WINDOW:
        window = errors[-_STALL_WINDOW:]
        if max(window) - min(window) < tol:
            return True
    return False


def run_classical(x, u0, cfg):
    """Iterate the alternating scheme from W = V = u0.

    Returns the final V (the last-updated factor) and the per-sweep trace.
    """
    require_nonnegative(u0, "u0")
    x_sumsq = la.sumsq(x)
    if x_sumsq == 0.0:
        raise ValueError("input matrix is all zero; relative error undefined")
    if cfg.max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    xl = la.add_diag(x, cfg.lam)
    v = u0
    trace = SolverTrace()
    start = time.perf_counter()
    for it in range(1, cfg.max_iters + 1):
        w = scheme_half_step(v, x, cfg.lam, xl=xl)
        v = scheme_half_step(w, x, cfg.lam, xl=xl)
        err = relative_sq_error(x, v, x_sumsq)
        if not math.isfinite(err):
            raise DivergenceError(it)
        trace.append(TraceRecord(it, err, la.fro_norm(v), time.perf_counter() - start))
        if _should_stop(trace.errors(), cfg.tol):
            break
    return v, trace


def pgd_step(u, x, step):
    """Projected gradient step on 0.25*||X - U U^T||_F^2."""
    if not step > 0.0:
        raise ValueError(f"step must be positive, got {step}")
    grad = la.matmul(la.add_scaled(la.matmul(u, la.transpose(u)), x, -1.0), u)
    out, _ = la.relu(la.add_scaled(u, grad, -step))
    return out


def default_pgd_step(x):
    return 1.0 / (2.0 * la.spectral_norm(x))


def run_pgd(x, u0, cfg, step=None):
    """Projected gradient descent with a fixed step size."""
    require_nonnegative(u0, "u0")
    x_sumsq = la.sumsq(x)
    if x_sumsq == 0.0:
        raise ValueError("input matrix is all zero; relative error undefined")
    if step is None:
        step = default_pgd_step(x)
    u = u0
    trace = SolverTrace()
    start = time.perf_counter()
    for it in range(1, cfg.max_iters + 1):
        u = pgd_step(u, x, step)
        err = relative_sq_error(x, u, x_sumsq)
        if not math.isfinite(err):
            raise DivergenceError(it)
        trace.append(TraceRecord(it, err, la.fro_norm(u), time.perf_counter() - start))
        if _should_stop(trace.errors(), cfg.tol):
            break
    return u, trace


def random_factor(x, r, seed):
    """Random nonnegative n x r start, scaled so U0 U0^T matches X's scale.

    Entries are i.i.d. uniform on [0, sqrt(mean(X)/r)].
    """
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    mean = sum(x.data) / x.size
    if mean <= 0.0:
        raise ValueError("input matrix mean must be positive for scaled init")
    hi = math.sqrt(mean / r)
    rng = random.Random(seed)
    u0 = la.DenseMatrix.zeros(x.rows, r)
    for i in range(x.rows * r):
        u0.data[i] = hi * rng.random()
    return u0
