"""Trainable unrolled network for the penalized symmetric factorization.

Each block replays one half step of the classical alternating scheme with
the linear weights P_i made learnable:

    U_i = relu(P_i (U_{i-1}^T U_{i-1} + lam I)^-1)

Initialized at P_i = (X + lam I) U~_{i-1} the network reproduces the
classical iterates exactly; training then adjusts {P_i} and lam against a
deep-supervised reconstruction loss. Gradients are derived in closed form
(reverse mode through the matrix inverse), optimized with Adam, and lam is
kept above its stability lower bound by projection.
"""

import math
import struct
import time
from dataclasses import dataclass, field

from . import linalg as la
from .backend import kernels
from .classical import SolverTrace, TraceRecord, relative_sq_error, require_nonnegative
from .errors import (
    CheckpointError,
    CheckpointShapeError,
    CheckpointTruncatedError,
    CheckpointVersionError,
    DivergenceError,
    ShapeError,
)
from .theory import combined_lambda_bound


@dataclass
class NetParams:
    """Learnable state: one n x r weight matrix per block plus the shared
    penalty weight lam."""

    blocks: list
    lam: float

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("at least one block is required")
        n, r = self.blocks[0].rows, self.blocks[0].cols
        for i, p in enumerate(self.blocks):
            if p.rows != n or p.cols != r:
                raise ShapeError(
                    f"block {i} is {p.rows}x{p.cols}, expected {n}x{r}"
                )
        if not self.lam > 0.0:
            raise ValueError(f"lam must be positive, got {self.lam}")

    @property
    def num_blocks(self):
        return len(self.blocks)

    def copy(self):
        return NetParams([p.copy() for p in self.blocks], self.lam)


@dataclass
class BlockCache:
    """Forward intermediates one block needs for its backward pass."""

    u_in: la.DenseMatrix
    inv: la.DenseMatrix
    pre_act: la.DenseMatrix
    mask: la.DenseMatrix


@dataclass
class NetGrads:
    d_blocks: list
    d_lambda: float
    d_u0: la.DenseMatrix


@dataclass
class TrainConfig:
    """Training hyperparameters.

    The learning rate decays geometrically: step t uses lr * lr_decay**t.
    lambda_override pins lam to a fixed value (it is then excluded from
    the optimizer and from projection); lambda_projection keeps a trained
    lam above its stability lower bound after every step.
    """

    num_blocks: int = 10
    lr: float = 0.5
    lr_decay: float = 0.97
    beta: float = 5e-6
    gamma_l1: float = 0.0
    epochs: int = 150
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    lambda_projection: bool = True
    lambda_override: float = None
    seed: int = 0

    def __post_init__(self):
        if self.num_blocks < 1:
            raise ValueError(f"num_blocks must be >= 1, got {self.num_blocks}")
        if not self.lr > 0.0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if not 0.0 < self.lr_decay <= 1.0:
            raise ValueError(f"lr_decay must be in (0, 1], got {self.lr_decay}")
        if self.beta < 0.0 or self.gamma_l1 < 0.0:
            raise ValueError("beta and gamma_l1 must be nonnegative")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if not 0.0 < self.adam_beta1 < 1.0 or not 0.0 < self.adam_beta2 < 1.0:
            raise ValueError("adam moment decays must lie in (0, 1)")
        if not self.adam_eps > 0.0:
            raise ValueError("adam_eps must be positive")
        if self.lambda_override is not None and not self.lambda_override > 0.0:
            raise ValueError("lambda_override must be positive when set")


@dataclass
class AdamState:
    m_blocks: list
    v_blocks: list
    m_lam: float
    v_lam: float
    step: int

    @classmethod
    def zeros_like(cls, params):
        m = [la.DenseMatrix.zeros(p.rows, p.cols) for p in params.blocks]
        v = [la.DenseMatrix.zeros(p.rows, p.cols) for p in params.blocks]
        return cls(m, v, 0.0, 0.0, 0)


def block_forward(u_in, p, lam):
    """One block: inversion layer, linear layer, ReLU.

    Returns the block output and the cache its backward pass consumes.
    """
    if u_in.rows != p.rows or u_in.cols != p.cols:
        raise ShapeError(
            f"weights are {p.rows}x{p.cols} but the factor is "
            f"{u_in.rows}x{u_in.cols}"
        )
    inv = la.spd_inverse(la.gram(u_in), lam)
    pre_act = la.matmul(p, inv)
    out, mask = la.relu(pre_act)
    return out, BlockCache(u_in, inv, pre_act, mask)


def net_forward(u0, params):
    """Chain all blocks from u0; returns per-block outputs and caches."""
    outputs = []
    caches = []
    u = u0
    for i, p in enumerate(params.blocks, start=1):
        try:
            u, cache = block_forward(u, p, params.lam)
        except Exception as exc:
            if hasattr(exc, "add_note"):
                exc.add_note(f"while evaluating block {i}")
            raise
        outputs.append(u)
        caches.append(cache)
    return outputs, caches


def init_params(x, u0, lam, k):
    """Weights that make the network replay k classical half steps from u0:
    P_i = (X + lam I) U~_{i-1} along the classical trajectory."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not lam > 0.0:
        raise ValueError(f"lam must be positive, got {lam}")
    xl = la.add_diag(x, lam)
    blocks = []
    u = u0
    for _ in range(k):
        p = la.matmul(xl, u)
        blocks.append(p)
        inv = la.spd_inverse(la.gram(u), lam)
        u, _ = la.relu(la.matmul(p, inv))
    return NetParams(blocks, lam)


def loss(x, outputs, caches, params, cfg):
    """Deep-supervised objective: every block contributes its reconstruction
    error plus beta times the squared drift of P_i from (X+lam I) U_{i-1};
    gamma_l1 adds an l1 push on the final output."""
    k = len(params.blocks)
    if len(outputs) != k or len(caches) != k:
        raise ShapeError(
            f"expected {k} outputs and caches, got {len(outputs)} and {len(caches)}"
        )
    xl = la.add_diag(x, params.lam)
    total = 0.0
    for i in range(k):
        u = outputs[i]
        resid = la.add_scaled(x, la.matmul(u, la.transpose(u)), -1.0)
        total += la.sumsq(resid)
        drift = la.add_scaled(params.blocks[i], la.matmul(xl, caches[i].u_in), -1.0)
        total += cfg.beta * la.sumsq(drift)
    if cfg.gamma_l1 > 0.0:
        total += cfg.gamma_l1 * la.abs_sum(outputs[-1])
    return total


def block_backward(cache, p, lam, grad_out):
    """Reverse-mode gradients through one block.

    With M = (u_in^T u_in + lam I)^-1 and G = grad_out gated by the ReLU
    mask, the inverse differentiates as dM = -M dA M, giving
        grad_p    = G M
        G_A       = -M (p^T G) M
        grad_u_in = u_in (G_A + G_A^T)
        grad_lam  = tr(G_A)
    Returns (grad_u_in, grad_p, grad_lambda).
    """
    if grad_out.rows != p.rows or grad_out.cols != p.cols:
        raise ShapeError(
            f"upstream gradient is {grad_out.rows}x{grad_out.cols}, "
            f"expected {p.rows}x{p.cols}"
        )
    g_pre = la.hadamard(grad_out, cache.mask)
    grad_p = la.matmul(g_pre, cache.inv)
    g_m = la.matmul(la.transpose(p), g_pre)
    g_a = la.scale(la.matmul(la.matmul(cache.inv, g_m), cache.inv), -1.0)
    grad_u_in = la.matmul(cache.u_in, la.add(g_a, la.transpose(g_a)))
    grad_lam = la.trace_of(g_a)
    return grad_u_in, grad_p, grad_lam


def net_backward(x, outputs, caches, params, cfg):
    """Gradients of `loss` for every P_i, lam, and (diagnostically) u0.

    Walks blocks last to first, combining each block's direct reconstruction
    gradient 4 (U_i U_i^T - X) U_i with the chained gradient from later
    blocks and the drift regularizer's contributions.
    """
    k = len(params.blocks)
    if len(outputs) != k or len(caches) != k:
        raise ShapeError(
            f"expected {k} outputs and caches, got {len(outputs)} and {len(caches)}"
        )
    xl = la.add_diag(x, params.lam)
    d_blocks = [None] * k
    d_lambda = 0.0
    g_u = None
    for i in reversed(range(k)):
        u = outputs[i]
        recon = la.matmul(la.add_scaled(la.matmul(u, la.transpose(u)), x, -1.0), u)
        g = la.scale(recon, 4.0)
        if i == k - 1 and cfg.gamma_l1 > 0.0:
            # subgradient of the l1 term: the output is nonnegative, so it
            # is gamma on the support and 0 elsewhere, which is the mask
            g = la.add_scaled(g, caches[i].mask, cfg.gamma_l1)
        if g_u is not None:
            g = la.add(g, g_u)
        grad_u_in, grad_p, grad_lam = block_backward(
            caches[i], params.blocks[i], params.lam, g
        )
        drift = la.add_scaled(params.blocks[i], la.matmul(xl, caches[i].u_in), -1.0)
        d_blocks[i] = la.add_scaled(grad_p, drift, 2.0 * cfg.beta)
        d_lambda += grad_lam - 2.0 * cfg.beta * la.dot_product(drift, caches[i].u_in)
        g_u = la.add_scaled(grad_u_in, la.matmul(xl, drift), -2.0 * cfg.beta)
    return NetGrads(d_blocks, d_lambda, g_u)


def adam_step(params, grads, state, cfg, lr=None):
    """One Adam update with bias correction on every P_i and on lam."""
    if lr is None:
        lr = cfg.lr
    if len(grads.d_blocks) != len(params.blocks):
        raise ShapeError("gradient/parameter block counts differ")
    t = state.step + 1
    b1, b2, eps = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t
    new_blocks = []
    new_m = []
    new_v = []
    for p, g, m, v in zip(params.blocks, grads.d_blocks, state.m_blocks, state.v_blocks):
        p2, m2, v2 = kernels.adam_update(
            p.size, p.data, g.data, m.data, v.data, lr, b1, b2, eps, bc1, bc2
        )
        new_blocks.append(la.DenseMatrix(p.rows, p.cols, p2))
        new_m.append(la.DenseMatrix(p.rows, p.cols, m2))
        new_v.append(la.DenseMatrix(p.rows, p.cols, v2))
    # lam follows the same formula as the kernel, scalar case
    g_lam = grads.d_lambda
    m_lam = b1 * state.m_lam + (1.0 - b1) * g_lam
    v_lam = b2 * state.v_lam + (1.0 - b2) * (g_lam * g_lam)
    lam = params.lam - lr * (m_lam / bc1) / (math.sqrt(v_lam / bc2) + eps)
    return (
        NetParams(new_blocks, max(lam, 1e-12)),
        AdamState(new_m, new_v, m_lam, v_lam, t),
    )


def project_lambda(lam, x, u0, a, eps, margin=1e-6):
    """Clamp lam above its stability lower bound.

    The bound is the larger of the proximality requirement a^2 + 4 a eps
    and the critical-point-preservation requirement
    0.5 (||X||_F + ||X - u0 u0^T||_F); margin keeps the inequality strict.
    """
    bound = combined_lambda_bound(x, u0, a, eps)
    return max(lam, bound + margin)


def train(x, u0, cfg):
    """Fit the network to one input matrix.

    lam starts at ||X||_F (or at lambda_override, then held fixed), the
    weights at their classical initialization. Every epoch runs forward,
    loss, backward, one Adam step, and the lam projection; the trace holds
    one record per epoch (epoch 0 is the untrained network) with the
    relative error of the final output and the current lam.
    """
    require_nonnegative(u0, "u0")
    asym = la.max_asymmetry(x)
    if asym > 1e-8:
        raise ValueError(f"input must be symmetric; max asymmetry {asym:g}")
    x_sumsq = la.sumsq(x)
    if x_sumsq == 0.0:
        raise ValueError("input matrix is all zero; relative error undefined")
    lam_trainable = cfg.lambda_override is None
    lam0 = la.fro_norm(x) if lam_trainable else cfg.lambda_override
    params = init_params(x, u0, lam0, cfg.num_blocks)
    state = AdamState.zeros_like(params)
    b_norm = la.spectral_norm(x)
    u0_fro = la.fro_norm(u0)
    trace = SolverTrace()
    start = time.perf_counter()
    for epoch in range(cfg.epochs + 1):
        outputs, caches = net_forward(u0, params)
        err = relative_sq_error(x, outputs[-1], x_sumsq)
        if not math.isfinite(err):
            raise DivergenceError(epoch)
        trace.append(
            TraceRecord(
                epoch,
                err,
                la.fro_norm(outputs[-1]),
                time.perf_counter() - start,
                params.lam,
            )
        )
        if epoch == cfg.epochs:
            break
        value = loss(x, outputs, caches, params, cfg)
        if not math.isfinite(value):
            raise DivergenceError(epoch)
        grads = net_backward(x, outputs, caches, params, cfg)
        if not lam_trainable:
            grads = NetGrads(grads.d_blocks, 0.0, grads.d_u0)
        lr_t = cfg.lr * cfg.lr_decay ** epoch
        params, state = adam_step(params, grads, state, cfg, lr=lr_t)
        if cfg.lambda_projection and lam_trainable:
            a = u0_fro
            for u in outputs:
                a = max(a, la.fro_norm(u))
            xl_norm = b_norm + params.lam
            xl = la.add_diag(x, params.lam)
            eps_meas = 0.0
            for p, cache in zip(params.blocks, caches):
                u_fro = la.fro_norm(cache.u_in)
                if u_fro == 0.0:
                    continue
                drift = la.fro_norm(la.add_scaled(p, la.matmul(xl, cache.u_in), -1.0))
                eps_meas = max(eps_meas, drift / (xl_norm * u_fro))
            params.lam = project_lambda(params.lam, x, u0, a, eps_meas)
    return params, trace


_MAGIC = b"SYMN"
_VERSION = 1
_HEADER = struct.Struct("<4sBIIId")


def save_checkpoint(params, path):
    """Write all weights and lam in the fixed little-endian binary layout."""
    n = params.blocks[0].rows
    r = params.blocks[0].cols
    k = len(params.blocks)
    buf = bytearray(_HEADER.pack(_MAGIC, _VERSION, n, r, k, params.lam))
    pack_block = struct.Struct(f"<{n * r}d")
    for p in params.blocks:
        buf += pack_block.pack(*p.data)
    with open(path, "wb") as fh:
        fh.write(bytes(buf))


def load_checkpoint(path):
    """Read a checkpoint back; exact inverse of save_checkpoint."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise CheckpointTruncatedError(
            f"file holds {len(data)} bytes, header needs {_HEADER.size}"
        )
    magic, version, n, r, k, lam = _HEADER.unpack_from(data, 0)
    if magic != _MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise CheckpointVersionError(f"version {version}, expected {_VERSION}")
    if n < 1 or r < 1 or k < 1:
        raise CheckpointShapeError(f"invalid dimensions n={n} r={r} k={k}")
    expected = _HEADER.size + k * n * r * 8
    if len(data) < expected:
        raise CheckpointTruncatedError(
            f"file holds {len(data)} bytes, dimensions require {expected}"
        )
    if len(data) > expected:
        raise CheckpointShapeError(
            f"{len(data) - expected} trailing bytes beyond the declared shape"
        )
    if not (math.isfinite(lam) and lam > 0.0):
        raise CheckpointError(f"lam must be positive and finite, got {lam}")
    unpack_block = struct.Struct(f"<{n * r}d")
    blocks = []
    offset = _HEADER.size
    for _ in range(k):
        values = unpack_block.unpack_from(data, offset)
        m = la.DenseMatrix.zeros(n, r)
        for i, value in enumerate(values):
            m.data[i] = value
        blocks.append(m)
        offset += unpack_block.size
    return NetParams(blocks, lam)
