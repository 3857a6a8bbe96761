"""Similarity-graph construction and synthetic planted instances.

build_similarity turns a samples x features matrix into a symmetric
nonnegative affinity matrix (self-tuning Gaussian kernel on a kNN graph,
optionally degree-normalized). synth_planted builds symmetric matrices with
known cluster structure so solver quality can be asserted exactly.
"""

import math
import random
import warnings
from dataclasses import dataclass

from . import linalg as la

# floor for self-tuning bandwidths when duplicate points collapse them
_SIGMA_FLOOR = 1e-12


@dataclass
class SimilarityConfig:
    k_neighbors: int = 7
    self_tuning: bool = True
    normalize: bool = True

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError(f"k_neighbors must be >= 1, got {self.k_neighbors}")


@dataclass
class PlantedInstance:
    x: la.DenseMatrix
    labels: list
    r: int


def _pairwise_sq_distances(m):
    """n x n matrix of squared Euclidean row distances via the Gram matrix."""
    g = la.matmul(m, la.transpose(m))
    n = m.rows
    d2 = la.DenseMatrix.zeros(n, n)
    for i in range(n):
        gii = g.get(i, i)
        for j in range(i + 1, n):
            val = gii + g.get(j, j) - 2.0 * g.get(i, j)
            if val < 0.0:
                val = 0.0
            d2.set(i, j, val)
            d2.set(j, i, val)
    return d2


def build_similarity(m, cfg):
    """Affinity matrix for the rows of m.

    Keeps an edge when either endpoint ranks the other among its
    k_neighbors nearest; edge weight exp(-d^2/(sigma_i sigma_j)) with
    sigma_i the distance to the k-th neighbor (self-tuning) or the global
    median pairwise distance. Diagonal is zero. With normalize on, the
    result is D^-1/2 A D^-1/2.
    """
    n = m.rows
    if n < cfg.k_neighbors + 1:
        raise ValueError(
            f"need at least k_neighbors+1 = {cfg.k_neighbors + 1} rows, got {n}"
        )
    d2 = _pairwise_sq_distances(m)
    k = cfg.k_neighbors

    # per-row neighbor ranking by squared distance, self excluded; ties
    # resolved by index so the graph is deterministic
    order = []
    for i in range(n):
        others = sorted((d2.get(i, j), j) for j in range(n) if j != i)
        order.append([j for _, j in others])

    if cfg.self_tuning:
        sigma = [math.sqrt(d2.get(i, order[i][k - 1])) for i in range(n)]
    else:
        alldists = sorted(
            math.sqrt(d2.get(i, j)) for i in range(n) for j in range(i + 1, n)
        )
        mid = len(alldists) // 2
        if len(alldists) % 2 == 1:
            med = alldists[mid]
        else:
            med = 0.5 * (alldists[mid - 1] + alldists[mid])
        sigma = [med] * n

    floored = sum(1 for s in sigma if s < _SIGMA_FLOOR)
    if floored:
        warnings.warn(
            f"{floored} bandwidth(s) hit the {_SIGMA_FLOOR:g} floor "
            "(duplicate points)",
            RuntimeWarning,
            stacklevel=2,
        )
        sigma = [max(s, _SIGMA_FLOOR) for s in sigma]

    neighbor = [set(order[i][:k]) for i in range(n)]
    a = la.DenseMatrix.zeros(n, n)
    for i in range(n):
        for j in range(i + 1, n):
            if j in neighbor[i] or i in neighbor[j]:
                w = math.exp(-d2.get(i, j) / (sigma[i] * sigma[j]))
                a.set(i, j, w)
                a.set(j, i, w)

    if cfg.normalize:
        deg = [0.0] * n
        for i in range(n):
            deg[i] = sum(a.get(i, j) for j in range(n))
        scale = [1.0 / math.sqrt(d) if d > 0.0 else 0.0 for d in deg]
        for i in range(n):
            for j in range(i + 1, n):
                w = a.get(i, j) * scale[i] * scale[j]
                a.set(i, j, w)
                a.set(j, i, w)
    return a


def planted_factor(n, r):
    """Cluster-indicator factor with balanced sizes and unit columns."""
    if r < 1 or r > n:
        raise ValueError(f"r must be in [1, {n}], got {r}")
    base = n // r
    extra = n % r
    sizes = [base + 1 if c < extra else base for c in range(r)]
    u = la.DenseMatrix.zeros(n, r)
    labels = []
    row = 0
    for c, size in enumerate(sizes):
        val = 1.0 / math.sqrt(size)
        for _ in range(size):
            u.set(row, c, val)
            labels.append(c)
            row += 1
    return u, labels


def synth_planted(n, r, noise, seed=0):
    """Symmetric nonnegative matrix with r planted clusters.

    X = U* U*^T plus a symmetric uniform perturbation whose entries are
    scaled by noise times the mean entry of the clean signal, clipped to
    stay nonnegative. noise is therefore a relative perturbation level.
    """
    if noise < 0.0:
        raise ValueError(f"noise must be nonnegative, got {noise}")
    u_star, labels = planted_factor(n, r)
    x = la.matmul(u_star, la.transpose(u_star))
    if noise > 0.0:
        rng = random.Random(seed)
        mean = sum(x.data) / x.size
        amp = noise * mean
        for i in range(n):
            for j in range(i, n):
                bump = amp * (2.0 * rng.random() - 1.0)
                v = x.get(i, j) + bump
                if v < 0.0:
                    v = 0.0
                x.set(i, j, v)
                x.set(j, i, v)
    return PlantedInstance(x, labels, r)
