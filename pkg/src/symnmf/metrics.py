"""Evaluation quantities for factor quality and clustering agreement."""

import math
from collections import Counter
from dataclasses import dataclass

from scipy.optimize import linear_sum_assignment

from . import linalg as la


@dataclass
class ClusteringResult:
    predicted: list
    accuracy: float = None
    nmi: float = None
    purity: float = None
    sparse_factor: float = None

    def to_text(self):
        lines = [f"predicted: {' '.join(str(p) for p in self.predicted)}"]
        for name in ("accuracy", "nmi", "purity", "sparse_factor"):
            value = getattr(self, name)
            if value is not None:
                lines.append(f"{name}: {value:.17g}")
        return "\n".join(lines) + "\n"


def relative_error(x, u):
    """||X - U U^T||_F^2 / ||X||_F^2."""
    x_sumsq = la.sumsq(x)
    if x_sumsq == 0.0:
        raise ValueError("input matrix is all zero; relative error undefined")
    resid = la.add_scaled(x, la.matmul(u, la.transpose(u)), -1.0)
    return la.sumsq(resid) / x_sumsq


def assign_labels(u):
    """Per-row argmax column index; ties go to the lowest index."""
    labels = []
    for i in range(u.rows):
        best = 0
        best_val = u.get(i, 0)
        for j in range(1, u.cols):
            v = u.get(i, j)
            if v > best_val:
                best = j
                best_val = v
        labels.append(best)
    return labels


def _check_labels(pred, truth):
    if len(pred) == 0 or len(truth) == 0:
        raise ValueError("label vectors must be nonempty")
    if len(pred) != len(truth):
        raise ValueError(
            f"label vectors differ in length: {len(pred)} vs {len(truth)}"
        )


def _contingency(pred, truth):
    """Counts table as a dict plus the index maps for each label set."""
    pred_ids = {lab: i for i, lab in enumerate(sorted(set(pred), key=repr))}
    truth_ids = {lab: i for i, lab in enumerate(sorted(set(truth), key=repr))}
    counts = Counter((pred_ids[p], truth_ids[t]) for p, t in zip(pred, truth))
    return counts, len(pred_ids), len(truth_ids)


def accuracy(pred, truth):
    """Best-matching fraction of agreeing labels over all cluster renamings,
    via optimal assignment on the contingency table."""
    _check_labels(pred, truth)
    counts, np_, nt = _contingency(pred, truth)
    table = [[0] * nt for _ in range(np_)]
    for (i, j), c in counts.items():
        table[i][j] = c
    rows, cols = linear_sum_assignment(table, maximize=True)
    matched = sum(table[i][j] for i, j in zip(rows, cols))
    return matched / len(pred)


def nmi(pred, truth):
    """Mutual information over the geometric mean of entropies, natural log.

    Two identical single-cluster partitions score 1; if exactly one side is
    a single cluster the score is 0.
    """
    _check_labels(pred, truth)
    n = len(pred)
    counts, np_, nt = _contingency(pred, truth)
    pc = Counter(p for p, _ in counts.elements())
    tc = Counter(t for _, t in counts.elements())
    h_p = -sum((c / n) * math.log(c / n) for c in pc.values() if c > 0)
    h_t = -sum((c / n) * math.log(c / n) for c in tc.values() if c > 0)
    if h_p == 0.0 and h_t == 0.0:
        return 1.0
    if h_p == 0.0 or h_t == 0.0:
        return 0.0
    mi = 0.0
    for (i, j), c in counts.items():
        pij = c / n
        mi += pij * math.log(pij * n * n / (pc[i] * tc[j]))
    if mi <= 0.0:
        return 0.0
    value = mi / math.sqrt(h_p * h_t)
    return min(value, 1.0)


def purity(pred, truth):
    """Fraction of samples sitting in their predicted cluster's majority
    ground-truth class."""
    _check_labels(pred, truth)
    counts, np_, nt = _contingency(pred, truth)
    best = {}
    for (i, j), c in counts.items():
        if c > best.get(i, 0):
            best[i] = c
    return sum(best.values()) / len(pred)


def sparse_factor(u):
    """Fraction of entries whose magnitude strictly exceeds 0.01 times the
    mean entry."""
    if u.size == 0:
        raise ValueError("matrix must be nonempty")
    mean = sum(u.data) / u.size
    threshold = 0.01 * mean
    above = sum(1 for v in u.data if abs(v) > threshold)
    return above / u.size
