"""Slow reference implementations used as test oracles."""
import math

import numpy as np


def online_precision_loop(counts, scores, n, delta, threshold=1):
    """Exhaustive window enumeration, one positive frame at a time."""
    counts = list(counts)
    scores = list(scores)
    tp = fp = 0
    for t in range(len(scores)):
        if counts[t] < threshold:
            continue
        window = range(max(0, t - n + 1), t + 1)
        rank = 1 + sum(1 for j in window if scores[j] > scores[t])
        k = sum(1 for j in window if counts[j] >= threshold)
        if rank <= math.ceil(delta * k):
            tp += 1
        else:
            fp += 1
    return tp / (tp + fp)


def auc_op_loop(counts, scores, delta, threshold=1):
    N = len(scores)
    return sum(online_precision_loop(counts, scores, n, delta, threshold) for n in range(1, N + 1)) / N


def auc_roc_pairs(labels, scores):
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))


def cell_discrepancy_loop(x, r):
    c, h, w = x.shape
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            a = x[:, i, j].astype(np.float64)
            b = r[:, i, j].astype(np.float64)
            na, nb = math.sqrt(float(a @ a)), math.sqrt(float(b @ b))
            out[i, j] = 0.0 if na == 0 or nb == 0 else 1.0 - max(-1.0, min(1.0, float(a @ b) / (na * nb)))
    return out
