"""Online precision (AUC-OP) and the offline ranking metrics.

Frames are indexed 1..N in the docstrings; arrays are 0-based.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata


class UndefinedMetricError(ValueError):
    """The metric is undefined for this input (e.g. no positive frames)."""


@dataclass
class LabeledSequence:
    annotator_counts: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        self.annotator_counts = np.asarray(self.annotator_counts, dtype=np.int64)
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.annotator_counts.shape != self.scores.shape or self.scores.ndim != 1:
            raise ValueError("annotator_counts and scores must be 1-D and of equal length")
        if np.any(self.annotator_counts < 0):
            raise ValueError("annotator counts must be nonnegative")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("scores must be finite")

    @property
    def N(self) -> int:
        return len(self.scores)

    def positives(self, threshold: int = 1) -> np.ndarray:
        return self.annotator_counts >= threshold


@dataclass
class MetricReport:
    auc_op: dict[float, float]
    precision: float | None
    auc_roc: float | None
    auc_pr: float | None
    curves: dict[float, list[tuple[float, float]]] = field(default_factory=dict)
    threshold: int = 1

    def to_dict(self) -> dict:
        return {
            "category_threshold": self.threshold,
            "auc_op": {str(d): v for d, v in self.auc_op.items()},
            "precision_at_half_recall": self.precision,
            "auc_roc": self.auc_roc,
            "auc_pr": self.auc_pr,
            "online_precision_curve": {str(d): [list(p) for p in c] for d, c in self.curves.items()},
        }


def rank_budget(delta: float, k) -> np.ndarray:
    """``ceil(delta * K)``, ignoring float noise just above an integer."""
    return np.ceil(np.asarray(delta * np.asarray(k, dtype=np.float64)) - 1e-9).astype(np.int64)


def _lookback_tables(seq: LabeledSequence, threshold: int, pessimistic: bool):
    """Cumulative counts looking back from each positive frame.

    For positive frame t and window length L (the L most recent frames ending
    at t), ``beaten[t][L]`` counts window frames ranked above t and
    ``pos[t][L]`` counts positive frames in the window.
    """
    labels = seq.positives(threshold)
    idx = np.flatnonzero(labels)
    if idx.size == 0:
        raise UndefinedMetricError("online precision needs at least one positive frame")
    N = seq.N
    beaten = np.zeros((idx.size, N + 1), dtype=np.int64)
    pos = np.zeros((idx.size, N + 1), dtype=np.int64)
    for row, t in enumerate(idx):
        window = seq.scores[t::-1]
        if pessimistic:
            above = window >= seq.scores[t]
            above[0] = False
        else:
            above = window > seq.scores[t]
        beaten[row, 1 : t + 2] = np.cumsum(above)
        pos[row, 1 : t + 2] = np.cumsum(labels[t::-1])
        beaten[row, t + 2 :] = beaten[row, t + 1]
        pos[row, t + 2 :] = pos[row, t + 1]
    return idx, beaten, pos


def _precision_for_lengths(tables, lengths: np.ndarray, delta: float) -> np.ndarray:
    idx, beaten, pos = tables
    L = np.minimum(lengths[None, :], idx[:, None] + 1)
    rows = np.arange(idx.size)[:, None]
    rank = 1 + beaten[rows, L]
    tp = rank <= rank_budget(delta, pos[rows, L])
    return tp.mean(axis=0)


def _check_delta(delta: float) -> None:
    if not delta >= 1:
        raise ValueError(f"delta must be >= 1, got {delta}")


def online_precision(seq: LabeledSequence, n: int, delta: float = 1.0, *, threshold: int = 1, pessimistic: bool = False) -> float:
    """Fraction of positive frames ranked within the top ``ceil(delta*K)`` of their trailing window.

    The window for frame t holds the ``min(n, t)`` frames ending at t and K is the
    number of positives in it. Frames after t are never consulted.
    """
    _check_delta(delta)
    if not 1 <= n <= seq.N:
        raise ValueError(f"n must lie in [1, {seq.N}], got {n}")
    tables = _lookback_tables(seq, threshold, pessimistic)
    return float(_precision_for_lengths(tables, np.array([n]), delta)[0])


def online_precision_curve(
    seq: LabeledSequence, delta: float = 1.0, *, threshold: int = 1, stride: int = 1, pessimistic: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """``(n, s(n))`` for ``n = 1, 1 + stride, ...`` up to N."""
    _check_delta(delta)
    if stride < 1:
        raise ValueError("stride must be >= 1")
    tables = _lookback_tables(seq, threshold, pessimistic)
    lengths = np.arange(1, seq.N + 1, stride)
    return lengths, _precision_for_lengths(tables, lengths, delta)


def auc_op(seq: LabeledSequence, delta: float = 1.0, *, threshold: int = 1, stride: int = 1, pessimistic: bool = False) -> float:
    """Area under the online-precision curve: the mean of s(n) over n = 1..N."""
    _, s = online_precision_curve(seq, delta, threshold=threshold, stride=stride, pessimistic=pessimistic)
    return float(s.mean())


def _binary(seq: LabeledSequence, threshold: int) -> np.ndarray:
    y = seq.positives(threshold)
    if y.all() or not y.any():
        raise UndefinedMetricError("ROC/PR metrics need both positive and negative frames")
    return y


def auc_roc(seq: LabeledSequence, threshold: int = 1) -> float:
    """Mann-Whitney rank statistic with average ranks for ties."""
    y = _binary(seq, threshold)
    ranks = rankdata(seq.scores)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def _pr_points(seq: LabeledSequence, threshold: int):
    # One operating point per distinct score, highest first; tied frames enter together.
    y = _binary(seq, threshold)
    order = np.argsort(-seq.scores, kind="mergesort")
    s = seq.scores[order]
    tp = np.cumsum(y[order])
    last = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tp = tp[last]
    predicted = last + 1
    return tp / y.sum(), tp / predicted


def precision_at_recall(seq: LabeledSequence, recall: float = 0.5, threshold: int = 1) -> float:
    """Precision at the first operating point whose recall reaches ``recall``."""
    rec, prec = _pr_points(seq, threshold)
    k = int(np.argmax(rec >= recall - 1e-12))
    return float(prec[k])


def auc_pr(seq: LabeledSequence, threshold: int = 1) -> float:
    """Area under the interpolated precision-recall curve.

    Interpolated precision at recall r is the best precision at any recall >= r.
    """
    rec, prec = _pr_points(seq, threshold)
    interp = np.maximum.accumulate(prec[::-1])[::-1]
    steps = np.diff(np.r_[0.0, rec])
    return float(np.sum(steps * interp))


def traditional_metrics(seq: LabeledSequence, threshold: int = 1, recall: float = 0.5) -> tuple[float, float, float]:
    return precision_at_recall(seq, recall, threshold), auc_roc(seq, threshold), auc_pr(seq, threshold)


def evaluate(seq: LabeledSequence, deltas=(1, 2, 3), *, threshold: int = 1, stride: int = 1, pessimistic: bool = False) -> MetricReport:
    aucs = {}
    curves = {}
    for delta in deltas:
        lengths, s = online_precision_curve(seq, delta, threshold=threshold, stride=stride, pessimistic=pessimistic)
        aucs[delta] = float(s.mean())
        curves[delta] = [(float(n / seq.N), float(v)) for n, v in zip(lengths, s)]
    try:
        precision, roc, pr = traditional_metrics(seq, threshold)
    except UndefinedMetricError:
        precision = roc = pr = None
    return MetricReport(aucs, precision, roc, pr, curves, threshold)


def read_labels(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a labels file: a header line, then ``index,annotator_count`` rows.

    Tab-separated files are accepted too.
    """
    text = Path(path).read_text()
    dialect = "excel-tab" if "\t" in text.splitlines()[0] else "excel"
    rows = list(csv.reader(text.splitlines(), dialect=dialect))
    body = [r for r in rows[1:] if r and any(cell.strip() for cell in r)]
    index = np.array([int(r[0]) for r in body], dtype=np.int64)
    counts = np.array([int(r[1]) for r in body], dtype=np.int64)
    return index, counts


def write_labels(path, index, counts) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "annotator_count"])
        for i, k in zip(index, counts):
            writer.writerow([int(i), int(k)])

