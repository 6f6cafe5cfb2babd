"""Data series for the memory ablations: write sparsity, capacity, usage balancing,
loss of interest and translation recall."""
from __future__ import annotations

import numpy as np

from .memory import init_memory, read, reading_accuracy, write, write_nonsparse
from .numerics import circular_shift
from .metrics import LabeledSequence, auc_op
from .pipeline import online_step, short_term_learn
from .synthetic import make_suite, random_feature


def _accuracy(bank, f) -> float:
    return reading_accuracy(read(bank, f).recalled, f)


def two_tensor_protocol(
    n: int = 100,
    shape=(8, 8, 8),
    repeats: int = 5,
    mode: str = "sparse",
    gamma: float = 5.0,
    seed: int = 0,
) -> dict:
    """Write f1, then f2, then f1 again, ``repeats`` times each; track both reading accuracies.

    ``mode`` is ``"sparse"`` (tangent weights with usage balancing),
    ``"no-usage"`` (tangent weights only) or ``"nonsparse"`` (``softmax(gamma * D)``).
    """
    rng = np.random.default_rng(seed)
    f1 = random_feature(rng, shape)
    f2 = random_feature(rng, shape)
    bank = init_memory(n, *shape, gamma_w=gamma, gamma_r=gamma, seed=seed)
    phases, acc1, acc2 = [], [], []
    for phase, f in (("f1", f1), ("f2", f2), ("f1-again", f1)):
        for _ in range(repeats):
            if mode == "sparse":
                write(bank, f, inplace=True)
            elif mode == "no-usage":
                write(bank, f, use_usage=False, inplace=True)
            elif mode == "nonsparse":
                write_nonsparse(bank, f, gamma, inplace=True)
            else:
                raise ValueError(f"unknown write mode {mode!r}")
            phases.append(phase)
            acc1.append(_accuracy(bank, f1))
            acc2.append(_accuracy(bank, f2))
    return {"n": n, "mode": mode, "phase": phases, "f1": acc1, "f2": acc2}


def writing_sparsity(seed: int = 0, n: int = 100, shape=(8, 8, 8), gamma: float = 5.0) -> dict:
    return {mode: two_tensor_protocol(n, shape, mode=mode, gamma=gamma, seed=seed) for mode in ("sparse", "nonsparse")}


def memory_capacity(seed: int = 0, sizes=(2, 100), shape=(8, 8, 8)) -> dict:
    return {n: two_tensor_protocol(n, shape, mode="no-usage", seed=seed) for n in sizes}


def usage_vector(seed: int = 0, n: int = 2, shape=(8, 8, 8)) -> dict:
    return {
        "with-usage": two_tensor_protocol(n, shape, mode="sparse", seed=seed),
        "without-usage": two_tensor_protocol(n, shape, mode="no-usage", seed=seed),
    }


def loss_of_interest(
    seed: int = 0,
    rates=(1.0, 0.2),
    n: int = 100,
    shape=(8, 8, 8),
    a_frames: int = 10,
    b_frames: int = 8,
) -> dict:
    """Online scores on a stream of ``A`` repeated, then ``B`` repeated, per writing rate."""
    rng = np.random.default_rng(seed)
    a = random_feature(rng, shape)
    b = random_feature(rng, shape)
    out = {}
    for rate in rates:
        bank = init_memory(n, *shape, gamma_w=rate, gamma_r=5.0, seed=seed)
        scores = []
        for t, x in enumerate([a] * a_frames + [b] * b_frames):
            bank, record, _ = online_step(bank, x, t, inplace=True)
            scores.append(record.interestingness)
        out[rate] = {"A": scores[:a_frames], "B": scores[a_frames:]}
    return out


def translation_recall(seed: int = 0, n: int = 100, shape=(8, 8, 8), writes: int = 5) -> dict:
    """Write ``x`` repeatedly, then read every circular shift of it."""
    rng = np.random.default_rng(seed)
    x = random_feature(rng, shape)
    bank = init_memory(n, *shape, seed=seed)
    for _ in range(writes):
        write(bank, x, inplace=True)
    _, h, w = shape
    rows = []
    for p in range(h):
        for q in range(w):
            rr = read(bank, circular_shift(x, (p, q)))
            top = rr.shifts[rr.top_cube]
            rows.append({"shift": (p, q), "confidence": rr.confidence, "recovered": (top.x, top.y)})
    return {"rows": rows}


def short_term_insensitivity(
    seed: int = 0,
    n_seeds: int = 32,
    epochs=(1, 5),
    deltas=(1.0, 2.0, 3.0),
    thresholds=(1, 2),
    n: int = 100,
    shared: float = 0.3,
    length: int = 400,
    n_events: int = 16,
) -> dict:
    """Suite-mean online AUC-OP after a fixed number of short-term epochs.

    Each of ``n_seeds`` synthetic missions (seeds ``seed .. seed + n_seeds - 1``)
    is learned for exactly ``e`` epochs, then scored online. Early stopping is
    disabled so the epoch count is the only variable.
    """
    results = {e: {t: {d: [] for d in deltas} for t in thresholds} for e in epochs}
    for s in range(seed, seed + n_seeds):
        suite = make_suite(s, length=length, n_events=n_events, shared=shared)
        for e in epochs:
            bank = init_memory(n, *suite.corpus[0].shape, seed=s)
            bank, _ = short_term_learn(bank, suite.corpus, max_epochs=e, acc_threshold=2.0, patience=e + 1, inplace=True)
            scores = []
            for t, x in enumerate(suite.stream):
                bank, record, _ = online_step(bank, x, t, inplace=True)
                scores.append(record.interestingness)
            seq = LabeledSequence(suite.counts, scores)
            for t in thresholds:
                for d in deltas:
                    results[e][t][d].append(auc_op(seq, d, threshold=t))
    mean = {e: {t: {d: float(np.mean(v)) for d, v in by_d.items()} for t, by_d in by_t.items()} for e, by_t in results.items()}
    lo, hi = min(epochs), max(epochs)
    diffs = [abs(mean[hi][t][d] - mean[lo][t][d]) for t in thresholds for d in deltas]
    return {"mean_auc_op": mean, "max_abs_diff": max(diffs), "seeds": list(range(seed, seed + n_seeds))}


SUITES = {
    "writing": writing_sparsity,
    "capacity": memory_capacity,
    "usage": usage_vector,
    "interest": loss_of_interest,
    "translation": translation_recall,
    "short-term": short_term_insensitivity,
}
