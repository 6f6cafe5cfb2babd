import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import auc_op_loop, auc_roc_pairs, online_precision_loop
from vismem.metrics import (
    LabeledSequence,
    UndefinedMetricError,
    auc_op,
    auc_pr,
    auc_roc,
    evaluate,
    online_precision,
    online_precision_curve,
    precision_at_recall,
    rank_budget,
    read_labels,
    write_labels,
)
from vismem.pipeline import read_scores

FIXTURES = Path(__file__).parent / "fixtures"


@st.composite
def sequences(draw, min_size=1, max_size=25):
    n = draw(st.integers(min_size, max_size))
    counts = draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    if not any(counts):
        counts[draw(st.integers(0, n - 1))] = 1
    # Few distinct values so ties are common.
    scores = draw(st.lists(st.integers(0, 6), min_size=n, max_size=n))
    return LabeledSequence(counts, [s / 6 for s in scores])


@settings(max_examples=60, deadline=None)
@given(sequences(), st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_online_precision_matches_window_loop(seq, delta):
    for n in range(1, seq.N + 1):
        expect = online_precision_loop(seq.annotator_counts, seq.scores, n, delta)
        assert online_precision(seq, n, delta) == pytest.approx(expect, abs=1e-12)


def test_frozen_fixture_matches_oracle_values():
    records = read_scores(FIXTURES / "eval_scores.jsonl")
    index, counts = read_labels(FIXTURES / "eval_labels.csv")
    assert list(index) == [r.index for r in records]
    seq = LabeledSequence(counts, [r.interestingness for r in records])
    expected = json.loads((FIXTURES / "eval_expected.json").read_text())
    for thr, by_delta in expected["auc_op"].items():
        for delta, value in by_delta.items():
            assert auc_op(seq, float(delta), threshold=int(thr)) == pytest.approx(value, abs=1e-12)
        assert auc_roc(seq, int(thr)) == pytest.approx(expected["auc_roc"][thr], abs=1e-12)


def test_window_of_one_is_always_correct():
    rng = np.random.default_rng(0)
    seq = LabeledSequence(rng.integers(0, 3, 40), rng.random(40))
    assert online_precision(seq, 1, 1.0) == 1.0


def test_vacuous_budget_gives_one():
    rng = np.random.default_rng(1)
    seq = LabeledSequence(np.r_[1, rng.integers(0, 2, 29)], rng.random(30))
    assert auc_op(seq, delta=30.0) == 1.0


def test_rank_budget_ceiling():
    assert list(rank_budget(1.5, [0, 1, 2, 3])) == [0, 2, 3, 5]
    assert rank_budget(3.0, 1) == 3


@settings(max_examples=40, deadline=None)
@given(sequences(min_size=2), st.sampled_from(["exp", "cube", "affine"]))
def test_invariant_under_monotone_transform(seq, kind):
    f = {"exp": np.exp, "cube": lambda s: s**3 + s, "affine": lambda s: 4 * s - 7}[kind]
    other = LabeledSequence(seq.annotator_counts, f(seq.scores))
    for delta in (1.0, 2.0):
        assert auc_op(other, delta) == auc_op(seq, delta)


@settings(max_examples=40, deadline=None)
@given(sequences(), st.integers(1, 10), st.integers(0, 100))
def test_appending_future_negatives_changes_nothing(seq, extra, seed):
    # Each decision only looks back, so frames appended after the end are invisible to it.
    rng = np.random.default_rng(seed)
    longer = LabeledSequence(np.r_[seq.annotator_counts, np.zeros(extra, int)], np.r_[seq.scores, rng.random(extra) * 10])
    _, s_short = online_precision_curve(seq, 1.0)
    _, s_long = online_precision_curve(longer, 1.0)
    assert np.array_equal(s_long[: seq.N], s_short)


def test_pessimistic_ties_never_score_higher():
    rng = np.random.default_rng(3)
    seq = LabeledSequence(rng.integers(0, 2, 50), rng.integers(0, 3, 50).astype(float))
    assert auc_op(seq, 1.0, pessimistic=True) <= auc_op(seq, 1.0)


def test_stride_subsamples_curve():
    rng = np.random.default_rng(4)
    seq = LabeledSequence(rng.integers(0, 2, 30), rng.random(30))
    n_all, s_all = online_precision_curve(seq, 2.0)
    n_sub, s_sub = online_precision_curve(seq, 2.0, stride=7)
    assert list(n_sub) == [1, 8, 15, 22, 29]
    assert np.array_equal(s_sub, s_all[n_sub - 1])


def test_no_positives_is_undefined():
    seq = LabeledSequence([0, 0, 0], [0.1, 0.2, 0.3])
    with pytest.raises(UndefinedMetricError):
        auc_op(seq)
    with pytest.raises(UndefinedMetricError):
        auc_roc(seq)


def test_bad_arguments():
    seq = LabeledSequence([1, 0], [0.1, 0.2])
    with pytest.raises(ValueError):
        auc_op(seq, delta=0.5)
    with pytest.raises(ValueError):
        online_precision(seq, 3)
    with pytest.raises(ValueError):
        LabeledSequence([1], [np.nan])


@settings(max_examples=60, deadline=None)
@given(sequences(min_size=2))
def test_auc_roc_matches_pair_count(seq):
    y = seq.positives()
    if y.all():
        return
    assert auc_roc(seq) == pytest.approx(auc_roc_pairs(y, seq.scores), abs=1e-12)


def test_null_predictor_is_near_half():
    rng = np.random.default_rng(5)
    seq = LabeledSequence(rng.integers(0, 2, 20000), rng.random(20000))
    assert auc_roc(seq) == pytest.approx(0.5, abs=0.02)


def test_pr_metrics_hand_example():
    # Sorted by score: P N P N; recall 0.5 reached at the first frame.
    seq = LabeledSequence([1, 0, 1, 0], [0.9, 0.8, 0.7, 0.1])
    assert precision_at_recall(seq, 0.5) == 1.0
    assert auc_pr(seq) == pytest.approx(0.5 * 1.0 + 0.5 * (2 / 3))


def test_pr_ties_enter_together():
    seq = LabeledSequence([1, 0, 1, 0], [0.5, 0.5, 0.2, 0.1])
    assert precision_at_recall(seq, 0.5) == 0.5


def test_perfect_ranking_scores_one():
    seq = LabeledSequence([0, 2, 0, 1, 0], [0.0, 2.0, 0.0, 1.0, 0.0])
    report = evaluate(seq, (1, 2, 3))
    assert report.auc_op == {1: 1.0, 2: 1.0, 3: 1.0}
    assert report.auc_roc == 1.0 and report.auc_pr == 1.0
    d = report.to_dict()
    assert d["online_precision_curve"]["1"][-1] == [1.0, 1.0]


def test_labels_round_trip_and_tab_input(tmp_path):
    write_labels(tmp_path / "l.csv", [0, 1, 5], [0, 2, 1])
    index, counts = read_labels(tmp_path / "l.csv")
    assert list(index) == [0, 1, 5] and list(counts) == [0, 2, 1]
    (tmp_path / "l.tsv").write_text("index\tannotator_count\n3\t1\n")
    index, counts = read_labels(tmp_path / "l.tsv")
    assert list(index) == [3] and list(counts) == [1]


def test_loop_oracle_sanity():
    # Hand check: positives at t=1 (score 0.2, beaten by t=0) and t=2 (top).
    counts, scores = [0, 1, 1], [0.5, 0.2, 0.9]
    assert online_precision_loop(counts, scores, 3, 1.0) == 0.5
    assert online_precision_loop(counts, scores, 3, 2.0) == 1.0
    assert auc_op_loop(counts, scores, 1.0) == pytest.approx((1 + 0.5 + 0.5) / 3)
