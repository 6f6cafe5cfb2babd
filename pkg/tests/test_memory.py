import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vismem.memory import (
    SnapshotDimensionError,
    SnapshotMagicError,
    SnapshotTruncatedError,
    balance_usage,
    content_similarity,
    init_memory,
    read,
    restore,
    snapshot,
    write,
    writing_vector,
)
from vismem.numerics import DegenerateInputError, circular_shift, cosine_similarity, sparse_softmax
from vismem.synthetic import random_feature


def test_init_bounds_and_determinism():
    bank = init_memory(5, 3, 4, 4, seed=7)
    bound = np.sqrt(6.0 / 48)
    assert bank.cubes.dtype == np.float32 and bank.cubes.shape == (5, 3, 4, 4)
    assert np.all(np.abs(bank.cubes) <= bound)
    assert np.all(bank.usage == 0)
    assert init_memory(5, 3, 4, 4, seed=7) == bank
    assert not (init_memory(5, 3, 4, 4, seed=8) == bank)


@pytest.mark.parametrize("dims", [(0, 1, 1, 1), (1, 1, 0, 1), (2.5, 1, 1, 1)])
def test_init_rejects_bad_dims(dims):
    with pytest.raises(ValueError):
        init_memory(*dims)


def test_balance_usage_closed_form():
    # Equal content scores, first cube 90% used: weight 0.5 * 0.1 vs 0.5, renormalised.
    weights = sparse_softmax([0.5, 0.5], 5.0)
    out = balance_usage(weights, np.array([0.9, 0.0]))
    assert out == pytest.approx([1 / 11, 10 / 11], abs=1e-12)


def test_balance_usage_is_identity_when_full():
    w = np.array([0.7, 0.2, 0.1])
    assert np.array_equal(balance_usage(w, np.ones(3)), w)


def test_balance_usage_keeps_weights_when_all_mass_is_saturated():
    w = np.array([1.0 - 1e-9, 0.0, 0.0])
    out = balance_usage(w, np.array([1.0, 0.0, 0.0]))
    assert np.array_equal(out, w)


def test_write_is_a_convex_update():
    rng = np.random.default_rng(0)
    bank = init_memory(6, 2, 3, 3, seed=0)
    x = random_feature(rng, (2, 3, 3))
    w = writing_vector(bank, x)
    out = write(bank, x)
    expect = (1 - w)[:, None, None, None] * bank.cubes + w[:, None, None, None] * x
    assert np.allclose(out.cubes, expect, atol=1e-5)
    assert np.allclose(out.usage, (1 - w) * bank.usage + w, atol=1e-6)
    assert out.step == bank.step + 1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 8))
def test_usage_stays_in_unit_interval(seed, writes):
    rng = np.random.default_rng(seed)
    bank = init_memory(4, 2, 3, 3, seed=seed)
    for _ in range(writes):
        write(bank, random_feature(rng, (2, 3, 3)), inplace=True)
        w = writing_vector(bank, random_feature(rng, (2, 3, 3)))
        assert w.sum() == pytest.approx(1.0) and np.all(w >= 0)
    assert np.all((bank.usage >= 0) & (bank.usage <= 1))


def test_write_without_inplace_leaves_input():
    rng = np.random.default_rng(1)
    bank = init_memory(3, 2, 4, 4)
    before = bank.copy()
    write(bank, random_feature(rng, (2, 4, 4)))
    assert bank == before


def test_read_does_not_mutate():
    rng = np.random.default_rng(2)
    bank = init_memory(5, 2, 4, 4)
    write(bank, random_feature(rng, (2, 4, 4)), inplace=True)
    before = bank.copy()
    read(bank, random_feature(rng, (2, 4, 4)))
    assert bank == before


def test_caches_equal_fresh_computation():
    rng = np.random.default_rng(3)
    bank = init_memory(4, 2, 5, 6)
    read(bank, random_feature(rng, (2, 5, 6)))
    for _ in range(5):
        write(bank, random_feature(rng, (2, 5, 6)), inplace=True)
    fresh = restore(snapshot(bank))
    assert np.array_equal(bank.spectrum, fresh.spectrum)
    assert np.array_equal(bank.norms, fresh.norms)


def test_resuming_from_snapshot_is_bit_exact():
    rng = np.random.default_rng(11)
    frames = [random_feature(rng, (3, 6, 6)) for _ in range(20)]
    live = init_memory(8, 3, 6, 6)
    confs = []
    for i, x in enumerate(frames):
        if i == 10:
            resumed = restore(snapshot(live))
        confs.append(read(live, x).confidence)
        write(live, x, inplace=True)
    for x, expect in zip(frames[10:], confs[10:]):
        assert read(resumed, x).confidence == expect
        write(resumed, x, inplace=True)
    assert resumed == live


def test_read_recovers_shift_of_written_cube():
    rng = np.random.default_rng(4)
    x = random_feature(rng, (3, 6, 6))
    bank = init_memory(10, 3, 6, 6)
    for _ in range(5):
        write(bank, x, inplace=True)
    rr = read(bank, circular_shift(x, (2, 5)))
    assert rr.shifts[rr.top_cube] == (2, 5)
    assert rr.confidence > 0.99
    assert cosine_similarity(rr.recalled, circular_shift(x, (2, 5))) > 0.99


def test_content_similarity_matches_cosine():
    rng = np.random.default_rng(5)
    bank = init_memory(4, 2, 3, 3)
    x = random_feature(rng, (2, 3, 3))
    sims = content_similarity(bank, x)
    for i in range(4):
        assert sims[i] == pytest.approx(cosine_similarity(bank.cubes[i], x))


def test_input_validation():
    bank = init_memory(2, 2, 3, 3)
    with pytest.raises(ValueError):
        read(bank, np.ones((2, 3, 4)))
    with pytest.raises(DegenerateInputError):
        write(bank, np.zeros((2, 3, 3)))


def test_snapshot_round_trip_preserves_state():
    rng = np.random.default_rng(6)
    bank = init_memory(3, 2, 4, 5, gamma_w=1.3, gamma_r=0.7, seed=9)
    write(bank, random_feature(rng, (2, 4, 5)), inplace=True)
    back = restore(snapshot(bank))
    assert back == bank
    assert snapshot(back) == snapshot(bank)


def test_snapshot_errors():
    data = snapshot(init_memory(2, 1, 2, 2))
    with pytest.raises(SnapshotMagicError):
        restore(b"XXXX" + data[4:])
    with pytest.raises(SnapshotTruncatedError):
        restore(data[:10])
    with pytest.raises(SnapshotTruncatedError):
        restore(data[:-1])
    with pytest.raises(SnapshotDimensionError):
        restore(data + b"\0\0\0\0")
