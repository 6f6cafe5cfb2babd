"""Seeded synthetic feature streams for tests, ablations and the bundled fixture.

Feature tensors are drawn at ``FEATURE_SCALE`` times a standard normal so that,
like real CNN activations, they dominate the small fan-in scaled memory
initialisation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import circular_shift

FEATURE_SCALE = 10.0


def random_feature(rng: np.random.Generator, shape, scale: float = FEATURE_SCALE) -> np.ndarray:
    return (scale * rng.standard_normal(shape)).astype(np.float32)


@dataclass
class SyntheticSuite:
    corpus: list[np.ndarray]  # uninteresting samples for short-term learning
    stream: list[np.ndarray]  # mission frames, in order
    counts: np.ndarray  # annotator votes per stream frame


def _walk(rng, scenes, order, length, shape, noise, counts=None, known=()):
    """Drifting, noisy views of ``scenes`` visited in ``order`` in equal segments."""
    _, h, w = shape
    segment = max(1, length // len(order))
    seen = set(known)
    frames = []
    shift = rng.integers(0, (h, w))
    for t in range(length):
        scene_id = order[min(t // segment, len(order) - 1)]
        if scene_id not in seen:
            seen.add(scene_id)
            if counts is not None:
                counts[t] = max(counts[t], 1)
        if rng.random() < 0.3:
            shift = shift + rng.integers(-1, 2, size=2)
        view = circular_shift(scenes[scene_id], shift % (h, w)) + random_feature(rng, shape, FEATURE_SCALE * noise)
        frames.append(view.astype(np.float32))
    return frames


def make_suite(
    seed: int = 0,
    shape: tuple[int, int, int] = (8, 8, 8),
    n_scenes: int = 4,
    corpus_size: int = 64,
    length: int = 200,
    n_events: int = 8,
    n_new_scenes: int = 2,
    noise: float = 0.3,
    shared: float = 0.0,
) -> SyntheticSuite:
    """A robot-like stream drifting through known scenes with novel events.

    The short-term corpus is a drifting walk through the ``n_scenes`` known
    scenes. The mission stream walks through them again, starting at other
    translations, with ``n_new_scenes`` unseen scenes spliced in and
    ``n_events`` two-frame events that superimpose an unseen object.
    Annotator counts: 2 votes on the first frame of an event, 1 on its second
    frame and on the first frame of a new scene.
    """
    rng = np.random.default_rng(seed)
    base = random_feature(rng, shape)
    scenes = [
        (np.sqrt(shared) * base + np.sqrt(1.0 - shared) * random_feature(rng, shape)).astype(np.float32)
        for _ in range(n_scenes + n_new_scenes)
    ]
    corpus = _walk(rng, scenes, list(rng.permutation(n_scenes)), corpus_size, shape, noise)

    order = list(rng.permutation(n_scenes))
    new_at = sorted(rng.choice(np.arange(1, n_scenes + 1), size=n_new_scenes, replace=True))
    for offset, k in enumerate(new_at):
        order.insert(k + offset, n_scenes + offset)
    counts = np.zeros(length, dtype=np.int64)
    stream = _walk(rng, scenes, order, length, shape, noise, counts, known=range(n_scenes))

    starts = np.sort(rng.choice(np.arange(5, length - 2), size=n_events, replace=False))
    for t in starts:
        obj = random_feature(rng, shape)
        for k, votes in ((0, 2), (1, 1)):
            stream[t + k] = (0.4 * stream[t + k] + 0.6 * obj).astype(np.float32)
            counts[t + k] = max(counts[t + k], votes)
    return SyntheticSuite(corpus, stream, counts)
