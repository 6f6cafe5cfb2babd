"""scikit-learn style wrappers around the encoder and the visual memory.

``FilterBankEncoder`` is a stateless transformer from RGB frames to feature
cubes. ``VisualMemory`` learns a background with ``fit`` (short-term learning),
adapts online with ``partial_fit`` and scores frames with ``score_stream``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .encoder import EncoderSpec, encode
from .memory import init_memory, read
from .pipeline import online_step, short_term_learn


def check_cubes(X, shape=None) -> np.ndarray:
    """Validate a batch of feature cubes: finite, 4-D ``(n_samples, c, h, w)``, nonempty."""
    X = np.asarray(X, dtype=np.float32)
    if X.ndim == 3:
        X = X[None]
    if X.ndim != 4 or X.shape[0] == 0 or min(X.shape[1:]) < 1:
        raise ValueError(f"expected a nonempty array of shape (n_samples, c, h, w), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature cubes contain NaN or infinity")
    if shape is not None and X.shape[1:] != tuple(shape):
        raise ValueError(f"cubes of shape {X.shape[1:]} do not match the fitted shape {tuple(shape)}")
    return X


def check_frames(X) -> list[np.ndarray]:
    """Accept one ``(H, W, 3)`` frame, a stacked batch, or a list of frames."""
    if isinstance(X, np.ndarray) and X.ndim == 3:
        X = [X]
    frames = [np.asarray(f) for f in X]
    for f in frames:
        if f.ndim not in (2, 3) or (f.ndim == 3 and f.shape[2] != 3):
            raise ValueError(f"frames must be (H, W) or (H, W, 3), got {f.shape}")
    return frames


class FilterBankEncoder(TransformerMixin, BaseEstimator):
    """Fixed random filter bank encoder; ``fit`` is a no-op."""

    def __init__(self, n_channels=64, grid=(12, 12), resize=(192, 192), kernel_size=5, random_state=0):
        self.n_channels = n_channels
        self.grid = grid
        self.resize = resize
        self.kernel_size = kernel_size
        self.random_state = random_state

    def _spec(self) -> EncoderSpec:
        return EncoderSpec(
            c=self.n_channels,
            h=self.grid[0],
            w=self.grid[1],
            seed=self.random_state,
            resize=tuple(self.resize),
            kernel=self.kernel_size,
        ).validate()

    def fit(self, X=None, y=None):
        self.spec_ = self._spec()
        return self

    def transform(self, X):
        spec = getattr(self, "spec_", None) or self._spec()
        return np.stack([encode(spec, f) for f in check_frames(X)])


class VisualMemory(BaseEstimator):
    """Translation-invariant visual memory with online interestingness scoring.

    Parameters
    ----------
    n_cubes : int
        Memory capacity.
    writing_rate, reading_rate : float
        Sharpness of the write and read addressing.
    max_epochs, acc_threshold, patience :
        Short-term learning stop rules used by ``fit``.
    random_state : int
        Seed for the memory initialisation.
    """

    def __init__(
        self,
        n_cubes=100,
        writing_rate=5.0,
        reading_rate=5.0,
        max_epochs=10,
        acc_threshold=0.98,
        patience=3,
        random_state=0,
    ):
        self.n_cubes = n_cubes
        self.writing_rate = writing_rate
        self.reading_rate = reading_rate
        self.max_epochs = max_epochs
        self.acc_threshold = acc_threshold
        self.patience = patience
        self.random_state = random_state

    def _init_bank(self, shape):
        return init_memory(self.n_cubes, *shape, gamma_w=self.writing_rate, gamma_r=self.reading_rate, seed=self.random_state)

    def fit(self, X, y=None):
        """Short-term learning on uninteresting samples ``X``; resets the memory."""
        X = check_cubes(X)
        self.bank_, self.report_ = short_term_learn(
            self._init_bank(X.shape[1:]),
            list(X),
            max_epochs=self.max_epochs,
            acc_threshold=self.acc_threshold,
            patience=self.patience,
            inplace=True,
        )
        self.n_features_in_ = int(np.prod(X.shape[1:]))
        return self

    def partial_fit(self, X, y=None):
        """Online learning: score then write each sample of ``X`` in order."""
        self.score_stream(X)
        return self

    def score_stream(self, X) -> np.ndarray:
        """Interestingness in [0, 1] for each sample, learning as it goes.

        Each sample is read before it is written, so a score only depends on the
        samples before it. An unfitted estimator starts from a fresh memory.
        """
        X = check_cubes(X, self.bank_.cube_shape if hasattr(self, "bank_") else None)
        if not hasattr(self, "bank_"):
            self.bank_ = self._init_bank(X.shape[1:])
            self.n_features_in_ = int(np.prod(X.shape[1:]))
        scores = np.empty(len(X))
        for i, x in enumerate(X):
            _, record, _ = online_step(self.bank_, x, i, inplace=True)
            scores[i] = record.interestingness
        return scores

    def transform(self, X) -> np.ndarray:
        """Recalled cubes for each sample; the memory is not updated."""
        check_is_fitted(self, "bank_")
        X = check_cubes(X, self.bank_.cube_shape)
        return np.stack([read(self.bank_, x).recalled.astype(np.float32) for x in X])

    def score_samples(self, X) -> np.ndarray:
        """Reading confidence (higher means more familiar); the memory is not updated."""
        check_is_fitted(self, "bank_")
        X = check_cubes(X, self.bank_.cube_shape)
        return np.array([read(self.bank_, x).confidence for x in X])
