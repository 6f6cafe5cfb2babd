"""Tensor primitives: cosine similarity, circular shifts and FFT cross-correlation.

Feature cubes are ``(c, h, w)`` arrays. Storage is float32; every reduction
(norms, inner products, channel sums) is carried out in float64.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import fft as sp_fft

# Cosine scores are clamped to [-1 + EPS, 1 - EPS] before the tangent map.
TAN_EPS = 1e-6

# Relative slack used to decide that two correlation responses are tied.
_TIE_RTOL = 1e-9


class DegenerateInputError(ValueError):
    """A tensor with zero (or non-finite) norm was passed where a direction is needed."""


class ShiftIndex(NamedTuple):
    x: int
    y: int


def frobenius_norm(a: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    return float(np.sqrt(a @ a))


def _checked_norm(a: np.ndarray, name: str) -> float:
    norm = frobenius_norm(a)
    if not np.isfinite(norm):
        raise DegenerateInputError(f"{name} contains non-finite values")
    if norm == 0.0:
        raise DegenerateInputError(f"{name} has zero Frobenius norm")
    return norm


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def cosine_similarity(a, b) -> float:
    """Global cosine similarity of two equally shaped tensors, clamped to [-1, 1]."""
    a = np.asarray(a)
    b = np.asarray(b)
    _check_same_shape(a, b)
    na = _checked_norm(a, "a")
    nb = _checked_norm(b, "b")
    dot = a.astype(np.float64).ravel() @ b.astype(np.float64).ravel()
    return float(np.clip(dot / (na * nb), -1.0, 1.0))


def circular_shift(a, s) -> np.ndarray:
    """Translate every channel of ``a`` circularly by ``s = (x, y)`` rows/columns.

    ``out[:, i, j] == a[:, (i - x) % h, (j - y) % w]``.
    """
    a = np.asarray(a)
    return np.roll(a, shift=(int(s[0]), int(s[1])), axis=(-2, -1))


def _first_max(values: np.ndarray) -> int:
    """Linear index of the first entry tied (within rounding) with the maximum."""
    flat = values.ravel()
    top = flat.max()
    slack = _TIE_RTOL * max(1.0, abs(top))
    return int(np.flatnonzero(flat >= top - slack)[0])


def correlation_surface(x, m) -> np.ndarray:
    """Inner products ``<x, circular_shift(m, (a, b))>`` for every shift ``(a, b)``.

    Computed as the inverse FFT of the channel-summed product of spectra.
    """
    x = np.asarray(x, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    _check_same_shape(x, m)
    h, w = x.shape[-2:]
    xf = sp_fft.rfft2(x)
    mf = sp_fft.rfft2(m)
    return sp_fft.irfft2((xf * mf.conj()).sum(axis=0), s=(h, w))


def max_corr_similarity(x, m) -> tuple[float, ShiftIndex]:
    """Maximum cosine similarity of ``x`` against all circular shifts of ``m``.

    Returns the similarity and the shift ``s`` such that ``circular_shift(m, s)``
    is the best-aligned translation of ``m``.
    """
    x = np.asarray(x)
    m = np.asarray(m)
    _check_same_shape(x, m)
    nx = _checked_norm(x, "x")
    nm = _checked_norm(m, "m")
    surface = correlation_surface(x, m)
    k = _first_max(surface)
    h, w = surface.shape
    s_max = float(np.clip(surface.flat[k] / (nx * nm), -1.0, 1.0))
    return s_max, ShiftIndex(k // w, k % w)


def brute_force_max_corr(x, m) -> tuple[float, ShiftIndex]:
    """Exhaustive shift search; reference for :func:`max_corr_similarity`.

    Quadratic in ``h * w``; meant for tests on small cubes.
    """
    x = np.asarray(x)
    m = np.asarray(m)
    _check_same_shape(x, m)
    h, w = x.shape[-2:]
    sims = np.empty((h, w))
    for a in range(h):
        for b in range(w):
            sims[a, b] = cosine_similarity(x, circular_shift(m, (a, b)))
    k = _first_max(sims)
    return float(sims.flat[k]), ShiftIndex(k // w, k % w)


def tangent_map(scores, eps: float = TAN_EPS) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    return np.tan(np.pi / 2 * np.clip(scores, -1.0 + eps, 1.0 - eps))


# Softmax weights this far below the largest are flushed to zero; they are
# invisible at float32 resolution and subnormal arithmetic is very slow.
_FLUSH = 1e-30


def softmax(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max())
    e[e < _FLUSH] = 0.0
    return e / e.sum()


def sparse_softmax(scores, rate: float) -> np.ndarray:
    """``softmax(rate * tan(pi/2 * scores))`` with scores clamped away from the poles."""
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    if not rate > 0:
        raise ValueError(f"rate must be positive, got {rate}")
    return softmax(rate * tangent_map(scores))
