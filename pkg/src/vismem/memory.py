"""The 4-D visual memory: sparse, usage-balanced writing and shift-invariant reading."""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sp_fft

from .numerics import (
    circular_shift,
    DegenerateInputError,
    ShiftIndex,
    cosine_similarity,
    frobenius_norm,
    softmax,
    sparse_softmax,
)

# Usage above this everywhere means the bank is full and plain sparse weights are used.
FULL_USAGE = 1.0 - 1e-6

SNAPSHOT_MAGIC = b"VMM1"
_HEADER = struct.Struct("<4s4I2f2Q")


class SnapshotError(ValueError):
    """Base class for malformed memory snapshots."""


class SnapshotMagicError(SnapshotError):
    pass


class SnapshotDimensionError(SnapshotError):
    pass


class SnapshotTruncatedError(SnapshotError):
    pass


def _f32(value: float) -> float:
    return float(np.float32(value))


def _rfft2(a: np.ndarray) -> np.ndarray:
    # pocketfft leaves subnormal residue in bins that should be exactly real;
    # flush it so later arithmetic on the cached spectrum stays fast.
    spec = sp_fft.rfft2(a)
    tiny = np.finfo(np.float64).tiny
    spec.real[np.abs(spec.real) < tiny] = 0.0
    spec.imag[np.abs(spec.imag) < tiny] = 0.0
    return spec


@dataclass(eq=False)
class MemoryBank:
    """Memory cubes ``(n, c, h, w)``, per-cube usage and the read/write rates.

    Rates are rounded to float32 on construction so a bank survives a snapshot
    round trip unchanged.
    """

    cubes: np.ndarray
    usage: np.ndarray
    gamma_w: float
    gamma_r: float
    step: int = 0
    seed: int = 0
    _spectrum: np.ndarray | None = field(default=None, repr=False)
    _norms: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.cubes = np.ascontiguousarray(self.cubes, dtype=np.float32)
        self.usage = np.ascontiguousarray(self.usage, dtype=np.float32)
        if self.cubes.ndim != 4 or min(self.cubes.shape) < 1:
            raise ValueError(f"cubes must have shape (n, c, h, w) with all dims >= 1, got {self.cubes.shape}")
        if self.usage.shape != (self.cubes.shape[0],):
            raise ValueError("usage must have one entry per cube")
        if not (self.gamma_w > 0 and self.gamma_r > 0):
            raise ValueError("reading and writing rates must be positive")
        self.gamma_w = _f32(self.gamma_w)
        self.gamma_r = _f32(self.gamma_r)
        self.step = int(self.step)
        self.seed = int(self.seed)

    @property
    def n(self) -> int:
        return self.cubes.shape[0]

    @property
    def cube_shape(self) -> tuple[int, int, int]:
        return self.cubes.shape[1:]

    @property
    def spectrum(self) -> np.ndarray:
        """Cached rfft2 of the float32 cubes; write() refreshes only the cubes it changed."""
        if self._spectrum is None:
            self._spectrum = _rfft2(self.cubes.astype(np.float64))
        return self._spectrum

    @property
    def norms(self) -> np.ndarray:
        if self._norms is None:
            self._norms = _norms_of(self.cubes)
        return self._norms

    def _refresh(self, changed: np.ndarray) -> None:
        # Per-cube FFTs and row sums do not depend on the batch, so the caches
        # stay bit-identical to a fresh computation (e.g. after restore()).
        if changed.size == 0:
            return
        if self._spectrum is not None:
            self._spectrum[changed] = _rfft2(self.cubes[changed].astype(np.float64))
        if self._norms is not None:
            self._norms[changed] = _norms_of(self.cubes[changed])

    def copy(self) -> MemoryBank:
        bank = MemoryBank(self.cubes.copy(), self.usage.copy(), self.gamma_w, self.gamma_r, self.step, self.seed)
        if self._spectrum is not None:
            bank._spectrum = self._spectrum.copy()
        if self._norms is not None:
            bank._norms = self._norms.copy()
        return bank

    def __eq__(self, other):
        if not isinstance(other, MemoryBank):
            return NotImplemented
        return (
            self.cubes.shape == other.cubes.shape
            and np.array_equal(self.cubes, other.cubes)
            and np.array_equal(self.usage, other.usage)
            and self.gamma_w == other.gamma_w
            and self.gamma_r == other.gamma_r
            and self.step == other.step
            and self.seed == other.seed
        )


@dataclass
class ReadResult:
    recalled: np.ndarray
    weights: np.ndarray
    similarities: np.ndarray
    shifts: list[ShiftIndex]
    confidence: float

    @property
    def top_cube(self) -> int:
        return int(np.argmax(self.weights))


def init_memory(n: int, c: int, h: int, w: int, gamma_w: float = 5.0, gamma_r: float = 5.0, seed: int = 0) -> MemoryBank:
    """Fresh bank with cubes drawn from U(-b, b), ``b = sqrt(6 / (c*h*w))``."""
    for name, dim in (("n", n), ("c", c), ("h", h), ("w", w)):
        if int(dim) != dim or dim < 1:
            raise ValueError(f"{name} must be a positive integer, got {dim}")
    bound = np.sqrt(6.0 / (c * h * w))
    rng = np.random.default_rng(seed)
    cubes = rng.uniform(-bound, bound, size=(n, c, h, w)).astype(np.float32)
    return MemoryBank(cubes, np.zeros(n, dtype=np.float32), gamma_w, gamma_r, step=0, seed=seed)


def _check_input(bank: MemoryBank, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != bank.cube_shape:
        raise ValueError(f"input shape {x.shape} does not match memory cubes {bank.cube_shape}")
    return x


def _input_norm(x: np.ndarray) -> float:
    norm = frobenius_norm(x)
    if not np.isfinite(norm) or norm == 0.0:
        raise DegenerateInputError("input cube must be finite with nonzero norm")
    return norm


def _norms_of(cubes: np.ndarray) -> np.ndarray:
    flat = cubes.reshape(cubes.shape[0], -1).astype(np.float64)
    return np.sqrt((flat * flat).sum(axis=1))


def content_similarity(bank: MemoryBank, x) -> np.ndarray:
    """Plain (unshifted) cosine similarity of ``x`` with every cube.

    Zero-norm cubes score 0.
    """
    x = _check_input(bank, x)
    nx = _input_norm(x)
    dots = np.einsum("nchw,chw->n", bank.cubes.astype(np.float64), x.astype(np.float64))
    norms = bank.norms
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = np.where(norms > 0, dots / (norms * nx), 0.0)
    return np.clip(sims, -1.0, 1.0)


def balance_usage(weights: np.ndarray, usage: np.ndarray) -> np.ndarray:
    """Push weight toward less-used cubes; identity when every cube is used up."""
    weights = np.asarray(weights, dtype=np.float64)
    usage = np.asarray(usage, dtype=np.float64)
    if usage.min() >= FULL_USAGE:
        return weights
    adjusted = np.where(weights < usage, weights * (1.0 - usage), weights)
    total = adjusted.sum()
    # All mass sat on saturated cubes: nothing to redirect, keep the sparse weights.
    if not total > 0:
        return weights
    return adjusted / total


def writing_vector(bank: MemoryBank, x, *, use_usage: bool = True) -> np.ndarray:
    weights = sparse_softmax(content_similarity(bank, x), bank.gamma_w)
    if use_usage:
        weights = balance_usage(weights, bank.usage)
    return weights


def _apply_weights(bank: MemoryBank, x: np.ndarray, weights: np.ndarray, inplace: bool) -> MemoryBank:
    out = bank if inplace else bank.copy()
    keep = (1.0 - weights)[:, None, None, None]
    add = weights[:, None, None, None]
    old = out.cubes
    out.cubes = (keep * old + add * x.astype(np.float64)).astype(np.float32)
    changed = np.flatnonzero((out.cubes != old).reshape(out.n, -1).any(axis=1))
    out._refresh(changed)
    out.usage = ((1.0 - weights) * out.usage + weights).astype(np.float32)
    out.step += 1
    return out


def write(bank: MemoryBank, x, *, use_usage: bool = True, inplace: bool = False) -> MemoryBank:
    """Moving-average write of ``x`` into every cube, weighted by the writing vector.

    ``use_usage=False`` disables usage balancing (ablation only). Returns the
    updated bank; the input bank is left untouched unless ``inplace``.
    """
    x = _check_input(bank, x)
    weights = writing_vector(bank, x, use_usage=use_usage)
    return _apply_weights(bank, x, weights, inplace)


def write_nonsparse(bank: MemoryBank, x, gamma: float, *, inplace: bool = False) -> MemoryBank:
    """Write with plain ``softmax(gamma * D)`` weights: no tangent map, no usage balancing."""
    x = _check_input(bank, x)
    weights = softmax(gamma * content_similarity(bank, x))
    return _apply_weights(bank, x, weights, inplace)


def _channel_confidence(recalled: np.ndarray, x: np.ndarray) -> float:
    r = recalled.reshape(recalled.shape[0], -1).astype(np.float64)
    q = x.reshape(x.shape[0], -1).astype(np.float64)
    dots = np.einsum("cp,cp->c", r, q)
    norms = np.linalg.norm(r, axis=1) * np.linalg.norm(q, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_channel = np.where(norms > 0, dots / norms, 0.0)
    return float(np.clip(per_channel, -1.0, 1.0).mean())


def _shifted_sum(cubes: np.ndarray, shifts, weights: np.ndarray) -> np.ndarray:
    """``sum_i weights[i] * circular_shift(cubes[i], shifts[i])``, skipping zero weights."""
    out = np.zeros(cubes.shape[1:], dtype=np.float64)
    for i in np.flatnonzero(weights):
        out += weights[i] * circular_shift(cubes[i], shifts[i])
    return out


def read(bank: MemoryBank, x) -> ReadResult:
    """Recall from the bank with translation-invariant addressing.

    Each cube is compared with ``x`` under its best circular shift; the recall is
    the weighted sum of the shifted cubes. The bank is not modified.
    """
    x = _check_input(bank, x)
    nx = _input_norm(x)
    h, w = x.shape[-2:]
    xf = _rfft2(x.astype(np.float64))
    cross = np.einsum("ncpq,cpq->npq", bank.spectrum, xf.conj())
    # cross.conj() is the spectrum of <x, shift(M_i, s)> over s.
    surfaces = sp_fft.irfft2(cross.conj(), s=(h, w)).reshape(bank.n, -1)
    top = surfaces.max(axis=1)
    slack = 1e-9 * np.maximum(1.0, np.abs(top))
    best = np.argmax(surfaces >= (top - slack)[:, None], axis=1)
    norms = bank.norms
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = np.where(norms > 0, surfaces[np.arange(bank.n), best] / (norms * nx), 0.0)
    sims = np.clip(sims, -1.0, 1.0)
    weights = sparse_softmax(sims, bank.gamma_r)
    shifts = [ShiftIndex(int(k // w), int(k % w)) for k in best]

    recalled = _shifted_sum(bank.cubes, shifts, weights)
    confidence = _channel_confidence(recalled, x)
    return ReadResult(recalled, weights, sims, shifts, confidence)


def reading_accuracy(recalled, original) -> float:
    """Global cosine similarity between a recall and the tensor originally written."""
    return cosine_similarity(recalled, original)


def snapshot(bank: MemoryBank) -> bytes:
    n, c, h, w = bank.cubes.shape
    header = _HEADER.pack(SNAPSHOT_MAGIC, n, c, h, w, bank.gamma_w, bank.gamma_r, bank.step, bank.seed)
    return header + bank.cubes.astype("<f4").tobytes() + bank.usage.astype("<f4").tobytes()


def restore(data: bytes) -> MemoryBank:
    if len(data) < 4:
        raise SnapshotTruncatedError("stream shorter than the magic number")
    if data[:4] != SNAPSHOT_MAGIC:
        raise SnapshotMagicError(f"bad magic {data[:4]!r}, expected {SNAPSHOT_MAGIC!r}")
    if len(data) < _HEADER.size:
        raise SnapshotTruncatedError("truncated header")
    _, n, c, h, w, gamma_w, gamma_r, step, seed = _HEADER.unpack_from(data)
    if min(n, c, h, w) < 1:
        raise SnapshotDimensionError(f"invalid dimensions n={n} c={c} h={h} w={w}")
    count = n * c * h * w
    expected = _HEADER.size + 4 * (count + n)
    if len(data) < expected:
        raise SnapshotTruncatedError(f"expected {expected} bytes, got {len(data)}")
    if len(data) > expected:
        raise SnapshotDimensionError(f"{len(data) - expected} trailing bytes after declared payload")
    cubes = np.frombuffer(data, dtype="<f4", count=count, offset=_HEADER.size).reshape(n, c, h, w)
    usage = np.frombuffer(data, dtype="<f4", count=n, offset=_HEADER.size + 4 * count)
    return MemoryBank(cubes.astype(np.float32), usage.astype(np.float32), gamma_w, gamma_r, step, seed)
