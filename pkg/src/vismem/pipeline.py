"""Short-term (write-then-read) and online (read-then-write) learning, scoring and density maps."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
from PIL import Image

from .memory import MemoryBank, ReadResult, read, reading_accuracy, write


@dataclass
class ScoreRecord:
    index: int
    interestingness: float
    confidence: float
    top_cube: int
    shift_x: int
    shift_y: int
    ms: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))


@dataclass
class ShortTermReport:
    epochs: int
    accuracies: list[float] = field(default_factory=list)
    stop_reason: str = "max-epochs"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class DensityMap:
    values: np.ndarray
    index: int = 0


def interestingness(confidence: float) -> float:
    return (1.0 - confidence) / 2.0


def short_term_learn(
    bank: MemoryBank,
    corpus,
    max_epochs: int = 10,
    acc_threshold: float = 0.98,
    patience: int = 3,
    *,
    inplace: bool = False,
) -> tuple[MemoryBank, ShortTermReport]:
    """Learn a corpus of uninteresting cubes: write each sample, then read it back.

    Stops when an epoch's mean reading accuracy reaches ``acc_threshold``, when it
    has not improved for ``patience`` epochs, or after ``max_epochs``.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("short-term corpus is empty")
    if patience < 1 or max_epochs < 1:
        raise ValueError("patience and max_epochs must be >= 1")
    if not inplace:
        bank = bank.copy()
    report = ShortTermReport(epochs=0)
    best = -np.inf
    stale = 0
    for _ in range(max_epochs):
        accs = []
        for x in corpus:
            write(bank, x, inplace=True)
            accs.append(reading_accuracy(read(bank, x).recalled, x))
        acc = float(np.mean(accs))
        report.epochs += 1
        report.accuracies.append(acc)
        if acc >= acc_threshold:
            report.stop_reason = "threshold"
            break
        if acc > best:
            best, stale = acc, 0
        else:
            stale += 1
            if stale >= patience:
                report.stop_reason = "plateau"
                break
    return bank, report


def online_step(bank: MemoryBank, x, index: int = 0, *, inplace: bool = False) -> tuple[MemoryBank, ScoreRecord, ReadResult]:
    """Score ``x`` against the memory, then write it."""
    start = time.perf_counter()
    rr = read(bank, x)
    bank = write(bank, x, inplace=inplace)
    ms = (time.perf_counter() - start) * 1000.0
    top = rr.top_cube
    shift = rr.shifts[top]
    record = ScoreRecord(int(index), interestingness(rr.confidence), rr.confidence, top, shift.x, shift.y, ms)
    return bank, record, rr


def run_online(bank: MemoryBank, stream: Iterable, *, inplace: bool = False) -> Iterator[tuple[ScoreRecord, np.ndarray, ReadResult]]:
    """Score a stream of ``(index, cube)`` pairs in order, yielding ``(record, cube, read)``."""
    if not inplace:
        bank = bank.copy()
    last = None
    for index, x in stream:
        if last is not None and index <= last:
            raise ValueError(f"frame indices must increase strictly (got {index} after {last})")
        last = index
        bank, record, rr = online_step(bank, x, index, inplace=True)
        yield record, x, rr


def cell_discrepancy(x, recalled) -> np.ndarray:
    """``1 - cos`` between channel vectors at each cell; 0 where either vector is zero."""
    x = np.asarray(x, dtype=np.float64)
    r = np.asarray(recalled, dtype=np.float64)
    dots = np.einsum("chw,chw->hw", x, r)
    norms = np.sqrt(np.einsum("chw,chw->hw", x, x) * np.einsum("chw,chw->hw", r, r))
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where(norms > 0, dots / norms, 1.0)
    return 1.0 - np.clip(cos, -1.0, 1.0)


def bilinear_resize(grid: np.ndarray, out_size: tuple[int, int]) -> np.ndarray:
    """Bilinear upsampling with pixel-centre alignment and edge clamping."""
    H, W = out_size
    h, w = grid.shape

    def axis(n_out, n_in):
        pos = np.clip((np.arange(n_out) + 0.5) * n_in / n_out - 0.5, 0, n_in - 1)
        lo = np.floor(pos).astype(int)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, pos - lo

    r0, r1, fr = axis(H, h)
    c0, c1, fc = axis(W, w)
    top = grid[r0][:, c0] * (1 - fc) + grid[r0][:, c1] * fc
    bottom = grid[r1][:, c0] * (1 - fc) + grid[r1][:, c1] * fc
    return top * (1 - fr)[:, None] + bottom * fr[:, None]


def density_map(x, rr: ReadResult, out_size: tuple[int, int], index: int = 0) -> DensityMap:
    up = bilinear_resize(cell_discrepancy(x, rr.recalled), out_size)
    lo, hi = up.min(), up.max()
    if hi - lo <= 1e-12:
        values = np.zeros_like(up)
    else:
        values = (up - lo) / (hi - lo)
    return DensityMap(values, index)


def save_pgm(dm: DensityMap, path) -> None:
    """8-bit binary PGM (P5)."""
    pixels = np.round(np.clip(dm.values, 0.0, 1.0) * 255).astype(np.uint8)
    Image.fromarray(pixels, mode="L").save(path, format="PPM")


def write_scores(records: Iterable[ScoreRecord], path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def read_scores(path) -> list[ScoreRecord]:
    records = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            records.append(ScoreRecord(**json.loads(line)))
    return records
