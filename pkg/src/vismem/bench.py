"""Per-frame timing of memory reads and full online steps."""
from __future__ import annotations

import time

import numpy as np

from .memory import init_memory, read, write
from .synthetic import random_feature

# Largest allowed growth of read time when h and w both double.
SPATIAL_SCALING_LIMIT = 4.6


def time_frame(n: int, c: int, h: int, w: int, repeats: int = 10, warmup: int = 2, seed: int = 0) -> dict:
    """Median read and read+write wall time in milliseconds on a warmed-up bank."""
    rng = np.random.default_rng(seed)
    bank = init_memory(n, c, h, w, seed=seed)
    for _ in range(warmup):
        x = random_feature(rng, (c, h, w))
        read(bank, x)
        write(bank, x, inplace=True)
    reads, steps = [], []
    for _ in range(repeats):
        x = random_feature(rng, (c, h, w))
        t0 = time.perf_counter()
        read(bank, x)
        t1 = time.perf_counter()
        write(bank, x, inplace=True)
        t2 = time.perf_counter()
        reads.append(t1 - t0)
        steps.append(t2 - t0)
    return {
        "n": n,
        "c": c,
        "h": h,
        "w": w,
        "read_ms": 1000 * float(np.median(reads)),
        "frame_ms": 1000 * float(np.median(steps)),
    }


def spatial_scaling(n: int = 100, c: int = 64, sizes=(16, 32), repeats: int = 10) -> dict:
    """Read-time ratio between consecutive square sizes (each double the previous)."""
    rows = [time_frame(n, c, s, s, repeats=repeats) for s in sizes]
    ratios = [b["read_ms"] / a["read_ms"] for a, b in zip(rows, rows[1:])]
    return {"rows": rows, "ratios": ratios, "limit": SPATIAL_SCALING_LIMIT, "ok": all(r <= SPATIAL_SCALING_LIMIT for r in ratios)}


def parse_dims(text: str) -> list[tuple[int, int, int, int]]:
    """``"100x64x12x12,100x64x16x16"`` -> list of ``(n, c, h, w)``."""
    grid = []
    for item in text.split(","):
        parts = item.strip().lower().split("x")
        if len(parts) != 4:
            raise ValueError(f"bad dims {item!r}, expected NxCxHxW")
        grid.append(tuple(int(p) for p in parts))
    return grid


def format_table(rows: list[dict]) -> str:
    lines = [f"{'n':>5} {'c':>5} {'h':>4} {'w':>4} {'read ms':>10} {'frame ms':>10}"]
    for r in rows:
        lines.append(f"{r['n']:>5} {r['c']:>5} {r['h']:>4} {r['w']:>4} {r['read_ms']:>10.2f} {r['frame_ms']:>10.2f}")
    return "\n".join(lines)
