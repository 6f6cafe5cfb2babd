"""Feature cubes from images: a fixed random filter bank, plus feature-file I/O.

The baseline encoder is deterministic and training free. Users with a trained
backbone can write its features with :func:`write_features` and feed the
manifest to the pipeline instead.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterator

import numpy as np
from scipy import fft as sp_fft
from PIL import Image, UnidentifiedImageError

FEATURE_MAGIC = b"VFT1"
FEATURE_VERSION = 1
_FEATURE_HEADER = struct.Struct("<4s4I")
MANIFEST_NAME = "manifest.tsv"


class EncoderError(ValueError):
    pass


class ImageDecodeError(EncoderError):
    pass


class FeatureFileError(ValueError):
    pass


class FeatureMissingError(FeatureFileError):
    pass


class FeatureMagicError(FeatureFileError):
    pass


class FeatureDimensionError(FeatureFileError):
    pass


@dataclass(frozen=True)
class EncoderSpec:
    kind: str = "baseline-filter-bank"
    c: int = 64
    h: int = 12
    w: int = 12
    seed: int = 0
    resize: tuple[int, int] = (192, 192)  # (W', H')
    kernel: int = 5

    def validate(self) -> EncoderSpec:
        if self.kind not in ("baseline-filter-bank", "external-features"):
            raise EncoderError(f"unknown encoder kind {self.kind!r}")
        if min(self.c, self.h, self.w) < 1:
            raise EncoderError("output dims must be >= 1")
        if self.kind == "external-features":
            return self
        width, height = self.resize
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise EncoderError(f"kernel size must be odd, got {self.kernel}")
        if min(width, height) < self.kernel:
            raise EncoderError(f"resize target {self.resize} is smaller than the {self.kernel}x{self.kernel} kernel")
        if height % self.h or width % self.w:
            raise EncoderError(f"resize target {self.resize} must be a multiple of the output grid ({self.w}, {self.h})")
        return self

    @property
    def stride(self) -> tuple[int, int]:
        """Pool stride in pixels as (rows, cols)."""
        return self.resize[1] // self.h, self.resize[0] // self.w


@dataclass
class Frame:
    pixels: np.ndarray  # (H, W, 3) uint8
    index: int = 0
    source: str = ""


def load_frame(path, index: int = 0) -> Frame:
    try:
        with Image.open(path) as img:
            pixels = np.asarray(img.convert("RGB"))
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageDecodeError(f"cannot decode {path}: {exc}") from exc
    return Frame(pixels, index, str(path))


def filter_bank(spec: EncoderSpec) -> np.ndarray:
    """The ``(c, 3, k, k)`` filters, uniform in ``+-sqrt(6 / (3 k^2))``."""
    k = spec.kernel
    bound = np.sqrt(6.0 / (3 * k * k))
    rng = np.random.default_rng(spec.seed)
    return rng.uniform(-bound, bound, size=(spec.c, 3, k, k))


@lru_cache(maxsize=8)
def _filter_spectra(spec: EncoderSpec) -> np.ndarray:
    width, height = spec.resize
    k = spec.kernel
    padded = np.zeros((spec.c, 3, height, width))
    offs = np.arange(k) - k // 2
    rows = offs[:, None] % height
    cols = offs[None, :] % width
    padded[:, :, rows, cols] = filter_bank(spec)
    return sp_fft.rfft2(padded)


def normalize_channels(img: np.ndarray) -> np.ndarray:
    """Per-image, per-channel zero mean and unit variance; flat channels become zero."""
    img = img.astype(np.float64)
    mean = img.mean(axis=(1, 2), keepdims=True)
    std = img.std(axis=(1, 2), keepdims=True)
    centered = img - mean
    return np.divide(centered, std, out=np.zeros_like(centered), where=std > 1e-12)


def encode(spec: EncoderSpec, frame) -> np.ndarray:
    """Encode one RGB frame into a float32 ``(c, h, w)`` cube.

    resize -> channel normalisation -> circular filter bank -> tanh -> average pool.
    """
    spec.validate()
    if spec.kind != "baseline-filter-bank":
        raise EncoderError("external-features encoders are loaded with load_features, not encoded")
    pixels = frame.pixels if isinstance(frame, Frame) else np.asarray(frame)
    if pixels.ndim == 2:
        pixels = np.repeat(pixels[:, :, None], 3, axis=2)
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise EncoderError(f"expected an (H, W, 3) RGB raster, got shape {pixels.shape}")
    width, height = spec.resize
    if pixels.shape[:2] != (height, width):
        pixels = np.asarray(Image.fromarray(np.asarray(pixels, dtype=np.uint8)).resize((width, height), Image.BILINEAR))
    img = normalize_channels(np.moveaxis(pixels, 2, 0))
    response = sp_fft.irfft2(np.einsum("fipq,ipq->fpq", _filter_spectra(spec), sp_fft.rfft2(img)), s=(height, width))
    activated = np.tanh(response)
    sr, sc = spec.stride
    pooled = activated.reshape(spec.c, spec.h, sr, spec.w, sc).mean(axis=(2, 4))
    return pooled.astype(np.float32)


def write_feature_file(path, cube) -> None:
    cube = np.asarray(cube, dtype=np.float32)
    if cube.ndim != 3:
        raise FeatureDimensionError(f"feature cube must be (c, h, w), got shape {cube.shape}")
    c, h, w = cube.shape
    Path(path).write_bytes(_FEATURE_HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, c, h, w) + cube.astype("<f4").tobytes())


def read_feature_file(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FeatureMissingError(f"feature file not found: {path}")
    data = path.read_bytes()
    if data[:4] != FEATURE_MAGIC:
        raise FeatureMagicError(f"{path}: bad magic {data[:4]!r}")
    if len(data) < _FEATURE_HEADER.size:
        raise FeatureDimensionError(f"{path}: truncated header")
    _, version, c, h, w = _FEATURE_HEADER.unpack_from(data)
    if version != FEATURE_VERSION:
        raise FeatureMagicError(f"{path}: unsupported version {version}")
    if min(c, h, w) < 1 or len(data) != _FEATURE_HEADER.size + 4 * c * h * w:
        raise FeatureDimensionError(f"{path}: payload does not match declared dims ({c}, {h}, {w})")
    cube = np.frombuffer(data, dtype="<f4", offset=_FEATURE_HEADER.size).reshape(c, h, w)
    return cube.astype(np.float32)


def write_features(cubes, directory, timestamps=None) -> Path:
    """Write ``frame_%06d.vft`` files plus a manifest; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = []
    for i, cube in enumerate(cubes):
        name = f"frame_{i:06d}.vft"
        write_feature_file(directory / name, cube)
        row = [str(i), name]
        if timestamps is not None:
            row.append(repr(float(timestamps[i])))
        lines.append("\t".join(row))
    manifest = directory / MANIFEST_NAME
    manifest.write_text("".join(line + "\n" for line in lines))
    return manifest


def read_manifest(manifest) -> list[tuple[int, Path, float | None]]:
    manifest = Path(manifest)
    if not manifest.is_file():
        raise FeatureMissingError(f"manifest not found: {manifest}")
    entries = []
    for lineno, line in enumerate(manifest.read_text().splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) < 2:
            raise FeatureFileError(f"{manifest}:{lineno}: expected 'index<TAB>path[<TAB>timestamp]'")
        stamp = float(parts[2]) if len(parts) > 2 and parts[2] else None
        entries.append((int(parts[0]), manifest.parent / parts[1], stamp))
    return entries


def load_features(manifest) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(index, cube)`` in manifest order, checking every file against the first."""
    shape = None
    for index, path, _ in read_manifest(manifest):
        cube = read_feature_file(path)
        if shape is None:
            shape = cube.shape
        elif cube.shape != shape:
            raise FeatureDimensionError(f"entry {index} ({path.name}) has dims {cube.shape}, expected {shape}")
        yield index, cube
