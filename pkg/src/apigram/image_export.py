"""Render a sample's weighted feature vector as a 128x128 grayscale image.

The chain is: lay the weights out row-major over a fixed vocabulary order
and min-max normalize to [0, 255] (raw), then optionally 3x3 Gaussian blur,
contrast-limited adaptive histogram equalization over an 8x8 tile grid, and
Sobel gradient magnitude.  All stages use clamp-to-edge borders and
round-half-up to 8-bit, so the whole pipeline is byte-deterministic.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from . import kernels
from .errors import IoError, VocabTooLarge
from .featurize import WeightedVector

IMAGE_SIDE = 128
MAX_VOCAB = IMAGE_SIDE * IMAGE_SIDE

STAGE_RAW = "raw"
STAGE_BLURRED = "blurred"
STAGE_CLAHE = "clahe"
STAGE_SOBEL = "sobel"
STAGE_ORDER = (STAGE_RAW, STAGE_BLURRED, STAGE_CLAHE, STAGE_SOBEL)

SOBEL_X = np.array([[-1.0, 0.0, 1.0],
                    [-2.0, 0.0, 2.0],
                    [-1.0, 0.0, 1.0]])
SOBEL_Y = np.array([[-1.0, -2.0, -1.0],
                    [0.0, 0.0, 0.0],
                    [1.0, 2.0, 1.0]])


@dataclass(frozen=True)
class FeatureImage:
    sample_id: str
    pixels: np.ndarray  # uint8, IMAGE_SIDE x IMAGE_SIDE
    stage: str
    vocab_sha: str
    params: dict[str, str] = field(default_factory=dict)


def _require_stage(img: FeatureImage, expected: str) -> None:
    if img.stage != expected:
        raise ValueError(f"expected a {expected!r}-stage image, got {img.stage!r}")


def _round_u8(values: np.ndarray) -> np.ndarray:
    """Round half up and clip into the 8-bit range."""
    return np.clip(np.floor(values + 0.5), 0.0, 255.0).astype(np.uint8)


def vocabulary_sha(vocab_order: Sequence[str]) -> str:
    return hashlib.sha256("\n".join(vocab_order).encode("utf-8")).hexdigest()


def vector_to_image(vec: WeightedVector, vocab_order: Sequence[str]) -> FeatureImage:
    """Min-max normalized row-major layout of the weight vector (raw stage).

    Position i holds the weight of vocab_order[i] (0 if absent); positions
    past the vocabulary end are zero padding.  An all-equal weight vector
    maps to an all-zero image.
    """
    if len(vocab_order) > MAX_VOCAB:
        raise VocabTooLarge(
            f"vocabulary of {len(vocab_order)} tokens exceeds the "
            f"{IMAGE_SIDE}x{IMAGE_SIDE} grid ({MAX_VOCAB}); re-train with a "
            "smaller top_k")
    values = np.zeros(MAX_VOCAB, dtype=np.float64)
    for i, token in enumerate(vocab_order):
        values[i] = vec.weights.get(token, 0.0)

    span = values[:len(vocab_order)]
    if span.size:
        lo = float(span.min())
        hi = float(span.max())
        if hi > lo:
            values[:span.size] = (span - lo) / (hi - lo) * 255.0
        else:
            values[:span.size] = 0.0
    pixels = _round_u8(values).reshape(IMAGE_SIDE, IMAGE_SIDE)
    return FeatureImage(sample_id=vec.sample_id, pixels=pixels, stage=STAGE_RAW,
                        vocab_sha=vocabulary_sha(vocab_order),
                        params={"weights": vec.scheme})


def gaussian_kernel3(sigma: float) -> np.ndarray:
    """3x3 Gaussian weights normalized to sum 1."""
    k = np.empty((3, 3), dtype=np.float64)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            k[dy + 1, dx + 1] = math.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(img: FeatureImage, sigma: float = 1.0) -> FeatureImage:
    """3x3 Gaussian blur with replicated borders (raw -> blurred)."""
    _require_stage(img, STAGE_RAW)
    blurred = kernels.convolve3x3_clamp(img.pixels.astype(np.float64),
                                        gaussian_kernel3(sigma))
    return FeatureImage(sample_id=img.sample_id, pixels=_round_u8(blurred),
                        stage=STAGE_BLURRED, vocab_sha=img.vocab_sha,
                        params={**img.params, "sigma": repr(sigma)})


def _tile_lut(hist: np.ndarray, tile_pixels: int, clip_limit: float) -> np.ndarray:
    """Equalization mapping for one tile's 256-bin histogram.

    Bins are clipped at clip_limit x the uniform height and the excess is
    redistributed uniformly in a single pass.  The mapping is the midpoint
    cumulative rule, which sends an exactly uniform histogram to the
    identity; a tile with a single occupied bin (no contrast to stretch)
    maps to the identity directly.
    """
    if np.count_nonzero(hist) <= 1:
        return np.arange(256, dtype=np.uint8)
    clip = clip_limit * tile_pixels / 256.0
    clipped = np.minimum(hist.astype(np.float64), clip)
    excess = float(hist.sum() - clipped.sum())
    clipped += excess / 256.0
    cdf = np.cumsum(clipped)
    midpoints = (cdf - clipped / 2.0) * (255.0 / tile_pixels)
    return _round_u8(midpoints)


def clahe(img: FeatureImage, clip_limit: float = 2.0, grid: int = 8) -> FeatureImage:
    """Contrast-limited adaptive histogram equalization (blurred -> clahe).

    The image is divided into a grid x grid arrangement of tiles; each
    tile's clipped-histogram mapping is blended bilinearly across pixels.
    """
    _require_stage(img, STAGE_BLURRED)
    if IMAGE_SIDE % grid != 0:
        raise ValueError(f"grid {grid} must divide the image side {IMAGE_SIDE}")
    tile = IMAGE_SIDE // grid
    luts = np.empty((grid, grid, 256), dtype=np.uint8)
    for ty in range(grid):
        for tx in range(grid):
            block = img.pixels[ty * tile:(ty + 1) * tile, tx * tile:(tx + 1) * tile]
            hist = np.bincount(block.ravel(), minlength=256)
            luts[ty, tx] = _tile_lut(hist, tile * tile, clip_limit)
    pixels = kernels.clahe_bilinear(np.ascontiguousarray(img.pixels), luts,
                                    tile, tile)
    return FeatureImage(sample_id=img.sample_id, pixels=pixels, stage=STAGE_CLAHE,
                        vocab_sha=img.vocab_sha,
                        params={**img.params, "clip_limit": repr(clip_limit),
                                "grid": str(grid)})


def sobel(img: FeatureImage) -> FeatureImage:
    """Sobel gradient magnitude, clipped to [0, 255] (clahe -> sobel)."""
    _require_stage(img, STAGE_CLAHE)
    as_float = img.pixels.astype(np.float64)
    gx = kernels.convolve3x3_clamp(as_float, SOBEL_X)
    gy = kernels.convolve3x3_clamp(as_float, SOBEL_Y)
    magnitude = np.sqrt(gx * gx + gy * gy)
    return FeatureImage(sample_id=img.sample_id, pixels=_round_u8(magnitude),
                        stage=STAGE_SOBEL, vocab_sha=img.vocab_sha,
                        params=dict(img.params))


def run_chain(raw: FeatureImage, upto: str, sigma: float = 1.0,
              clip_limit: float = 2.0, grid: int = 8) -> dict[str, FeatureImage]:
    """All stages from raw through ``upto``, keyed by stage name."""
    stages = {STAGE_RAW: raw}
    last = STAGE_ORDER.index(upto)
    if last >= 1:
        stages[STAGE_BLURRED] = gaussian_blur(raw, sigma=sigma)
    if last >= 2:
        stages[STAGE_CLAHE] = clahe(stages[STAGE_BLURRED], clip_limit=clip_limit,
                                    grid=grid)
    if last >= 3:
        stages[STAGE_SOBEL] = sobel(stages[STAGE_CLAHE])
    return stages


def sidecar_path(png_path: str | Path) -> Path:
    return Path(png_path).with_suffix(".meta.txt")


def export_png(img: FeatureImage, path: str | Path) -> None:
    """Write an 8-bit grayscale PNG plus a metadata sidecar text file."""
    path = Path(path)
    params = ";".join(f"{k}={v}" for k, v in sorted(img.params.items()))
    sidecar = (f"sample_id={img.sample_id}\n"
               f"stage={img.stage}\n"
               f"vocab_sha={img.vocab_sha}\n"
               f"params={params}\n")
    try:
        Image.fromarray(img.pixels, mode="L").save(path, format="PNG")
        sidecar_path(path).write_text(sidecar, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write image artifacts at {path}: {exc}") from exc


def read_png(path: str | Path) -> np.ndarray:
    """Decode an exported PNG back to its uint8 pixel matrix."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.uint8)
    except OSError as exc:
        raise IoError(f"cannot read image {path}: {exc}") from exc
