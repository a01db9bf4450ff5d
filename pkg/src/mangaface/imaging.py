"""Single-channel raster type and the pixel-scale conventions of the pipeline.

All images in the pipeline are grayscale with values in [0, 255] (float).
Generators internally work on [-1, 1]; the affine remap between the two
scales lives here and nowhere else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw

from .errors import OutOfRange

WHITE = 255.0
BLACK = 0.0
MID_GRAY = 127.5


@dataclass(frozen=True)
class GrayImage:
    """2-D grayscale raster, values in [0, 255]. Treated as immutable."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float32)
        if px.ndim != 2:
            raise OutOfRange(f"expected a 2-D array, got shape {px.shape}")
        if not np.all(np.isfinite(px)):
            raise OutOfRange("pixel values must be finite")
        if px.min() < 0.0 or px.max() > 255.0:
            raise OutOfRange(
                f"pixel values must lie in [0, 255], got [{px.min()}, {px.max()}]"
            )
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def is_binary(self) -> bool:
        return bool(np.all((self.pixels == 0.0) | (self.pixels == 255.0)))

    def mirrored(self) -> "GrayImage":
        return GrayImage(self.pixels[:, ::-1].copy())


def blank(height: int, width: int, value: float = WHITE) -> GrayImage:
    return GrayImage(np.full((height, width), value, dtype=np.float32))


def load_png(path) -> GrayImage:
    with Image.open(path) as im:
        if im.mode != "L":
            raise OutOfRange(f"{path}: expected single-channel grayscale, got {im.mode}")
        return GrayImage(np.asarray(im, dtype=np.float32))


def save_png(img: GrayImage, path) -> None:
    arr = np.clip(np.rint(img.pixels), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path)


def resize(img: GrayImage, size: int | tuple[int, int], *, binary: bool = False) -> GrayImage:
    """Resample to (width, height). Binary images use nearest-neighbour so the
    {0, 255} value set survives; everything else is bilinear."""
    if isinstance(size, int):
        size = (size, size)
    pil = Image.fromarray(img.pixels.astype(np.float32), mode="F")
    method = Image.Resampling.NEAREST if binary else Image.Resampling.BILINEAR
    out = np.asarray(pil.resize(size, method), dtype=np.float32)
    return GrayImage(np.clip(out, 0.0, 255.0))


def threshold(img: GrayImage, level: float = MID_GRAY) -> GrayImage:
    """Binarize: values <= level go black, the rest white."""
    return GrayImage(np.where(img.pixels <= level, BLACK, WHITE).astype(np.float32))


def min_composite(base: GrayImage, layer: GrayImage) -> GrayImage:
    """Black-wins compositing used for stacking manga line layers."""
    if base.shape != layer.shape:
        raise OutOfRange(f"layer shape {layer.shape} != canvas shape {base.shape}")
    return GrayImage(np.minimum(base.pixels, layer.pixels))


# --- gray scale <-> unit scale (module boundary for generator outputs) ---

def to_unit(x):
    """[0, 255] gray values -> [-1, 1] network scale."""
    return x / MID_GRAY - 1.0


def from_unit(x):
    """[-1, 1] network scale -> [0, 255] gray values."""
    return (x + 1.0) * MID_GRAY


# --- stroke rasterization -------------------------------------------------

def draw_polyline(canvas: np.ndarray, points: np.ndarray, width: int = 3,
                  value: float = BLACK, closed: bool = False) -> None:
    """Rasterize a polyline onto a float canvas in place. No anti-aliasing,
    so drawing black on white keeps the raster binary."""
    pts = [(float(x), float(y)) for x, y in np.asarray(points, dtype=np.float64)]
    if closed and len(pts) > 1:
        pts.append(pts[0])
    mask = Image.new("L", (canvas.shape[1], canvas.shape[0]), 0)
    d = ImageDraw.Draw(mask)
    d.line(pts, fill=255, width=width, joint="curve")
    # wide PIL strokes leave notches at sharp joints; patch them with discs
    if width > 2:
        r = width / 2.0
        for x, y in pts:
            d.ellipse([x - r, y - r, x + r, y + r], fill=255)
    hit = np.asarray(mask) > 0
    canvas[hit] = value


def draw_disc(canvas: np.ndarray, center, radius: float, value: float = BLACK) -> None:
    mask = Image.new("L", (canvas.shape[1], canvas.shape[0]), 0)
    d = ImageDraw.Draw(mask)
    cx, cy = float(center[0]), float(center[1])
    d.ellipse([cx - radius, cy - radius, cx + radius, cy + radius], fill=255)
    canvas[np.asarray(mask) > 0] = value
