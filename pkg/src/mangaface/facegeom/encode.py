"""Geometric attribute encodings: relative locations, widths, cheek shape.

All encodings are normalized by the cheek-box width so they are invariant to
uniform scaling and translation of the face. The cheek box is the bounding
box of the 17 cheek-contour points; its "bottom edge" is the maximum y in
image coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateFace, EmptyDataset
from ..imaging import GrayImage, resize
from .landmarks import LOC_REGIONS, LandmarkSet, RegionKind

MIN_CHEEK_WIDTH_PX = 1.0


@dataclass(frozen=True)
class LocVector:
    """Per region in LOC_REGIONS: (d_cl, d_cr, d_cb) distances from the region
    center to the cheek box's left, right, and bottom edges, in cheek widths."""

    values: np.ndarray  # shape (4, 3), row order = LOC_REGIONS

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (4, 3):
            raise DegenerateFace(f"location vector must be (4, 3), got {v.shape}")
        if not np.all(np.isfinite(v)) or v.min() < 0:
            raise DegenerateFace("location distances must be finite and >= 0")
        span = v[:, 0] + v[:, 1]
        if np.abs(span - 1.0).max() > 1e-6:
            raise DegenerateFace(f"d_cl + d_cr must equal 1, got spans {span}")
        object.__setattr__(self, "values", v)

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def region(self, region: RegionKind) -> np.ndarray:
        return self.values[LOC_REGIONS.index(region)]


@dataclass(frozen=True)
class SizeVector:
    """Widths of (left eye, right eye, nose, mouth) in cheek widths."""

    values: np.ndarray  # shape (4,)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (4,):
            raise DegenerateFace(f"size vector must be (4,), got {v.shape}")
        if not np.all(np.isfinite(v)) or v.min() <= 0 or v.max() >= 1:
            raise DegenerateFace(f"widths must lie strictly inside (0, 1), got {v}")
        object.__setattr__(self, "values", v)

    def region(self, region: RegionKind) -> float:
        return float(self.values[LOC_REGIONS.index(region)])


@dataclass(frozen=True)
class FaceShape:
    """17 cheek-contour points, cheek-box origin at (0, 0), both axes in cheek
    widths (so points[:, 1].max() is the cheek aspect ratio)."""

    points: np.ndarray  # shape (17, 2)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.shape != (17, 2):
            raise DegenerateFace(f"face shape must be (17, 2), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise DegenerateFace("face shape must be finite")
        if not np.all(np.diff(p[:, 0]) > 0):
            raise DegenerateFace("cheek contour must be x-monotone, left jaw to right jaw")
        object.__setattr__(self, "points", p)

    @property
    def flat(self) -> np.ndarray:
        return self.points.reshape(-1)

    @property
    def aspect(self) -> float:
        """Cheek height over cheek width."""
        return float(self.points[:, 1].max() - self.points[:, 1].min())


@dataclass(frozen=True)
class GeoAttributes:
    loc: LocVector
    siz: SizeVector
    shape: FaceShape


@dataclass(frozen=True)
class MeanGeo:
    """Dataset means of the three attribute encodings.

    forehead_ratio is ingest-time metadata: mean forehead extent above the
    cheek top, in cheek heights, measured from the schema's Hair points when
    they trace a hairline (manga schema); None otherwise.
    """

    loc: LocVector
    siz: SizeVector
    shape: FaceShape
    sample_count: int
    forehead_ratio: float | None = None

    def __post_init__(self):
        if self.sample_count < 1:
            raise EmptyDataset("mean geometry needs at least one sample")


def cheek_box(l: LandmarkSet) -> tuple[float, float, float, float]:
    """(left, top, width, height) of the cheek-contour bounding box."""
    pts = l.region_points(RegionKind.CHEEK)
    left, top = pts[:, 0].min(), pts[:, 1].min()
    w = pts[:, 0].max() - left
    h = pts[:, 1].max() - top
    if w < MIN_CHEEK_WIDTH_PX:
        raise DegenerateFace(f"cheek width {w:.3g} px below {MIN_CHEEK_WIDTH_PX} px")
    return float(left), float(top), float(w), float(h)


def region_center(l: LandmarkSet, region: RegionKind) -> np.ndarray:
    """Region center = centroid of the region's landmark subset."""
    return l.region_points(region).mean(axis=0)


def encode_location(l: LandmarkSet) -> LocVector:
    left, top, w, h = cheek_box(l)
    bottom = top + h
    rows = []
    for region in LOC_REGIONS:
        cx, cy = region_center(l, region)
        rows.append(((cx - left) / w, (left + w - cx) / w, (bottom - cy) / w))
    return LocVector(np.asarray(rows))


def encode_size(l: LandmarkSet) -> SizeVector:
    _, _, w, _ = cheek_box(l)
    widths = []
    for region in LOC_REGIONS:
        pts = l.region_points(region)
        widths.append((pts[:, 0].max() - pts[:, 0].min()) / w)
    v = np.asarray(widths)
    if v.min() <= 0:
        raise DegenerateFace(f"zero-width region among {v}")
    return SizeVector(v)


def extract_shape(l: LandmarkSet) -> FaceShape:
    left, top, w, _ = cheek_box(l)
    pts = l.region_points(RegionKind.CHEEK)
    return FaceShape((pts - (left, top)) / w)


def encode_geometry(l: LandmarkSet) -> GeoAttributes:
    return GeoAttributes(encode_location(l), encode_size(l), extract_shape(l))


def forehead_extent_ratio(l: LandmarkSet) -> float | None:
    """Hairline height above the cheek top, in cheek heights.

    Only the manga schema's Hair points trace a hairline (the photo schema's
    Hair entry is a cropping helper), so this is None for other schemas or
    when the points do not rise above the cheek box.
    """
    from .landmarks import Schema

    if l.schema is not Schema.MANGA106:
        return None
    hair = l.region_points(RegionKind.HAIR)
    _, top, _, h = cheek_box(l)
    extent = top - hair[:, 1].min()
    if extent <= 0:
        return None
    return float(extent / h)


def mean_geo(dataset: list[LandmarkSet]) -> MeanGeo:
    """Arithmetic mean of each encoded attribute over a uniform-schema dataset."""
    if not dataset:
        raise EmptyDataset("mean_geo over an empty dataset")
    schemas = {l.schema for l in dataset}
    if len(schemas) != 1:
        raise EmptyDataset(f"mixed schemas in dataset: {sorted(s.value for s in schemas)}")
    locs = np.stack([encode_location(l).values for l in dataset])
    sizs = np.stack([encode_size(l).values for l in dataset])
    shps = np.stack([extract_shape(l).points for l in dataset])
    ratios = [r for r in (forehead_extent_ratio(l) for l in dataset) if r is not None]
    ratio = float(np.mean(ratios)) if len(ratios) == len(dataset) else None
    return MeanGeo(
        loc=LocVector(locs.mean(axis=0)),
        siz=SizeVector(sizs.mean(axis=0)),
        shape=FaceShape(shps.mean(axis=0)),
        sample_count=len(dataset),
        forehead_ratio=ratio,
    )


def decode_centers(loc: LocVector, cheek: tuple[float, float, float, float]) -> np.ndarray:
    """Absolute region centers implied by a location vector inside a cheek box
    given as (left, top, width, height). Inverse of encode_location."""
    left, top, w, h = cheek
    bottom = top + h
    v = loc.values
    xs = left + v[:, 0] * w
    ys = bottom - v[:, 2] * w
    return np.stack([xs, ys], axis=1)


def decode_widths(siz: SizeVector, cheek_width: float) -> np.ndarray:
    return siz.values * cheek_width


def crop_window(l: LandmarkSet, region: RegionKind, margin: float) -> tuple[int, int, int]:
    """Integer square window (x0, y0, side) for a region crop: the landmark
    bounding box grown by `margin`, squared on the longer side, clamped to
    stay inside the image (shifted, never shrunk below the image)."""
    if margin < 0:
        raise DegenerateFace("margin must be >= 0")
    pts = l.region_points(region)
    x0, x1 = pts[:, 0].min(), pts[:, 0].max()
    y0, y1 = pts[:, 1].min(), pts[:, 1].max()
    side = max(x1 - x0, y1 - y0) * (1.0 + margin)
    if side < 1.0:
        raise DegenerateFace(f"{region.value} bounding box is degenerate")
    w, h = l.image_size
    side_px = min(int(round(side)), w, h)
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    wx = int(round(cx - side / 2.0))
    wy = int(round(cy - side / 2.0))
    wx = min(max(wx, 0), w - side_px)
    wy = min(max(wy, 0), h - side_px)
    return wx, wy, side_px


def crop_region(photo: GrayImage, l: LandmarkSet, region: RegionKind,
                margin: float = 0.2, out_size: int = 256) -> GrayImage:
    """Square region crop resampled to the region's canonical resolution."""
    if region not in (RegionKind.EYE_LEFT, RegionKind.EYE_RIGHT, RegionKind.NOSE,
                      RegionKind.MOUTH, RegionKind.HAIR):
        raise DegenerateFace(f"{region.value} is not a croppable landmark region")
    if (photo.width, photo.height) != tuple(l.image_size):
        raise DegenerateFace(
            f"photo size {(photo.width, photo.height)} != landmark frame {l.image_size}"
        )
    x0, y0, side = crop_window(l, region, margin)
    window = GrayImage(photo.pixels[y0:y0 + side, x0:x0 + side].copy())
    return resize(window, out_size)
