"""Landmark schemas, region index tables, and symmetric preprocessing."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from importlib import resources

import numpy as np

from ..errors import InvalidSchema


class Schema(Enum):
    PHOTO68 = "Photo68"
    MANGA106 = "Manga106"

    @property
    def point_count(self) -> int:
        return {Schema.PHOTO68: 68, Schema.MANGA106: 106}[self]

    @property
    def table_name(self) -> str:
        return {Schema.PHOTO68: "photo68", Schema.MANGA106: "manga106"}[self]


class RegionKind(Enum):
    EYE_LEFT = "EyeLeft"
    EYE_RIGHT = "EyeRight"
    NOSE = "Nose"
    MOUTH = "Mouth"
    HAIR = "Hair"
    CHEEK = "Cheek"
    EAR = "Ear"
    BODY = "Body"


# regions that carry relative-location encodings
LOC_REGIONS = (RegionKind.EYE_LEFT, RegionKind.EYE_RIGHT, RegionKind.NOSE, RegionKind.MOUTH)


@dataclass(frozen=True)
class LandmarkSet:
    """Ordered 2-D facial landmarks in pixel coordinates (y grows downward)."""

    points: np.ndarray
    schema: Schema
    image_size: tuple[int, int]  # (width, height)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidSchema(f"points must be (n, 2), got {pts.shape}")
        if pts.shape[0] != self.schema.point_count:
            raise InvalidSchema(
                f"{self.schema.value} requires {self.schema.point_count} points, "
                f"got {pts.shape[0]}"
            )
        if not np.all(np.isfinite(pts)):
            raise InvalidSchema("landmark coordinates must be finite")
        w, h = self.image_size
        if pts[:, 0].min() < 0 or pts[:, 0].max() >= w or pts[:, 1].min() < 0 or pts[:, 1].max() >= h:
            raise InvalidSchema(f"landmarks must lie within [0, {w}) x [0, {h})")
        object.__setattr__(self, "points", pts)

    def region_points(self, region: RegionKind) -> np.ndarray:
        return self.points[list(region_indices(self.schema, region))]


def _data_text(name: str) -> str:
    return resources.files("mangaface.facegeom").joinpath("data", name).read_text()


@lru_cache(maxsize=None)
def load_index_table(schema: Schema) -> dict[RegionKind, tuple[int, ...]]:
    """Region -> landmark indices, parsed from the schema's index-table file."""
    table: dict[RegionKind, tuple[int, ...]] = {}
    for line in _data_text(f"{schema.table_name}.idx").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, values = line.partition(":")
        idx = tuple(int(tok) for tok in values.split(",") if tok.strip())
        table[RegionKind(key.strip())] = idx
    for region, idx in table.items():
        bad = [i for i in idx if not 0 <= i < schema.point_count]
        if bad:
            raise InvalidSchema(f"{schema.value} index table: {region.value} has out-of-range {bad}")
    return table


def region_indices(schema: Schema, region: RegionKind) -> tuple[int, ...]:
    table = load_index_table(schema)
    if region not in table:
        raise InvalidSchema(f"{schema.value} has no index entry for region {region.value}")
    return table[region]


@lru_cache(maxsize=None)
def load_pair_table(schema: Schema) -> tuple[tuple[tuple[int, int], ...], tuple[int, ...]]:
    """Mirror pairs and midline point indices for symmetric preprocessing."""
    pairs: list[tuple[int, int]] = []
    midline: list[int] = []
    for line in _data_text(f"{schema.table_name}.pairs").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, values = line.partition(":")
        nums = [int(tok) for tok in values.split(",") if tok.strip()]
        if key.strip() == "pair":
            pairs.append((nums[0], nums[1]))
        elif key.strip() == "midline":
            midline.extend(nums)
        else:
            raise InvalidSchema(f"unknown pair-table key {key!r}")
    covered = {i for p in pairs for i in p} | set(midline)
    if covered != set(range(schema.point_count)):
        raise InvalidSchema(f"{schema.value} pair table does not cover all points")
    return tuple(pairs), tuple(midline)


def mouth_rings(schema: Schema) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """(outer, inner) mouth ring indices, each ordered around the lips."""
    if schema is Schema.PHOTO68:
        return tuple(range(48, 60)), tuple(range(60, 68))
    return tuple(range(64, 76)), tuple(range(76, 86))


def eye_rings(schema: Schema) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """(left, right) eye ring indices, each ordered around the eye."""
    if schema is Schema.PHOTO68:
        return tuple(range(36, 42)), tuple(range(42, 48))
    return tuple(range(33, 43)), tuple(range(43, 53))


def brow_curves(schema: Schema) -> tuple[tuple[int, ...], tuple[int, ...]]:
    if schema is Schema.PHOTO68:
        return tuple(range(17, 22)), tuple(range(22, 27))
    return tuple(range(17, 25)), tuple(range(25, 33))


def nose_parts(schema: Schema) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """(bridge, base) nose polyline indices."""
    if schema is Schema.PHOTO68:
        return tuple(range(27, 31)), tuple(range(31, 36))
    return tuple(range(53, 57)), tuple(range(57, 64))


def midline_x(l: LandmarkSet) -> float:
    """Face axis: vertical line through the mean x of the midline points."""
    _, mid = load_pair_table(l.schema)
    return float(l.points[list(mid), 0].mean())


def symmetrize(l: LandmarkSet) -> LandmarkSet:
    """Mirror-symmetric version of a landmark set.

    Each mirrored pair is replaced by two points equidistant from the face
    midline with averaged y; midline points are snapped onto the axis. The
    operation is idempotent and preserves point count and schema.
    """
    pairs, mid = load_pair_table(l.schema)
    m = midline_x(l)
    pts = l.points.copy()
    for a, b in pairs:
        half = (pts[b, 0] - pts[a, 0]) / 2.0
        y = (pts[a, 1] + pts[b, 1]) / 2.0
        pts[a] = (m - half, y)
        pts[b] = (m + half, y)
    pts[list(mid), 0] = m
    return replace(l, points=pts)


def reflect_about_midline(l: LandmarkSet) -> LandmarkSet:
    """Mirror the whole set about its midline, swapping paired indices."""
    pairs, _ = load_pair_table(l.schema)
    m = midline_x(l)
    pts = l.points.copy()
    pts[:, 0] = 2.0 * m - pts[:, 0]
    for a, b in pairs:
        pts[[a, b]] = pts[[b, a]]
    return replace(l, points=pts)
