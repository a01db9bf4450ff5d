"""Landmark detection adapter.

The pipeline treats the detector as pluggable: anything callable that maps a
photo to an (n, 2) point array (or None when no face is present) can be
passed to detect_landmarks. The built-in default registers the synthetic
face template to the photo via the dark-region bounding box; it is a desk
stub that is exact for similarity transforms of the template face and is not
a substitute for a real detector.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from ..errors import InvalidSchema, NoFaceFound
from ..imaging import GrayImage
from .landmarks import LandmarkSet, Schema

Detector = Callable[[GrayImage], Optional[np.ndarray]]


class MomentTemplateDetector:
    """Estimates scale and translation of the template face from the bounding
    box of non-background pixels, then maps the template landmarks."""

    def __init__(self, dark_level: float = 240.0, min_dark_fraction: float = 1e-4):
        self.dark_level = dark_level
        self.min_dark_fraction = min_dark_fraction
        self._reference: tuple[np.ndarray, np.ndarray] | None = None

    def _calibrate(self) -> tuple[np.ndarray, np.ndarray]:
        if self._reference is None:
            from ..synthfaces import photo_landmarks, render_photo

            template = photo_landmarks(size=256)
            ref = render_photo(template)
            box = self._dark_box(ref)
            if box is None:
                raise NoFaceFound("detector calibration produced an empty reference")
            self._reference = (template.points.copy(), box)
        return self._reference

    def _dark_box(self, photo: GrayImage) -> np.ndarray | None:
        mask = photo.pixels < self.dark_level
        if mask.mean() < self.min_dark_fraction:
            return None
        ys, xs = np.nonzero(mask)
        return np.asarray([xs.min(), ys.min(), xs.max() - xs.min(), ys.max() - ys.min()],
                          dtype=np.float64)

    def __call__(self, photo: GrayImage) -> np.ndarray | None:
        template, ref_box = self._calibrate()
        box = self._dark_box(photo)
        if box is None:
            return None
        scale = ((box[2] / ref_box[2]) + (box[3] / ref_box[3])) / 2.0
        ref_center = ref_box[:2] + ref_box[2:] / 2.0
        center = box[:2] + box[2:] / 2.0
        pts = (template - ref_center) * scale + center
        w, h = photo.width, photo.height
        pts[:, 0] = np.clip(pts[:, 0], 0.0, w - 1e-6)
        pts[:, 1] = np.clip(pts[:, 1], 0.0, h - 1e-6)
        return pts


_default_detector: Detector | None = None


def default_detector() -> Detector:
    global _default_detector
    if _default_detector is None:
        _default_detector = MomentTemplateDetector()
    return _default_detector


def detect_landmarks(photo: GrayImage, detector: Detector | None = None) -> LandmarkSet:
    """Run a landmark detector and validate its output into a 68-point set."""
    det = detector if detector is not None else default_detector()
    pts = det(photo)
    if pts is None:
        raise NoFaceFound("no face found in the photo")
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim != 2 or pts.shape != (Schema.PHOTO68.point_count, 2):
        raise InvalidSchema(
            f"detector returned {pts.shape}, expected ({Schema.PHOTO68.point_count}, 2)"
        )
    return LandmarkSet(points=pts, schema=Schema.PHOTO68,
                       image_size=(photo.width, photo.height))
