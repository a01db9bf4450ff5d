"""Parametric synthetic faces: landmark templates plus photo/line-art renderers.

These are the desk-scale stand-ins for real data: they feed the toy training
corpora, the paired eye-encoder corpus, ingestion fixtures, and the template
registration used by the default landmark detector. Rendering is a pure
function of the landmark set, so a transformed landmark set draws the same
face transformed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from PIL import Image, ImageDraw
from scipy.ndimage import gaussian_filter

from .errors import InvalidSchema
from .facegeom.landmarks import (
    LandmarkSet,
    RegionKind,
    Schema,
    brow_curves,
    eye_rings,
    mouth_rings,
    nose_parts,
)
from .imaging import GrayImage, draw_polyline, threshold
from .synthesis.pchip import closed_curve_points, pchip_curve_points

CANONICAL = 256.0


@dataclass(frozen=True)
class FaceParams:
    """Multiplicative shape knobs around the canonical template (offsets in
    canonical pixels)."""

    face_w: float = 1.0
    face_h: float = 1.0
    eye_w: float = 1.0
    eye_h: float = 1.0
    eye_sep: float = 1.0
    eye_dy: float = 0.0
    brow_dy: float = 0.0
    nose_w: float = 1.0
    nose_len: float = 1.0
    mouth_w: float = 1.0
    mouth_h: float = 1.0
    mouth_dy: float = 0.0
    hair_h: float = 1.0


def sample_params(rng: np.random.Generator, jitter: float = 0.08) -> FaceParams:
    """Random face around the template; `jitter` is the relative spread."""
    u = lambda lo, hi: float(rng.uniform(lo, hi))
    j = jitter
    return FaceParams(
        face_w=u(1 - j, 1 + j),
        face_h=u(1 - j, 1 + j),
        eye_w=u(1 - 1.5 * j, 1 + 1.5 * j),
        eye_h=u(1 - j, 1 + j),
        eye_sep=u(1 - 0.75 * j, 1 + 0.75 * j),
        eye_dy=u(-40 * j, 40 * j),
        brow_dy=u(-25 * j, 25 * j),
        nose_w=u(1 - j, 1 + j),
        nose_len=u(1 - j, 1 + j),
        mouth_w=u(1 - 1.5 * j, 1 + 1.5 * j),
        mouth_h=u(1 - j, 1 + j),
        mouth_dy=u(-50 * j, 50 * j),
        hair_h=u(1 - j, 1 + j),
    )


def _assemble(pts_canonical: list[tuple[float, float]], size: int,
              schema: Schema) -> LandmarkSet:
    s = size / CANONICAL
    pts = np.asarray(pts_canonical, dtype=np.float64)
    pts = (pts + (128.0, 110.0)) * s
    return LandmarkSet(points=pts, schema=schema, image_size=(size, size))


def photo_landmarks(p: FaceParams = FaceParams(), size: int = 256) -> LandmarkSet:
    """68-point frontal face. Coordinates are offsets from the face anchor,
    x scaled by face_w and y by face_h, so the cheek-normalized encodings
    depend only on the ratio parameters."""
    fw, fh = p.face_w, p.face_h
    pts: list[tuple[float, float]] = []

    for i in range(17):  # jaw, left temple -> chin -> right temple
        th = np.pi * i / 16.0
        pts.append((-80.0 * fw * np.cos(th), 98.0 * fh * np.sin(th)))

    ecy = (14.0 + p.eye_dy) * fh
    for side in (-1.0, 1.0):  # brows: 17-21 left, 22-26 right
        ecx = side * 40.0 * p.eye_sep * fw
        xs = np.array([-19.0, -9.5, 0.0, 9.5, 19.0]) * p.eye_w * fw
        arch = np.array([0.0, -3.0, -5.0, -3.0, 0.0])
        by = ecy - (22.0 + p.brow_dy) * fh
        seq = [(ecx + x, by + a) for x, a in zip(xs, arch)]
        pts.extend(seq if side < 0 else seq)

    # nose: bridge 27-30, base 31-35
    for i in range(4):
        pts.append((0.0, (10.0 + 12.0 * i * p.nose_len) * fh))
    base_y = 50.0 * p.nose_len * fh
    for dx, dy in ((-12, 0.0), (-6, 2.5), (0, 4.0), (6, 2.5), (12, 0.0)):
        pts.append((dx * p.nose_w * fw, base_y + dy * fh))

    # eyes: 36-41 left, 42-47 right
    a, b = 14.0 * p.eye_w * fw, 6.0 * p.eye_h * fh
    for side in (-1.0, 1.0):
        ecx = side * 40.0 * p.eye_sep * fw
        ring = [(-a, 0.0), (-a / 2, -b), (a / 2, -b), (a, 0.0), (a / 2, b), (-a / 2, b)]
        pts.extend([(ecx + x, ecy + y) for x, y in ring])

    # mouth: outer 48-59, inner 60-67
    mcy = (70.0 + p.mouth_dy) * fh
    rx, ry = 26.0 * p.mouth_w * fw, 10.0 * p.mouth_h * fh
    outer = [(-1.0, 0.0), (-0.65, -0.7), (-0.3, -0.9), (0.0, -1.0), (0.3, -0.9),
             (0.65, -0.7), (1.0, 0.0), (0.65, 0.7), (0.3, 0.9), (0.0, 1.0),
             (-0.3, 0.9), (-0.65, 0.7)]
    pts.extend([(rx * x, mcy + ry * y) for x, y in outer])
    rx2, ry2 = 20.0 * p.mouth_w * fw, 4.0 * p.mouth_h * fh
    inner = [(-1.0, 0.0), (-0.5, -0.75), (0.0, -1.0), (0.5, -0.75), (1.0, 0.0),
             (0.5, 0.75), (0.0, 1.0), (-0.5, 0.75)]
    pts.extend([(rx2 * x, mcy + ry2 * y) for x, y in inner])

    return _assemble(pts, size, Schema.PHOTO68)


def manga_landmarks(p: FaceParams = FaceParams(), size: int = 256) -> LandmarkSet:
    """106-point manga face: larger eyes, pointed chin, hairline arc."""
    fw, fh = p.face_w, p.face_h
    pts: list[tuple[float, float]] = []

    for i in range(17):  # pointed jaw
        th = np.pi * i / 16.0
        pts.append((-80.0 * fw * np.cos(th) * (1.0 - 0.18 * np.sin(th)),
                    100.0 * fh * np.sin(th)))

    ecy = (16.0 + p.eye_dy) * fh
    for side in (-1.0, 1.0):  # brows, 8 points each
        ecx = side * 38.0 * p.eye_sep * fw
        xs = np.linspace(-21.0, 21.0, 8) * p.eye_w * fw
        arch = -5.5 * np.sin(np.linspace(0.0, np.pi, 8))
        by = ecy - (26.0 + p.brow_dy) * fh
        pts.extend([(ecx + x, by + a) for x, a in zip(xs, arch)])

    a, b = 21.0 * p.eye_w * fw, 11.0 * p.eye_h * fh
    ring = [(-1.0, 0.0), (-0.6, -0.8), (-0.2, -1.0), (0.2, -1.0), (0.6, -0.8),
            (1.0, 0.0), (0.6, 0.8), (0.2, 1.0), (-0.2, 1.0), (-0.6, 0.8)]
    for side in (-1.0, 1.0):
        ecx = side * 38.0 * p.eye_sep * fw
        pts.extend([(ecx + a * x, ecy + b * y) for x, y in ring])

    for i in range(4):  # nose bridge 53-56
        pts.append((0.0, (14.0 + 10.0 * i * p.nose_len) * fh))
    base_y = 48.0 * p.nose_len * fh
    for dx, dy in ((-9, 0.0), (-6, 1.5), (-3, 2.5), (0, 3.0), (3, 2.5), (6, 1.5), (9, 0.0)):
        pts.append((dx * p.nose_w * fw, base_y + dy * fh))

    mcy = (68.0 + p.mouth_dy) * fh
    rx, ry = 20.0 * p.mouth_w * fw, 6.0 * p.mouth_h * fh
    outer = [(-1.0, 0.0), (-0.65, -0.65), (-0.3, -0.9), (0.0, -1.0), (0.3, -0.9),
             (0.65, -0.65), (1.0, 0.0), (0.65, 0.65), (0.3, 0.9), (0.0, 1.0),
             (-0.3, 0.9), (-0.65, 0.65)]
    pts.extend([(rx * x, mcy + ry * y) for x, y in outer])
    rx2, ry2 = 14.0 * p.mouth_w * fw, 2.5 * p.mouth_h * fh
    inner = [(-1.0, 0.0), (-0.57, -0.85), (-0.2, -1.0), (0.2, -1.0), (0.57, -0.85),
             (1.0, 0.0), (0.57, 0.85), (0.2, 1.0), (-0.2, 1.0), (-0.57, 0.85)]
    pts.extend([(rx2 * x, mcy + ry2 * y) for x, y in inner])

    for k in range(20):  # hairline arc 86-105
        phi = np.pi * (k + 0.5) / 20.0
        pts.append((-86.0 * fw * np.cos(phi), 8.0 - 62.0 * p.hair_h * fh * np.sin(phi)))

    return _assemble(pts, size, Schema.MANGA106)


def transform(l: LandmarkSet, scale: float = 1.0, offset=(0.0, 0.0),
              image_size: tuple[int, int] | None = None) -> LandmarkSet:
    """Uniformly scaled and translated copy of a landmark set."""
    pts = l.points * scale + np.asarray(offset, dtype=np.float64)
    return replace(l, points=pts, image_size=image_size or l.image_size)


# --- rasterization ---------------------------------------------------------

def _eye_rings(l: LandmarkSet) -> list[np.ndarray]:
    left, right = eye_rings(l.schema)
    return [l.points[list(left)], l.points[list(right)]]


def _brows(l: LandmarkSet) -> list[np.ndarray]:
    left, right = brow_curves(l.schema)
    return [l.points[list(left)], l.points[list(right)]]


def _nose_parts(l: LandmarkSet) -> tuple[np.ndarray, np.ndarray]:
    bridge, base = nose_parts(l.schema)
    return l.points[list(bridge)], l.points[list(base)]


def _mouth_rings(l: LandmarkSet) -> list[np.ndarray]:
    outer, inner = mouth_rings(l.schema)
    return [l.points[list(outer)], l.points[list(inner)]]


def _forehead_apex(l: LandmarkSet, rise: float) -> np.ndarray:
    cheek = l.region_points(RegionKind.CHEEK)
    top = cheek[:, 1].min()
    h = cheek[:, 1].max() - top
    cx = (cheek[0, 0] + cheek[-1, 0]) / 2.0
    return np.asarray([cx, top - rise * h])


def render_photo(l: LandmarkSet, hair: bool = True) -> GrayImage:
    """Soft grayscale face on a white background (the photo domain)."""
    if l.schema is not Schema.PHOTO68:
        raise InvalidSchema("photo rendering expects the 68-point schema")
    w, h = l.image_size
    im = Image.new("L", (w, h), 255)
    d = ImageDraw.Draw(im)

    cheek = l.region_points(RegionKind.CHEEK)
    apex = _forehead_apex(l, 0.45)
    t0, t1 = cheek[0], cheek[-1]
    # forehead closure: two quadratic arcs, temple -> apex -> temple
    ts = np.linspace(0.0, 1.0, 24)
    right_up = np.outer((1 - ts) ** 2, t1) + np.outer(2 * (1 - ts) * ts, (apex + t1) / 2 + (0, -0.25 * (t1[1] - apex[1]))) + np.outer(ts**2, apex)
    left_dn = np.outer((1 - ts) ** 2, apex) + np.outer(2 * (1 - ts) * ts, (apex + t0) / 2 + (0, -0.25 * (t0[1] - apex[1]))) + np.outer(ts**2, t0)
    face_poly = [tuple(pt) for pt in np.vstack([cheek, right_up, left_dn])]

    if hair:
        hx = apex[0]
        cheek_w = cheek[-1, 0] - cheek[0, 0]
        cheek_h = cheek[:, 1].max() - cheek[:, 1].min()
        hy = cheek[:, 1].min() - 0.28 * cheek_h
        d.ellipse([hx - 0.55 * cheek_w, hy - 0.38 * cheek_h,
                   hx + 0.55 * cheek_w, hy + 0.42 * cheek_h], fill=66)
    d.polygon(face_poly, fill=206)

    for brow in _brows(l):
        d.line([tuple(pt) for pt in brow], fill=84, width=4, joint="curve")
    for ring in _eye_rings(l):
        d.polygon([tuple(pt) for pt in ring], fill=62)
        c = ring.mean(axis=0)
        r = (ring[:, 1].max() - ring[:, 1].min()) * 0.32
        d.ellipse([c[0] - r, c[1] - r, c[0] + r, c[1] + r], fill=24)
    bridge, base = _nose_parts(l)
    d.line([tuple(pt) for pt in bridge], fill=166, width=2)
    d.line([tuple(pt) for pt in base], fill=150, width=2)
    outer, _ = _mouth_rings(l)
    d.polygon([tuple(pt) for pt in outer], fill=128)
    d.line([tuple(outer[0]), tuple(outer[6])], fill=92, width=2)

    arr = gaussian_filter(np.asarray(im, dtype=np.float32), sigma=1.2)
    return GrayImage(np.clip(arr, 0.0, 255.0))


def render_lineart(l: LandmarkSet, stroke: int = 3) -> GrayImage:
    """Binary line drawing of the face (the manga / portrait domain)."""
    w, h = l.image_size
    canvas = np.full((h, w), 255.0, dtype=np.float32)

    cheek = l.region_points(RegionKind.CHEEK)
    draw_polyline(canvas, pchip_curve_points(cheek), width=stroke)
    for brow in _brows(l):
        draw_polyline(canvas, pchip_curve_points(brow), width=stroke)
    for ring in _eye_rings(l):
        draw_polyline(canvas, closed_curve_points(ring), width=max(2, stroke - 1))
    bridge, base = _nose_parts(l)
    draw_polyline(canvas, bridge, width=max(2, stroke - 1))
    draw_polyline(canvas, base, width=max(2, stroke - 1))
    for ring in _mouth_rings(l):
        draw_polyline(canvas, closed_curve_points(ring), width=max(2, stroke - 1))
    if l.schema is Schema.MANGA106:
        hairline = l.region_points(RegionKind.HAIR)
        draw_polyline(canvas, pchip_curve_points(hairline), width=stroke)

    return threshold(GrayImage(canvas))


# --- toy corpora and fixture trees ------------------------------------------

def toy_eye_corpus(n: int = 16, seed: int = 0, res: int = 64,
                   jitter: float = 0.08) -> tuple[np.ndarray, np.ndarray]:
    """Unpaired toy eye corpus: soft photo crops vs binary manga line art."""
    from .facegeom.encode import crop_region

    rng = np.random.default_rng(seed)
    photos, mangas = [], []
    for _ in range(n):
        pl = photo_landmarks(sample_params(rng, jitter), size=256)
        photos.append(crop_region(render_photo(pl), pl, RegionKind.EYE_LEFT, 0.35, res).pixels)
        ml = manga_landmarks(sample_params(rng, jitter), size=256)
        mangas.append(crop_region(render_lineart(ml), ml, RegionKind.EYE_LEFT, 0.35, res).pixels)
    return np.stack(photos), np.stack(mangas)


def toy_geometry_domain(n: int = 200, seed: int = 0, eye_scale: float = 1.5,
                        mouth_raise: float = 0.05, jitter: float = 0.08):
    """Synthetic geometry domains for the geometry branch: the manga side is
    an independent sample of the same face population with eye widths scaled
    by `eye_scale` and the mouth raised by `mouth_raise` cheek heights.

    Returns (photo_geos, manga_geos) as GeoAttributes lists.
    """
    from .facegeom.encode import GeoAttributes, encode_geometry

    rng = np.random.default_rng(seed)

    def sample_geo():
        return encode_geometry(photo_landmarks(sample_params(rng, jitter), size=256))

    photo = [sample_geo() for _ in range(n)]
    manga = [apply_toy_transform(sample_geo(), eye_scale, mouth_raise) for _ in range(n)]
    return photo, manga


def apply_toy_transform(g, eye_scale: float = 1.5, mouth_raise: float = 0.05):
    """The ground-truth photo->manga map of the toy geometry domain."""
    from .facegeom.encode import GeoAttributes, LocVector, SizeVector

    siz = g.siz.values.copy()
    siz[0] *= eye_scale
    siz[1] *= eye_scale
    loc = g.loc.values.copy()
    loc[3, 2] += mouth_raise * g.shape.aspect
    return GeoAttributes(LocVector(loc), SizeVector(siz), g.shape)


def build_dataset_tree(root, n_faces: int = 12, seed: int = 0,
                       resolution: int = 256) -> None:
    """Write a complete synthetic ingestion tree: photo and manga region
    crops, full faces, manga landmark files, and the placeholder catalog."""
    from pathlib import Path

    from .facegeom.encode import crop_region
    from .imaging import save_png
    from .synthesis.catalog import write_default_catalog

    root = Path(root)
    rng = np.random.default_rng(seed)
    crops = ((RegionKind.EYE_LEFT, "eye", 0.35), (RegionKind.EYE_RIGHT, "eye", 0.35),
             (RegionKind.NOSE, "nose", 0.3), (RegionKind.MOUTH, "mouth", 0.4))
    for domain in ("photos", "manga"):
        for sub in ("eye", "nose", "mouth", "face"):
            (root / domain / sub).mkdir(parents=True, exist_ok=True)
    (root / "manga" / "landmarks").mkdir(parents=True, exist_ok=True)

    for i in range(n_faces):
        pl = photo_landmarks(sample_params(rng), size=resolution)
        photo = render_photo(pl)
        save_png(photo, root / "photos" / "face" / f"f{i:03d}.png")
        for region, sub, margin in crops:
            tag = "l" if region is RegionKind.EYE_LEFT else "r"
            suffix = f"_{tag}" if sub == "eye" else ""
            save_png(crop_region(photo, pl, region, margin, resolution),
                     root / "photos" / sub / f"f{i:03d}{suffix}.png")

        ml = manga_landmarks(sample_params(rng), size=resolution)
        art = render_lineart(ml)
        save_png(art, root / "manga" / "face" / f"m{i:03d}.png")
        for region, sub, margin in crops:
            tag = "l" if region is RegionKind.EYE_LEFT else "r"
            suffix = f"_{tag}" if sub == "eye" else ""
            save_png(crop_region(art, ml, region, margin, resolution),
                     root / "manga" / sub / f"m{i:03d}{suffix}.png")
        pts = np.rint(ml.points).astype(int)
        text = "\n".join(f"{x} {y}" for x, y in pts) + "\n"
        (root / "manga" / "landmarks" / f"m{i:03d}.txt").write_text(text)

    write_default_catalog(root / "catalog")
