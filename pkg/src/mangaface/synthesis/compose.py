"""Face-shape drawing, component placement, and scene rendering."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InvalidGeo, MissingComponent
from ..facegeom.landmarks import RegionKind
from ..gtn import FaceLayout
from ..imaging import GrayImage, blank, draw_polyline, load_png, resize, threshold
from .catalog import ComponentCatalog
from .pchip import pchip_curve_points
from .scene import (
    Z_BODY,
    Z_EAR,
    Z_EYES,
    Z_FACE_SHAPE,
    Z_HAIR,
    Z_MOUTH,
    Z_NOSE,
    CompositionScene,
    SceneComponent,
)

EAR_WIDTH_FRAC = 0.16   # of cheek width
BODY_WIDTH_FRAC = 2.1
BODY_OVERLAP_FRAC = 0.06  # of cheek height, how far the chin overlaps the body


def _circle_through(a: np.ndarray, b: np.ndarray, c: np.ndarray):
    """Center and radius of the circle through three points, or None if
    collinear."""
    d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    if abs(d) < 1e-9:
        return None
    ux = ((a @ a) * (b[1] - c[1]) + (b @ b) * (c[1] - a[1]) + (c @ c) * (a[1] - b[1])) / d
    uy = ((a @ a) * (c[0] - b[0]) + (b @ b) * (a[0] - c[0]) + (c @ c) * (b[0] - a[0])) / d
    center = np.array([ux, uy])
    return center, float(np.linalg.norm(a - center))


def _arc_points(t0: np.ndarray, t1: np.ndarray, apex: np.ndarray, n: int = 96) -> np.ndarray:
    """Polyline along the circular arc from t0 to t1 passing through apex;
    falls back to the polyline t0-apex-t1 when the points are collinear."""
    fit = _circle_through(t0, t1, apex)
    if fit is None:
        return np.vstack([t0, apex, t1])
    center, radius = fit
    a0 = np.arctan2(t0[1] - center[1], t0[0] - center[0])
    a1 = np.arctan2(t1[1] - center[1], t1[0] - center[0])
    aa = np.arctan2(apex[1] - center[1], apex[0] - center[0])

    def sweep(start, end, direction):
        span = (end - start) * direction
        span = span % (2.0 * np.pi)
        return start + direction * np.linspace(0.0, span, n)

    for direction in (1.0, -1.0):
        angles = sweep(a0, a1, direction)
        # accept the direction whose sweep passes through the apex angle
        rel_apex = ((aa - a0) * direction) % (2.0 * np.pi)
        rel_end = ((a1 - a0) * direction) % (2.0 * np.pi)
        if rel_apex <= rel_end + 1e-9:
            return np.stack([center[0] + np.cos(angles) * radius,
                             center[1] + np.sin(angles) * radius], axis=1)
    return np.vstack([t0, apex, t1])


def draw_face_shape(layout: FaceLayout, stroke: int = 3) -> GrayImage:
    """Black face outline: the shape-preserving curve through the cheek
    points, closed across the forehead by a circular arc."""
    if stroke < 1:
        raise InvalidGeo(f"stroke width must be >= 1, got {stroke}")
    w, h = layout.canvas_size
    canvas = np.full((h, w), 255.0, dtype=np.float32)
    cheek = layout.cheek_points
    draw_polyline(canvas, pchip_curve_points(cheek), width=stroke)
    apex = np.array([(cheek[0, 0] + cheek[-1, 0]) / 2.0, layout.forehead_top])
    draw_polyline(canvas, _arc_points(cheek[0], cheek[-1], apex), width=stroke)
    return threshold(GrayImage(canvas))


def place_components(layout: FaceLayout,
                     generated: dict[RegionKind, tuple[str, GrayImage]],
                     catalog: ComponentCatalog,
                     style: dict | None = None,
                     hair_frame: tuple[float, float, float, float] | None = None,
                     ) -> CompositionScene:
    """Build the default scene: generated components centered on their decoded
    region centers and scaled to their decoded widths, ears and a body from
    the catalog, hair (when present) mapped from photo coordinates through
    `hair_frame` (the cheek box in the photo frame)."""
    style = dict(style or {"gender": "male"})
    for region in (RegionKind.EYE_LEFT, RegionKind.EYE_RIGHT, RegionKind.NOSE, RegionKind.MOUTH):
        if region not in generated:
            raise MissingComponent(f"no generated image for region {region.value}")

    left, top, W, H = layout.cheek_box
    comps: list[SceneComponent] = []
    z_eye = {RegionKind.EYE_LEFT: Z_EYES, RegionKind.EYE_RIGHT: Z_EYES + 1}
    for region, z in ((RegionKind.EYE_LEFT, z_eye[RegionKind.EYE_LEFT]),
                      (RegionKind.EYE_RIGHT, z_eye[RegionKind.EYE_RIGHT]),
                      (RegionKind.NOSE, Z_NOSE), (RegionKind.MOUTH, Z_MOUTH)):
        path, image = generated[region]
        comps.append(SceneComponent(
            id=region.value.lower().replace("eye", "eye-").rstrip("-"),
            region=region,
            source={"kind": "generated", "path": path},
            center=layout.region_centers[region],
            scale=layout.region_widths[region] / image.width,
            z_order=z,
        ))

    if RegionKind.HAIR in generated:
        if hair_frame is None:
            raise MissingComponent("hair image given but no photo cheek box to map it with")
        path, image = generated[RegionKind.HAIR]
        pl, pt, pw, _ = hair_frame
        s = W / pw
        img_center_photo = (image.width / 2.0, image.height / 2.0)
        comps.append(SceneComponent(
            id="hair",
            region=RegionKind.HAIR,
            source={"kind": "generated", "path": path},
            center=(left + (img_center_photo[0] - pl) * s,
                    top + (img_center_photo[1] - pt) * s),
            scale=s,
            z_order=Z_HAIR,
        ))

    eye_y = (layout.region_centers[RegionKind.EYE_LEFT][1]
             + layout.region_centers[RegionKind.EYE_RIGHT][1]) / 2.0
    ear_y = (eye_y + layout.region_centers[RegionKind.NOSE][1]) / 2.0
    ear = catalog.get("ears", 0)
    for i, (ex, flipside) in enumerate(((left, "left"), (left + W, "right"))):
        comps.append(SceneComponent(
            id=f"ear-{flipside}",
            region=RegionKind.EAR,
            source={"kind": "catalog", "category": "ears", "index": 0},
            center=(ex, ear_y),
            scale=EAR_WIDTH_FRAC * W / ear.width,
            z_order=Z_EAR + i,
        ))

    body_index = catalog.default_body(style.get("gender", "male"))
    body = catalog.get("bodies", body_index)
    body_scale = BODY_WIDTH_FRAC * W / body.width
    chin_y = top + H
    comps.append(SceneComponent(
        id="body",
        region=RegionKind.BODY,
        source={"kind": "catalog", "category": "bodies", "index": body_index},
        center=(left + W / 2.0,
                chin_y - BODY_OVERLAP_FRAC * H + body.height * body_scale / 2.0),
        scale=body_scale,
        z_order=Z_BODY,
    ))

    return CompositionScene(
        canvas_size=layout.canvas_size,
        layout=layout,
        components=tuple(sorted(comps, key=lambda c: c.z_order)),
        style=style,
    )


@dataclass(frozen=True)
class SceneResources:
    """Where render finds pixel data: generated paths resolve against
    base_dir, catalog references against the catalog."""

    base_dir: Path
    catalog: ComponentCatalog

    def fetch(self, component: SceneComponent) -> GrayImage:
        src = component.source
        if src["kind"] == "generated":
            return load_png(Path(self.base_dir) / src["path"])
        return self.catalog.get(src["category"], src["index"])


def _paste_min(canvas: np.ndarray, layer: GrayImage, center: tuple[float, float]) -> None:
    h, w = layer.pixels.shape
    x0 = int(round(center[0] - w / 2.0))
    y0 = int(round(center[1] - h / 2.0))
    cy0, cy1 = max(0, y0), min(canvas.shape[0], y0 + h)
    cx0, cx1 = max(0, x0), min(canvas.shape[1], x0 + w)
    if cy0 >= cy1 or cx0 >= cx1:
        return
    sub = layer.pixels[cy0 - y0:cy1 - y0, cx0 - x0:cx1 - x0]
    canvas[cy0:cy1, cx0:cx1] = np.minimum(canvas[cy0:cy1, cx0:cx1], sub)


def render(scene: CompositionScene, resources: SceneResources,
           grayscale_passthrough: bool = False, stroke: int = 3) -> GrayImage:
    """Deterministic compositing in z order onto a white canvas.

    Layers are binarized (black wins via min) unless grayscale passthrough is
    configured; the face-shape curve renders from the layout at its fixed z.
    """
    w, h = scene.canvas_size
    canvas = blank(h, w).pixels.copy()
    layers = sorted(scene.components, key=lambda c: c.z_order)
    face_done = False
    for comp in layers:
        if not face_done and comp.z_order > Z_FACE_SHAPE:
            canvas = np.minimum(canvas, draw_face_shape(scene.layout, stroke=stroke).pixels)
            face_done = True
        img = resources.fetch(comp)
        if not img.is_binary() and not grayscale_passthrough:
            img = threshold(img)
        tw = max(1, int(round(img.width * comp.scale)))
        th = max(1, int(round(img.height * comp.scale)))
        img = resize(img, (tw, th), binary=img.is_binary())
        _paste_min(canvas, img, comp.center)
    if not face_done:
        canvas = np.minimum(canvas, draw_face_shape(scene.layout, stroke=stroke).pixels)
    return GrayImage(canvas)

