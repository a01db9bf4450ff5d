"""Geometric transformation: three fully-connected sub-GAN pairs translating
location, size, and face-shape encodings, plus whole-face assembly.

Each attribute is translated by its own generator so that collocation modes
stay independent: perturbing the size input can never move a location
output. Raw generator outputs are repaired into valid geometry at inference
time: widths clamped, location spans renormalized, the cheek contour made
x-monotone, and feature boxes projected toward the face centroid until they
sit inside the face profile (cheek polygon plus forehead extent).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .errors import InvalidGeo, ModelNotTrained
from .facegeom.encode import FaceShape, GeoAttributes, LocVector, MeanGeo, SizeVector
from .facegeom.landmarks import LOC_REGIONS, RegionKind

ATTRIBUTES = ("loc", "siz", "sha")
ATTR_DIMS = {"loc": 12, "siz": 4, "sha": 34}

# feature boxes are width x (width * aspect); fixed per region because the
# generated manga components have fixed length-width ratios
REGION_BOX_ASPECT = {
    RegionKind.EYE_LEFT: 0.5,
    RegionKind.EYE_RIGHT: 0.5,
    RegionKind.NOSE: 1.0,
    RegionKind.MOUTH: 0.5,
}

DEFAULT_FOREHEAD_RATIO = 0.5


class FCGenerator(nn.Module):
    """Three hidden fully-connected layers, width 64; no convolutions."""

    def __init__(self, io_dim: int, hidden: int = 64):
        super().__init__()
        self.io_dim = io_dim
        self.net = nn.Sequential(
            nn.Linear(io_dim, hidden), nn.LeakyReLU(0.2, inplace=True),
            nn.Linear(hidden, hidden), nn.LeakyReLU(0.2, inplace=True),
            nn.Linear(hidden, hidden), nn.LeakyReLU(0.2, inplace=True),
            nn.Linear(hidden, io_dim),
        )

    def forward(self, x):
        return self.net(x)


class FCDiscriminator(nn.Module):
    """Three-layer fully-connected scorer (unbounded output for LSGAN)."""

    def __init__(self, io_dim: int, hidden: int = 64):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(io_dim, hidden), nn.LeakyReLU(0.2, inplace=True),
            nn.Linear(hidden, hidden), nn.LeakyReLU(0.2, inplace=True),
            nn.Linear(hidden, 1),
        )

    def forward(self, x):
        return self.net(x)


@dataclass
class SubGan:
    attribute: str
    g_lm: FCGenerator  # photo -> manga
    g_lp: FCGenerator  # manga -> photo
    d_lm: FCDiscriminator
    d_lp: FCDiscriminator
    io_dim: int
    trained: bool = False


def build_sub_gan(attr: str, hidden: int = 64, seed: int = 0) -> SubGan:
    if attr not in ATTR_DIMS:
        raise InvalidGeo(f"unknown geometry attribute {attr!r}")
    dim = ATTR_DIMS[attr]
    # a stable per-attribute offset; str hashes are randomized per process
    gen = torch.Generator().manual_seed(seed + 100 * ATTRIBUTES.index(attr))
    def make(cls):
        net = cls(dim, hidden)
        with torch.no_grad():
            for p in net.parameters():
                if p.ndim > 1:
                    p.normal_(0.0, 0.08, generator=gen)
                else:
                    p.zero_()
        return net
    return SubGan(attr, make(FCGenerator), make(FCGenerator),
                  make(FCDiscriminator), make(FCDiscriminator), dim)


def load_identity_weights(sub: SubGan, shift: float = 10.0) -> SubGan:
    """Set both generators to the exact identity on inputs > -shift.

    The first layer embeds the input shifted into the positive range where
    LeakyReLU is linear; the last layer undoes the shift. Used by tests and
    demos that need a known geometric map.
    """
    for g in (sub.g_lm, sub.g_lp):
        layers = [m for m in g.net if isinstance(m, nn.Linear)]
        with torch.no_grad():
            for m in layers:
                m.weight.zero_()
                m.bias.zero_()
            d = sub.io_dim
            layers[0].weight[:d, :] = torch.eye(d)
            layers[0].bias[:d] = shift
            for m in layers[1:-1]:
                m.weight[:d, :d] = torch.eye(d)
            layers[-1].weight[:, :d] = torch.eye(d)
            layers[-1].bias[:] = -shift
    sub.trained = True
    return sub


# --- attribute vector packing ------------------------------------------------

def geo_to_vectors(g: GeoAttributes) -> dict[str, np.ndarray]:
    return {"loc": g.loc.flat.copy(), "siz": g.siz.values.copy(), "sha": g.shape.flat.copy()}


@dataclass(frozen=True)
class MangaGeo:
    """Geometry in the manga domain plus the cheek/forehead proportion.

    Valid by construction: every feature box implied by (loc, siz) lies
    inside the face profile (the cheek polygon closed across a top edge
    raised by the forehead extent).
    """

    geo: GeoAttributes
    forehead_ratio: float

    def __post_init__(self):
        if not (0.0 < self.forehead_ratio < 2.0):
            raise InvalidGeo(f"forehead ratio {self.forehead_ratio} out of (0, 2)")
        bad = validate_boxes(self.geo, self.forehead_ratio)
        if bad:
            raise InvalidGeo(f"feature boxes protrude from the face profile: {bad}")


def _face_profile_polygon(shape: FaceShape, forehead_ratio: float) -> np.ndarray:
    """Closed polygon of the face profile in shape coordinates: the cheek
    contour plus a top edge raised by the forehead extent."""
    pts = shape.points
    top = pts[:, 1].min() - forehead_ratio * shape.aspect
    left_corner = [pts[0, 0], top]
    right_corner = [pts[-1, 0], top]
    return np.vstack([pts, right_corner, left_corner])


def _points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd ray casting; points exactly on an edge count as inside."""
    x, y = points[:, 0], points[:, 1]
    n = len(poly)
    inside = np.zeros(len(points), dtype=bool)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        crosses = ((y0 > y) != (y1 > y))
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < np.where(crosses, xint, np.inf))
    # tolerance for boundary points
    d = _distance_to_edges(points, poly)
    return inside | (d < 1e-9)


def _interior_anchor(shape: FaceShape, forehead_ratio: float) -> np.ndarray:
    """A point strictly inside the face profile: the midpoint of the deepest
    vertical section of the polygon (chin column)."""
    pts = shape.points
    top = pts[:, 1].min() - forehead_ratio * shape.aspect
    k = int(np.argmax(pts[:, 1]))
    x = float(np.clip(pts[k, 0], 0.05, 0.95))
    jaw_y = float(np.interp(x, pts[:, 0], pts[:, 1]))
    return np.array([x, (top + jaw_y) / 2.0])


def _distance_to_edges(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    best = np.full(len(points), np.inf)
    for i in range(len(poly)):
        a, b = poly[i], poly[(i + 1) % len(poly)]
        ab = b - a
        t = np.clip(((points - a) @ ab) / max(float(ab @ ab), 1e-18), 0.0, 1.0)
        proj = a + t[:, None] * ab
        best = np.minimum(best, np.linalg.norm(points - proj, axis=1))
    return best


def _box_corners(center: np.ndarray, width: float, aspect: float) -> np.ndarray:
    hw, hh = width / 2.0, width * aspect / 2.0
    return center + np.array([[-hw, -hh], [hw, -hh], [hw, hh], [-hw, hh]])


def _region_boxes(geo: GeoAttributes) -> dict[RegionKind, tuple[np.ndarray, float]]:
    """(center, width) per region in shape coordinates (cheek box at origin,
    unit width)."""
    bottom = geo.shape.points[:, 1].max()
    out = {}
    for i, region in enumerate(LOC_REGIONS):
        d_cl, _, d_cb = geo.loc.values[i]
        center = np.array([d_cl, bottom - d_cb])
        out[region] = (center, float(geo.siz.values[i]))
    return out


def validate_boxes(geo: GeoAttributes, forehead_ratio: float) -> list[str]:
    """Names of regions whose feature box leaves the face profile."""
    poly = _face_profile_polygon(geo.shape, forehead_ratio)
    bad = []
    for region, (center, width) in _region_boxes(geo).items():
        corners = _box_corners(center, width, REGION_BOX_ASPECT[region])
        if not _points_in_polygon(corners, poly).all():
            bad.append(region.value)
    return bad


# --- repair -------------------------------------------------------------------

def repair_geometry(loc_raw: np.ndarray, siz_raw: np.ndarray, sha_raw: np.ndarray,
                    forehead_ratio: float) -> MangaGeo:
    """Total repair of raw generator outputs into a valid MangaGeo."""
    # shape: monotone x with a minimum gap, then renormalize to the cheek box
    pts = np.asarray(sha_raw, dtype=np.float64).reshape(17, 2).copy()
    pts = pts[np.argsort(pts[:, 0], kind="stable")]
    gap = 1e-3
    for i in range(1, 17):
        if pts[i, 0] <= pts[i - 1, 0] + gap:
            pts[i, 0] = pts[i - 1, 0] + gap
    pts[:, 0] -= pts[:, 0].min()
    w = pts[:, 0].max()
    pts /= w if w > 1e-12 else 1.0
    pts[:, 1] -= pts[:, 1].min()
    yr = pts[:, 1].max()
    if yr < 0.15:
        # flat contour: restore a minimal arc so the polygon has interior
        bump = 0.15 * np.sin(np.pi * pts[:, 0])
        pts[:, 1] = np.maximum(pts[:, 1], bump) if yr > 1e-9 else bump
        pts[:, 1] -= pts[:, 1].min()
    shape = FaceShape(pts)
    aspect = shape.aspect

    # widths strictly inside (0, 1)
    siz = np.clip(np.asarray(siz_raw, dtype=np.float64).reshape(4), 0.02, 0.95)

    # locations: renormalize the left/right split, clamp the bottom distance
    loc = np.asarray(loc_raw, dtype=np.float64).reshape(4, 3).copy()
    loc[:, :2] = np.clip(loc[:, :2], 1e-3, None)
    loc[:, :2] /= loc[:, :2].sum(axis=1, keepdims=True)
    loc[:, 2] = np.clip(loc[:, 2], 5e-3, (1.0 + forehead_ratio) * aspect - 5e-3)

    # containment: project each box center toward a guaranteed-interior
    # anchor, shrinking the box when projection alone cannot fit it
    poly = _face_profile_polygon(shape, forehead_ratio)
    anchor = _interior_anchor(shape, forehead_ratio)
    bottom = shape.points[:, 1].max()
    for i, region in enumerate(LOC_REGIONS):
        width = siz[i]
        center = np.array([loc[i, 0], bottom - loc[i, 2]])
        box_aspect = REGION_BOX_ASPECT[region]

        def fits(c, wdt):
            return _points_in_polygon(_box_corners(c, wdt, box_aspect), poly).all()

        if not fits(center, width):
            while not fits(anchor, width) and width > 1e-6:
                width /= 2.0
            if not fits(anchor, width):
                raise InvalidGeo("face profile has no interior; cannot place features")
            lo, hi = 0.0, 1.0  # smallest projection toward the anchor that fits
            for _ in range(50):
                mid = (lo + hi) / 2.0
                if fits(center + mid * (anchor - center), width):
                    hi = mid
                else:
                    lo = mid
            # step slightly past the feasibility boundary so the repaired box
            # stays strictly interior under float round-off
            center = center + min(1.0, hi + 1e-3) * (anchor - center)
        siz[i] = width
        loc[i, 0] = center[0]
        loc[i, 1] = 1.0 - center[0]
        loc[i, 2] = bottom - center[1]

    geo = GeoAttributes(LocVector(loc), SizeVector(siz), shape)
    return MangaGeo(geo, forehead_ratio)


def translate_geometry(g: GeoAttributes, gans: dict[str, SubGan],
                       photo_mean: MeanGeo, manga_mean: MeanGeo) -> MangaGeo:
    """Translate photo geometry to the manga domain through the three forward
    generators, then repair into a valid whole-face geometry."""
    for attr in ATTRIBUTES:
        if attr not in gans:
            raise InvalidGeo(f"missing sub-GAN for attribute {attr!r}")
        if not gans[attr].trained:
            raise ModelNotTrained(f"{attr} sub-GAN has not been trained")
    vecs = geo_to_vectors(g)
    out = {}
    for attr in ATTRIBUTES:
        net = gans[attr].g_lm
        net.eval()
        with torch.no_grad():
            out[attr] = net(torch.from_numpy(vecs[attr].astype(np.float32)).unsqueeze(0)) \
                .squeeze(0).double().numpy()
    ratio = manga_mean.forehead_ratio if manga_mean.forehead_ratio is not None \
        else DEFAULT_FOREHEAD_RATIO
    return repair_geometry(out["loc"], out["siz"], out["sha"], ratio)


# --- whole-face assembly -------------------------------------------------------

@dataclass(frozen=True)
class FaceLayout:
    """Absolute-coordinate layout of the manga face on the output canvas."""

    canvas_size: tuple[int, int]
    cheek_points: np.ndarray            # (17, 2) px
    cheek_box: tuple[float, float, float, float]  # left, top, width, height
    forehead_top: float                 # px, top of the forehead arc
    forehead_ratio: float
    region_centers: dict[RegionKind, tuple[float, float]]
    region_widths: dict[RegionKind, float]


def assemble_face_geometry(mg: MangaGeo, canvas_size: int = 512,
                           cheek_width_frac: float = 0.52) -> FaceLayout:
    """Place the cheek polygon on the canvas and decode feature boxes into
    absolute centers and widths."""
    if canvas_size < 16 or not (0.1 <= cheek_width_frac <= 0.9):
        raise InvalidGeo(f"bad canvas {canvas_size} or cheek fraction {cheek_width_frac}")
    aspect = mg.geo.shape.aspect
    # tall translated shapes shrink to keep forehead plus cheek on the canvas
    fit_frac = 0.88 / ((1.0 + mg.forehead_ratio) * aspect)
    W = canvas_size * min(cheek_width_frac, fit_frac)
    H = W * aspect
    forehead = mg.forehead_ratio * H
    total = forehead + H
    left = (canvas_size - W) / 2.0
    top = (canvas_size - total) / 2.0 + forehead
    if top < 0:
        raise InvalidGeo("assembled face exceeds the canvas; reduce cheek_width_frac")

    cheek_pts = mg.geo.shape.points * W + (left, top)
    bottom = top + H
    centers = {}
    widths = {}
    for i, region in enumerate(LOC_REGIONS):
        d_cl, _, d_cb = mg.geo.loc.values[i]
        centers[region] = (left + d_cl * W, bottom - d_cb * W)
        widths[region] = float(mg.geo.siz.values[i] * W)
    return FaceLayout(
        canvas_size=(canvas_size, canvas_size),
        cheek_points=cheek_pts,
        cheek_box=(left, top, W, H),
        forehead_top=top - forehead,
        forehead_ratio=mg.forehead_ratio,
        region_centers=centers,
        region_widths=widths,
    )


def encode_layout(layout: FaceLayout) -> tuple[LocVector, SizeVector, FaceShape]:
    """Re-encode an assembled layout; inverse of assemble_face_geometry."""
    left, top, W, H = layout.cheek_box
    bottom = top + H
    rows = []
    sizes = []
    for region in LOC_REGIONS:
        cx, cy = layout.region_centers[region]
        rows.append(((cx - left) / W, (left + W - cx) / W, (bottom - cy) / W))
        sizes.append(layout.region_widths[region] / W)
    shape = FaceShape((layout.cheek_points - (left, top)) / W)
    return LocVector(np.asarray(rows)), SizeVector(np.asarray(sizes)), shape
