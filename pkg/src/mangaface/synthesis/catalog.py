"""Ear and body component catalogs.

A catalog directory holds binary PNG line art plus a manifest:
ears/*.png (10 images) and bodies/*.png (8 images tagged male or female).
The shipped placeholders are generated programmatically; drop real artwork
into the same layout to replace them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ParseError
from ..imaging import GrayImage, draw_polyline, load_png, save_png, threshold

EAR_COUNT = 10
BODY_COUNT = 8
BODY_TAGS = ("male",) * 5 + ("female",) * 3


@dataclass(frozen=True)
class ComponentCatalog:
    root: Path
    ears: tuple[GrayImage, ...]
    bodies: tuple[GrayImage, ...]
    body_tags: tuple[str, ...]

    def __post_init__(self):
        if len(self.ears) != EAR_COUNT:
            raise ParseError(f"catalog needs exactly {EAR_COUNT} ears, got {len(self.ears)}")
        if len(self.bodies) != BODY_COUNT or len(self.body_tags) != BODY_COUNT:
            raise ParseError(f"catalog needs exactly {BODY_COUNT} tagged bodies")
        for img in self.ears + self.bodies:
            if not img.is_binary():
                raise ParseError("catalog images must be binary")

    def get(self, category: str, index: int) -> GrayImage:
        items = {"ears": self.ears, "bodies": self.bodies}.get(category)
        if items is None:
            raise ParseError(f"unknown catalog category {category!r}")
        if not 0 <= index < len(items):
            raise ParseError(f"catalog {category} index {index} out of range")
        return items[index]

    def default_body(self, style: str) -> int:
        for i, tag in enumerate(self.body_tags):
            if tag == style:
                return i
        return 0

    def listing(self) -> dict:
        return {
            "ears": [{"index": i} for i in range(len(self.ears))],
            "bodies": [{"index": i, "tag": t} for i, t in enumerate(self.body_tags)],
        }


def load_catalog(root) -> ComponentCatalog:
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise ParseError(f"catalog manifest not found: {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    ears = tuple(load_png(root / "ears" / name) for name in manifest["ears"])
    bodies = tuple(load_png(root / "bodies" / e["file"]) for e in manifest["bodies"])
    tags = tuple(e["tag"] for e in manifest["bodies"])
    return ComponentCatalog(root=root, ears=ears, bodies=bodies, body_tags=tags)


def _ear_art(index: int, size: int = 96) -> GrayImage:
    """Simple C-shaped ear outline; the index varies the lobe curvature."""
    canvas = np.full((size, size), 255.0, dtype=np.float32)
    t = np.linspace(-0.5 * np.pi, 0.5 * np.pi, 48)
    bulge = 0.55 + 0.05 * (index % 5)
    squash = 0.9 - 0.06 * (index // 5)
    xs = size * (0.5 - bulge * 0.5 * np.cos(t))
    ys = size * (0.5 + squash * 0.45 * np.sin(t))
    draw_polyline(canvas, np.stack([xs, ys], axis=1), width=3)
    inner = np.stack([size * (0.5 - bulge * 0.22 * np.cos(t[8:-8])),
                      size * (0.52 + squash * 0.2 * np.sin(t[8:-8]))], axis=1)
    draw_polyline(canvas, inner, width=2)
    return threshold(GrayImage(canvas))


def _body_art(index: int, tag: str, width: int = 384, height: int = 256) -> GrayImage:
    """Shoulders-and-collar torso outline; male variants are broader."""
    canvas = np.full((height, width), 255.0, dtype=np.float32)
    broad = 0.92 if tag == "male" else 0.74
    broad -= 0.03 * (index % 5)
    neck_w = 0.16 if tag == "male" else 0.13
    cx = width / 2.0
    pts = np.array([
        [cx - width * broad / 2, height * 0.98],
        [cx - width * broad / 2, height * 0.45],
        [cx - width * broad * 0.33, height * 0.18],
        [cx - width * neck_w, height * 0.10],
        [cx - width * neck_w, 2.0],
    ])
    mirror = pts[::-1].copy()
    mirror[:, 0] = 2 * cx - mirror[:, 0]
    draw_polyline(canvas, np.vstack([pts, mirror]), width=4)
    # collar
    collar_y = height * (0.16 + 0.02 * (index % 3))
    draw_polyline(canvas, np.array([[cx - width * neck_w, 2.0], [cx, collar_y],
                                    [cx + width * neck_w, 2.0]]), width=3)
    if tag == "female":
        draw_polyline(canvas, np.array([[cx - width * 0.1, collar_y + 10],
                                        [cx, collar_y + 26], [cx + width * 0.1, collar_y + 10]]),
                      width=2)
    return threshold(GrayImage(canvas))


def write_default_catalog(root) -> ComponentCatalog:
    """Generate the placeholder catalog (10 ears, 5 male + 3 female bodies)."""
    root = Path(root)
    (root / "ears").mkdir(parents=True, exist_ok=True)
    (root / "bodies").mkdir(parents=True, exist_ok=True)
    ear_files = []
    for i in range(EAR_COUNT):
        name = f"ear{i:02d}.png"
        save_png(_ear_art(i), root / "ears" / name)
        ear_files.append(name)
    body_entries = []
    for i, tag in enumerate(BODY_TAGS):
        name = f"body{i:02d}.png"
        save_png(_body_art(i, tag), root / "bodies" / name)
        body_entries.append({"file": name, "tag": tag})
    manifest = {"ears": ear_files, "bodies": body_entries}
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return load_catalog(root)
