"""Dataset ingestion: validation, landmark symmetrization, mean geometry.

Expected tree:

    root/
      photos/{eye,nose,mouth,face}/*.png     grayscale, dataset resolution
      manga/{eye,nose,mouth,face}/*.png      grayscale, dataset resolution
      manga/landmarks/*.txt                  106 lines of "x y" integers
      catalog/{ears,bodies}/ + manifest.json

Ingestion validates every sample (naming the file and the violation),
symmetrizes and caches the manga landmarks, caches detected photo landmarks
and encoded mouth guides, computes both domain means, and writes a manifest
with content hashes. All cache writes are canonical and skipped when the
content is unchanged, so re-ingesting an identical tree changes nothing.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import io

from PIL import Image

from ..atn import encode_mouth
from ..errors import EmptyDataset, MalformedSample, MangaFaceError
from ..facegeom.detect import detect_landmarks
from ..facegeom.encode import FaceShape, LocVector, MeanGeo, SizeVector, mean_geo
from ..facegeom.landmarks import LandmarkSet, Schema, symmetrize
from ..imaging import GrayImage, load_png
from .config import TrainConfig

REGION_DIRS = ("eye", "nose", "mouth", "face")
CACHE_DIR = ".cache"


@dataclass(frozen=True)
class DatasetManifest:
    photos: dict[str, int] = field(default_factory=dict)
    manga: dict[str, int] = field(default_factory=dict)
    landmark_count: int = 0
    hashes: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"photos": dict(self.photos), "manga": dict(self.manga),
                "landmark_count": self.landmark_count, "hashes": dict(self.hashes)}

    @staticmethod
    def from_dict(d: dict) -> "DatasetManifest":
        return DatasetManifest(photos=dict(d["photos"]), manga=dict(d["manga"]),
                               landmark_count=int(d["landmark_count"]),
                               hashes=dict(d["hashes"]))


def _load_validated(path: Path, resolution: int) -> GrayImage:
    try:
        img = load_png(path)
    except Exception as e:
        raise MalformedSample(f"{path}: {e}") from None
    if img.shape != (resolution, resolution):
        raise MalformedSample(
            f"{path}: expected {resolution}x{resolution}, got {img.width}x{img.height}"
        )
    return img


def _dir_hash(files: dict[str, bytes]) -> str:
    h = hashlib.sha256()
    for name in sorted(files):
        h.update(name.encode())
        h.update(hashlib.sha256(files[name]).digest())
    return h.hexdigest()


def _write_if_changed(path: Path, content: str) -> None:
    if path.exists() and path.read_text() == content:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content)


def _write_png_if_changed(path: Path, img: GrayImage) -> None:
    buf = io.BytesIO()
    arr = np.clip(np.rint(img.pixels), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(buf, format="PNG")
    data = buf.getvalue()
    if path.exists() and path.read_bytes() == data:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def parse_landmark_file(path: Path, resolution: int) -> LandmarkSet:
    """106 lines of "x y" integers, one manga face per file."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if len(lines) != Schema.MANGA106.point_count:
        raise MalformedSample(
            f"{path}: expected {Schema.MANGA106.point_count} landmark lines, got {len(lines)}"
        )
    pts = []
    for i, ln in enumerate(lines):
        toks = ln.split()
        if len(toks) != 2:
            raise MalformedSample(f"{path}: line {i + 1} is not 'x y'")
        try:
            pts.append((int(toks[0]), int(toks[1])))
        except ValueError:
            raise MalformedSample(f"{path}: line {i + 1} has non-integer coordinates") from None
    try:
        return LandmarkSet(points=np.asarray(pts, dtype=np.float64),
                           schema=Schema.MANGA106, image_size=(resolution, resolution))
    except MangaFaceError as e:
        raise MalformedSample(f"{path}: {e}") from None


def _landmarks_text(l: LandmarkSet) -> str:
    return "\n".join(f"{x:.6f} {y:.6f}" for x, y in l.points) + "\n"


def meangeo_to_dict(m: MeanGeo) -> dict:
    return {
        "loc": [float(v) for v in m.loc.flat],
        "siz": [float(v) for v in m.siz.values],
        "shape": [float(v) for v in m.shape.flat],
        "sample_count": m.sample_count,
        "forehead_ratio": m.forehead_ratio,
    }


def meangeo_from_dict(d: dict) -> MeanGeo:
    return MeanGeo(
        loc=LocVector(np.asarray(d["loc"], dtype=np.float64).reshape(4, 3)),
        siz=SizeVector(np.asarray(d["siz"], dtype=np.float64)),
        shape=FaceShape(np.asarray(d["shape"], dtype=np.float64).reshape(17, 2)),
        sample_count=int(d["sample_count"]),
        forehead_ratio=d.get("forehead_ratio"),
    )


def ingest_dataset(root, cfg: TrainConfig | None = None) -> DatasetManifest:
    root = Path(root)
    cfg = cfg or TrainConfig()
    res = cfg.dataset_resolution
    if not root.exists():
        raise EmptyDataset(f"dataset root {root} does not exist")
    cache = root / CACHE_DIR

    photos: dict[str, int] = {}
    manga: dict[str, int] = {}
    hashes: dict[str, str] = {}
    total = 0
    for domain, counts in (("photos", photos), ("manga", manga)):
        for region in REGION_DIRS:
            d = root / domain / region
            files = sorted(d.glob("*.png")) if d.exists() else []
            for f in files:
                _load_validated(f, res)
            counts[region] = len(files)
            total += len(files)
            if files:
                hashes[f"{domain}/{region}"] = _dir_hash({f.name: f.read_bytes() for f in files})

    lm_dir = root / "manga" / "landmarks"
    lm_files = sorted(lm_dir.glob("*.txt")) if lm_dir.exists() else []
    manga_sets = []
    for f in lm_files:
        sym = symmetrize(parse_landmark_file(f, res))
        manga_sets.append(sym)
        _write_if_changed(cache / "manga_landmarks_sym" / f.name, _landmarks_text(sym))
    total += len(lm_files)
    if lm_files:
        hashes["manga/landmarks"] = _dir_hash({f.name: f.read_bytes() for f in lm_files})

    if total == 0:
        raise EmptyDataset(f"{root}: no samples found")

    if manga_sets:
        mg = mean_geo(manga_sets)
        _write_if_changed(cache / "meangeo_manga.json",
                          json.dumps(meangeo_to_dict(mg), sort_keys=True, indent=2) + "\n")

    face_dir = root / "photos" / "face"
    face_files = sorted(face_dir.glob("*.png")) if face_dir.exists() else []
    photo_sets = []
    for f in face_files:
        img = _load_validated(f, res)
        try:
            l = detect_landmarks(img)
        except MangaFaceError as e:
            raise MalformedSample(f"{f}: {e}") from None
        photo_sets.append(l)
        _write_if_changed(cache / "photo_landmarks" / (f.stem + ".txt"), _landmarks_text(l))
        guide = encode_mouth(l, out_size=cfg.region_resolution)
        _write_png_if_changed(cache / "encoded_mouth" / f.name, guide)
    if photo_sets:
        _write_if_changed(cache / "meangeo_photo.json",
                          json.dumps(meangeo_to_dict(mean_geo(photo_sets)), sort_keys=True,
                                     indent=2) + "\n")

    manifest = DatasetManifest(photos=photos, manga=manga,
                               landmark_count=len(lm_files), hashes=hashes)
    _write_if_changed(cache / "manifest.json",
                      json.dumps(manifest.to_dict(), sort_keys=True, indent=2) + "\n")
    return manifest


def load_meangeo(root, domain: str) -> MeanGeo:
    path = Path(root) / CACHE_DIR / f"meangeo_{domain}.json"
    if not path.exists():
        raise EmptyDataset(f"{path} not found; run ingest first")
    return meangeo_from_dict(json.loads(path.read_text()))


def load_cached_landmarks(root, domain: str) -> list[LandmarkSet]:
    sub = "manga_landmarks_sym" if domain == "manga" else "photo_landmarks"
    schema = Schema.MANGA106 if domain == "manga" else Schema.PHOTO68
    cdir = Path(root) / CACHE_DIR / sub
    out = []
    # frame size is not stored in the cache; landmark encodings are scale
    # invariant, so any frame covering the points works
    for f in sorted(cdir.glob("*.txt")) if cdir.exists() else []:
        pts = np.asarray([[float(t) for t in ln.split()]
                          for ln in f.read_text().splitlines() if ln.strip()])
        frame = int(np.ceil(pts.max())) + 1
        out.append(LandmarkSet(points=pts, schema=schema, image_size=(frame, frame)))
    return out
