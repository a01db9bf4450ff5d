"""Tree-level training entry points used by the command line."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..atn import EyeEncoder, encode_eye
from ..errors import BackendUnavailable, EmptyDataset
from ..facegeom.encode import encode_geometry
from ..facegeom.landmarks import RegionKind
from ..imaging import load_png, resize
from .config import TrainConfig
from .ingest import load_cached_landmarks, load_meangeo
from .loops import (
    load_eye_encoder,
    train_eye_encoder,
    train_gtn,
    train_nose_branch,
    train_region_translator,
)

REGION_NAMES = {"eye": RegionKind.EYE_LEFT, "mouth": RegionKind.MOUTH, "nose": RegionKind.NOSE}


def load_image_stack(directory, resolution: int) -> np.ndarray:
    directory = Path(directory)
    files = sorted(directory.glob("*.png")) if directory.exists() else []
    if not files:
        return np.zeros((0, resolution, resolution), dtype=np.float32)
    return np.stack([resize(load_png(f), resolution).pixels for f in files])


def _paired_eye_corpus(cfg: TrainConfig, n: int = 48) -> tuple[np.ndarray, np.ndarray]:
    """Synthetic paired (photo eye, portrait eye) corpus for encoder
    pretraining; the reference portraits a real deployment would source from
    a line-drawing network are stood in for by line-art renders."""
    from ..facegeom.encode import crop_region
    from ..synthfaces import photo_landmarks, render_lineart, render_photo, sample_params

    rng = np.random.default_rng(cfg.seed + 1234)
    photos, targets = [], []
    res = cfg.region_resolution
    for _ in range(n):
        l = photo_landmarks(sample_params(rng), size=256)
        region = RegionKind.EYE_LEFT if rng.uniform() < 0.5 else RegionKind.EYE_RIGHT
        photos.append(crop_region(render_photo(l), l, region, 0.35, res).pixels)
        targets.append(crop_region(render_lineart(l), l, region, 0.35, res).pixels)
    return np.stack(photos), np.stack(targets)


def resolve_eye_encoder(cfg: TrainConfig, out_dir) -> EyeEncoder | None:
    """Encoder instance for the configured backend; pretraining it first when
    asked and no checkpoint exists yet."""
    if cfg.eye_encoder_backend == "none":
        return None
    if cfg.eye_encoder_backend == "threshold":
        return EyeEncoder("threshold")
    ckpt = Path(out_dir) / "eye_encoder.pt"
    if ckpt.exists():
        return load_eye_encoder(ckpt)
    if cfg.pretrain_eye_encoder:
        photos, targets = _paired_eye_corpus(cfg)
        encoder, _ = train_eye_encoder(photos, targets, cfg, out_dir)
        return encoder
    raise BackendUnavailable(
        f"pretrained eye encoder requested but {ckpt} does not exist "
        "(set pretrain_eye_encoder to build one)"
    )


def train_atn_from_tree(root, region_name: str, cfg: TrainConfig, out_dir):
    """Train one appearance region from an ingested dataset tree."""
    root = Path(root)
    if region_name not in REGION_NAMES:
        raise EmptyDataset(f"unknown region {region_name!r}; expected eye, mouth, or nose")
    res = cfg.region_resolution

    if region_name == "nose":
        photo = load_image_stack(root / "photos" / "nose", cfg.nose_resolution)
        manga = load_image_stack(root / "manga" / "nose", cfg.nose_resolution)
        if len(photo) == 0 or len(manga) == 0:
            raise EmptyDataset(f"{root}: no nose crops to train on")
        return train_nose_branch(photo, manga, cfg, out_dir)

    manga = load_image_stack(root / "manga" / region_name, res)
    if region_name == "mouth":
        photo = load_image_stack(root / ".cache" / "encoded_mouth", res)
        if len(photo) == 0:
            photo = load_image_stack(root / "photos" / "mouth", res)
    else:
        photo = load_image_stack(root / "photos" / "eye", res)
        encoder = resolve_eye_encoder(cfg, out_dir)
        if encoder is not None:
            photo = np.stack([encode_eye(_as_gray(img), encoder).pixels for img in photo])
    if len(photo) == 0 or len(manga) == 0:
        raise EmptyDataset(f"{root}: no {region_name} crops to train on")
    return train_region_translator(photo, manga, cfg, out_dir,
                                   region=REGION_NAMES[region_name],
                                   ckpt_name=region_name)


def _as_gray(arr: np.ndarray):
    from ..imaging import GrayImage
    return GrayImage(arr)


def train_gtn_from_tree(root, cfg: TrainConfig, out_dir):
    """Train the geometry branch from ingested landmark caches."""
    root = Path(root)
    photo_sets = load_cached_landmarks(root, "photo")
    manga_sets = load_cached_landmarks(root, "manga")
    if not photo_sets or not manga_sets:
        raise EmptyDataset(f"{root}: ingest must cache photo and manga landmarks first")
    photo_geos = [encode_geometry(l) for l in photo_sets]
    manga_geos = [encode_geometry(l) for l in manga_sets]
    return train_gtn(photo_geos, manga_geos, cfg, out_dir,
                     photo_mean=load_meangeo(root, "photo"),
                     manga_mean=load_meangeo(root, "manga"))
