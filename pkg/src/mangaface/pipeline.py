"""End-to-end photo-to-manga translation.

detect -> crop/encode -> translate regions -> translate geometry -> assemble
-> place -> render. Every stage is timed; artifacts land in a fixed layout:

    out/
      crops/*.png       intermediate region crops
      regions/*.png     translated / generated components
      geometry.json     the translated manga geometry record
      scene.json        the composition scene document (canonical)
      manga.png         the rendered face

The run is a pure function of (photo, checkpoints, config), so repeated runs
produce byte-identical scene documents.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .atn import encode_eye, encode_mouth, encode_nose, generate_nose, provide_hair, translate_region
from .errors import StageError
from .facegeom.detect import detect_landmarks
from .facegeom.encode import cheek_box, crop_region, encode_geometry
from .facegeom.landmarks import RegionKind
from .gtn import assemble_face_geometry, translate_geometry
from .imaging import GrayImage, load_png, save_png
from .synthesis.catalog import load_catalog
from .synthesis.compose import SceneResources, place_components, render
from .synthesis.scene import serialize_scene
from .trainer.config import TrainConfig
from .trainer.ingest import meangeo_to_dict
from .trainer.loops import load_eye_encoder, load_gtn, load_nose_branch, load_region_translator

REGION_MARGINS = {
    RegionKind.EYE_LEFT: 0.35,
    RegionKind.EYE_RIGHT: 0.35,
    RegionKind.NOSE: 0.3,
    RegionKind.MOUTH: 0.4,
}


@dataclass
class PipelineRun:
    photo_path: str
    checkpoint_dir: str
    out_dir: str
    scene_path: str
    rendered_path: str
    timings: dict[str, float] = field(default_factory=dict)


class _Stage:
    """Times a stage and tags any failure with its name."""

    def __init__(self, run: PipelineRun, name: str):
        self.run = run
        self.name = name

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.run.timings[self.name] = time.perf_counter() - self.t0
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"missing {what}: {path}")
    return path


def translate_photo(photo_path, checkpoint_dir, out_dir,
                    cfg: TrainConfig | None = None,
                    catalog_dir=None, detector=None) -> PipelineRun:
    cfg = cfg or TrainConfig()
    photo_path = Path(photo_path)
    ckpt = Path(checkpoint_dir)
    out = Path(out_dir)
    (out / "crops").mkdir(parents=True, exist_ok=True)
    (out / "regions").mkdir(parents=True, exist_ok=True)
    run = PipelineRun(str(photo_path), str(ckpt), str(out),
                      str(out / "scene.json"), str(out / "manga.png"))

    with _Stage(run, "detect"):
        photo = load_png(_require(photo_path, "input photo"))
        landmarks = detect_landmarks(photo, detector)

    with _Stage(run, "crop"):
        crops: dict[RegionKind, GrayImage] = {}
        for region, margin in REGION_MARGINS.items():
            size = cfg.nose_resolution if region is RegionKind.NOSE else cfg.region_resolution
            crops[region] = crop_region(photo, landmarks, region, margin, size)
            save_png(crops[region], out / "crops" / f"{region.value.lower()}.png")

    with _Stage(run, "encode"):
        if cfg.eye_encoder_backend == "pretrained":
            encoder = load_eye_encoder(_require(ckpt / "eye_encoder.pt",
                                                "eye encoder checkpoint"))
        elif cfg.eye_encoder_backend == "none":
            encoder = None
        else:
            from .atn import EyeEncoder
            encoder = EyeEncoder("threshold")
        enc_left = encode_eye(crops[RegionKind.EYE_LEFT], encoder) if encoder else crops[RegionKind.EYE_LEFT]
        enc_right = encode_eye(crops[RegionKind.EYE_RIGHT], encoder) if encoder else crops[RegionKind.EYE_RIGHT]
        mouth_guide = encode_mouth(landmarks, out_size=cfg.region_resolution,
                                   margin=REGION_MARGINS[RegionKind.MOUTH])
        nose_branch = load_nose_branch(_require(ckpt / "nose.pt", "nose checkpoint"))
        seed = encode_nose(crops[RegionKind.NOSE], nose_branch)

    with _Stage(run, "translate"):
        eye_tr = load_region_translator(_require(ckpt / "eye.pt", "eye translator checkpoint"))
        mouth_tr = load_region_translator(_require(ckpt / "mouth.pt", "mouth translator checkpoint"))
        region_images = {
            RegionKind.EYE_LEFT: translate_region(eye_tr, enc_left),
            RegionKind.EYE_RIGHT: translate_region(eye_tr, enc_right),
            RegionKind.MOUTH: translate_region(mouth_tr, mouth_guide),
            RegionKind.NOSE: generate_nose(seed, nose_branch),
        }

    with _Stage(run, "geometry"):
        gans, photo_mean, manga_mean = load_gtn(_require(ckpt / "gtn.pt", "geometry checkpoint"))
        geo = encode_geometry(landmarks)
        manga_geo = translate_geometry(geo, gans, photo_mean, manga_mean)

    with _Stage(run, "assemble"):
        layout = assemble_face_geometry(manga_geo, canvas_size=cfg.canvas_size)

    with _Stage(run, "hair"):
        hair = provide_hair(photo, landmarks)
        region_images[RegionKind.HAIR] = hair

    with _Stage(run, "place"):
        generated = {}
        for region, img in region_images.items():
            rel = f"regions/{region.value.lower()}.png"
            save_png(img, out / rel)
            generated[region] = (rel, img)
        catalog = load_catalog(catalog_dir) if catalog_dir else load_catalog(
            _require(ckpt / "catalog", "component catalog"))
        scene = place_components(layout, generated, catalog,
                                 style={"gender": cfg.style_gender},
                                 hair_frame=cheek_box(landmarks))

    with _Stage(run, "render"):
        resources = SceneResources(base_dir=out, catalog=catalog)
        image = render(scene, resources)
        save_png(image, out / "manga.png")
        (out / "scene.json").write_text(serialize_scene(scene))
        record = {
            "loc": [float(v) for v in manga_geo.geo.loc.flat],
            "siz": [float(v) for v in manga_geo.geo.siz.values],
            "shape": [float(v) for v in manga_geo.geo.shape.flat],
            "forehead_ratio": manga_geo.forehead_ratio,
            "photo_mean": meangeo_to_dict(photo_mean),
            "manga_mean": meangeo_to_dict(manga_mean),
        }
        (out / "geometry.json").write_text(json.dumps(record, sort_keys=True, indent=2) + "\n")

    return run
