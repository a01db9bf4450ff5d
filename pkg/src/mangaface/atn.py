"""Appearance transformation: per-region translator pairs plus the input
encoders that make the unpaired mapping tractable.

Eyes and mouths run through cycle-coupled Resnet-6 generators with patch
discriminators and a frozen multi-resolution extractor for the
similarity-preserving loss. The nose branch generates instead of
translating: a variational encoder turns the photo nose into a 512-d seed
and a latent-seeded generator draws the manga nose. Hair is a pluggable
provider with a thresholding stub.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from scipy.ndimage import uniform_filter

from .errors import (
    BackendUnavailable,
    DegenerateFace,
    InvalidSchema,
    ModelNotTrained,
    ResolutionMismatch,
)
from .facegeom.encode import crop_window
from .facegeom.landmarks import LandmarkSet, RegionKind, mouth_rings
from .imaging import BLACK, WHITE, GrayImage, draw_polyline, from_unit, threshold, to_unit
from .networks import (
    NOSE_LATENT_DIM,
    EyeEncoderNet,
    NoseEncoder,
    NoseGenerator,
    PatchDiscriminator,
    PhiExtractor,
    ResnetGenerator,
    init_weights,
)
from .synthesis.pchip import closed_curve_points

# a patch discriminator plan needs at least its receptive field; translators
# below that resolution score through the same fully-convolutional stack
MIN_DISCRIMINATOR_RES = 70


def to_batch(img: GrayImage) -> torch.Tensor:
    """GrayImage -> (1, 1, H, W) tensor on the [-1, 1] network scale."""
    return to_unit(torch.from_numpy(img.pixels.astype(np.float32))).unsqueeze(0).unsqueeze(0)


def from_batch(t: torch.Tensor) -> GrayImage:
    """(1, 1, H, W) network-scale tensor -> GrayImage on [0, 255]."""
    arr = from_unit(t).squeeze(0).squeeze(0).detach().cpu().numpy()
    return GrayImage(np.clip(arr, 0.0, 255.0))


@dataclass
class RegionTranslator:
    """Forward/backward generator pair with discriminators and the shared
    similarity extractor for one facial region."""

    region: RegionKind
    resolution: int
    g_m: ResnetGenerator
    g_p: ResnetGenerator
    d_m: PatchDiscriminator
    d_p: PatchDiscriminator
    phi: PhiExtractor
    encoder: "EyeEncoder | MouthEncoder | None" = None
    trained: bool = False

    def __post_init__(self):
        if self.g_m.spec.input_resolution != self.g_p.spec.input_resolution:
            raise ResolutionMismatch("forward and backward generators must match")


def build_region_translator(region: RegionKind, res: int, seed: int = 0,
                            encoder=None) -> RegionTranslator:
    d_res = max(res, MIN_DISCRIMINATOR_RES)
    return RegionTranslator(
        region=region,
        resolution=res,
        g_m=init_weights(ResnetGenerator(res), seed),
        g_p=init_weights(ResnetGenerator(res), seed + 1),
        d_m=init_weights(PatchDiscriminator(d_res), seed + 2),
        d_p=init_weights(PatchDiscriminator(d_res), seed + 3),
        phi=PhiExtractor(res),
        encoder=encoder,
    )


def translate_region(t: RegionTranslator, image: GrayImage) -> GrayImage:
    """Forward-translate a (pre-encoded) region crop into the manga domain."""
    if image.shape != (t.resolution, t.resolution):
        raise ResolutionMismatch(
            f"{t.region.value} translator expects {t.resolution}, got {image.shape}"
        )
    t.g_m.eval()
    with torch.no_grad():
        out = t.g_m(to_batch(image))
    return from_batch(out)


# --- eye encoder ------------------------------------------------------------

class EyeEncoder:
    """Reduces a photo eye crop to a binary stroke backbone.

    backend "pretrained" runs the trained conditional translator; backend
    "threshold" is the always-available adaptive binarization fallback.
    """

    def __init__(self, backend: str = "threshold", net: EyeEncoderNet | None = None,
                 window_frac: float = 0.25, offset: float = 12.0):
        if backend not in ("threshold", "pretrained"):
            raise BackendUnavailable(f"unknown eye encoder backend {backend!r}")
        self.backend = backend
        self.net = net
        self.window_frac = window_frac
        self.offset = offset

    def __call__(self, crop: GrayImage) -> GrayImage:
        if self.backend == "pretrained":
            if self.net is None:
                raise BackendUnavailable("pretrained eye encoder requested but no model is loaded")
            self.net.eval()
            with torch.no_grad():
                out = self.net(to_batch(crop))
            return threshold(from_batch(out))
        window = max(3, int(crop.width * self.window_frac) | 1)
        local_mean = uniform_filter(crop.pixels.astype(np.float64), size=window, mode="nearest")
        dark = crop.pixels < (local_mean - self.offset)
        return GrayImage(np.where(dark, BLACK, WHITE).astype(np.float32))


def encode_eye(crop: GrayImage, encoder: EyeEncoder | None = None) -> GrayImage:
    """Binary eye/eyebrow stroke structure of an eye crop."""
    return (encoder or EyeEncoder())(crop)


# --- mouth encoder ----------------------------------------------------------

@dataclass
class MouthEncoder:
    """Draws the mouth landmarks as smooth closed black edge-lines on white,
    in the same window the mouth crop uses."""

    out_size: int = 64
    margin: float = 0.4
    stroke: int = 2

    def __call__(self, l: LandmarkSet) -> GrayImage:
        return encode_mouth(l, out_size=self.out_size, margin=self.margin, stroke=self.stroke)


def encode_mouth(l: LandmarkSet, out_size: int = 64, margin: float = 0.4,
                 stroke: int = 2) -> GrayImage:
    """Binary edge-line drawing guiding the manga mouth shape."""
    outer_idx, inner_idx = mouth_rings(l.schema)
    x0, y0, side = crop_window(l, RegionKind.MOUTH, margin)
    if side < 2:
        raise DegenerateFace("mouth window is degenerate")
    scale = out_size / side
    canvas = np.full((out_size, out_size), WHITE, dtype=np.float32)
    for ring_idx in (outer_idx, inner_idx):
        ring = (l.points[list(ring_idx)] - (x0, y0)) * scale
        if np.ptp(ring[:, 0]) < 1e-9 and np.ptp(ring[:, 1]) < 1e-9:
            raise DegenerateFace("mouth landmarks collapse to a point")
        draw_polyline(canvas, closed_curve_points(ring), width=stroke)
    return threshold(GrayImage(canvas))


# --- nose branch ------------------------------------------------------------

@dataclass(frozen=True)
class NoseSeed:
    """512-d latent seed for the nose generator; any finite vector works, so
    users can swap in seeds of their own."""

    latent: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.latent, dtype=np.float32).reshape(-1)
        if z.shape != (NOSE_LATENT_DIM,):
            raise InvalidSchema(f"nose seed must have {NOSE_LATENT_DIM} dims, got {z.shape}")
        if not np.all(np.isfinite(z)):
            raise InvalidSchema("nose seed must be finite")
        object.__setattr__(self, "latent", z)


@dataclass
class NoseBranch:
    """Trained pieces of the nose path: variational encoder and generator."""

    encoder: NoseEncoder
    generator: NoseGenerator
    resolution: int = 64
    trained: bool = False


def build_nose_branch(res: int = 64, seed: int = 0) -> NoseBranch:
    return NoseBranch(
        encoder=init_weights(NoseEncoder(res), seed + 10),
        generator=init_weights(NoseGenerator(res), seed + 11),
        resolution=res,
    )


def encode_nose(crop: GrayImage, branch: NoseBranch) -> NoseSeed:
    """Posterior-mean latent of the nose crop (deterministic)."""
    if not branch.trained:
        raise ModelNotTrained("nose autoencoder has not been trained")
    if crop.shape != (branch.resolution, branch.resolution):
        raise ResolutionMismatch(
            f"nose encoder expects {branch.resolution}, got {crop.shape}"
        )
    branch.encoder.eval()
    with torch.no_grad():
        mean, _ = branch.encoder(to_batch(crop))
    return NoseSeed(mean.squeeze(0).numpy())


def generate_nose(seed: NoseSeed, branch: NoseBranch) -> GrayImage:
    """Draw a manga nose from a latent seed."""
    if not branch.trained:
        raise ModelNotTrained("nose generator has not been trained")
    branch.generator.eval()
    with torch.no_grad():
        out = branch.generator(torch.from_numpy(seed.latent).unsqueeze(0))
    return from_batch(out)


# --- hair provider ----------------------------------------------------------

@dataclass
class ThresholdHairProvider:
    """Stub hair layer: dark pixels above the cheek contour. A pretrained
    line-drawing model can be dropped in through the same callable shape."""

    dark_level: float = 110.0

    def __call__(self, photo: GrayImage, l: LandmarkSet) -> GrayImage:
        cheek = l.region_points(RegionKind.CHEEK)
        xs = np.arange(photo.width, dtype=np.float64)
        jaw_y = np.interp(xs, cheek[:, 0], cheek[:, 1])
        above = np.arange(photo.height, dtype=np.float64)[:, None] < jaw_y[None, :]
        dark = photo.pixels < self.dark_level
        return GrayImage(np.where(dark & above, BLACK, WHITE).astype(np.float32))


def provide_hair(photo: GrayImage, l: LandmarkSet, provider=None) -> GrayImage:
    """Binary hair layer aligned to photo coordinates."""
    return (provider or ThresholdHairProvider())(photo, l)
