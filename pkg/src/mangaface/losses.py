"""The training objectives, as pure differentiable functions on torch tensors.

Image losses are defined on the [0, 255] gray scale; generator outputs in
[-1, 1] must be remapped (imaging.from_unit) before entering a loss. Every
function here is checkable against central finite differences.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import torch

from .errors import (
    EmptyBatch,
    LevelMismatch,
    NonFinite,
    OutOfRange,
    ShapeMismatch,
    ZeroDeviationWarning,
)

GRAY_MID = 127.5


@dataclass(frozen=True)
class SSLossParams:
    """Structural smoothing: Gaussian penalty centred on mid-gray.

    sigma defaults to 255/6 so +-3 sigma spans the whole gray range;
    reduction "mean" replaces the per-image pixel sums with pixel means so
    the weight of the term does not grow with resolution ("sum" keeps the
    raw per-image sums).
    """

    sigma: float = 255.0 / 6.0
    reduction: str = "mean"
    mu: float = GRAY_MID

    def __post_init__(self):
        if self.sigma <= 0:
            raise OutOfRange("sigma must be positive")
        if self.reduction not in ("mean", "sum"):
            raise OutOfRange(f"unknown reduction {self.reduction!r}")
        if self.mu != GRAY_MID:
            raise OutOfRange("mu is fixed at 255/2")


@dataclass(frozen=True)
class SPLossWeights:
    """Similarity preserving: per-pool-level feature weights plus the pixel
    weight. Defaults follow the reference configuration (pool5 and pixel
    terms only)."""

    lambda_pixel: float = 1.0
    lambda_feat: dict[int, float] = field(
        default_factory=lambda: {1: 0.0, 2: 0.0, 3: 0.0, 4: 0.0, 5: 1.0}
    )

    def __post_init__(self):
        if self.lambda_pixel < 0 or any(v < 0 for v in self.lambda_feat.values()):
            raise OutOfRange("SP weights must be >= 0")


@dataclass(frozen=True)
class ATNObjectiveWeights:
    """Appearance objective weights: cycle, forward SP, backward SP, smoothing."""

    alpha1: float = 10.0
    alpha2: float = 5.0
    alpha3: float = 5.0
    alpha4: float = 1.0

    def __post_init__(self):
        if min(self.alpha1, self.alpha2, self.alpha3, self.alpha4) < 0:
            raise OutOfRange("objective weights must be >= 0")

    @property
    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.alpha1, self.alpha2, self.alpha3, self.alpha4)


@dataclass(frozen=True)
class GTNObjectiveWeights:
    """Geometry objective weights: (cycle, characteristic) per attribute, in
    the order location, size, shape."""

    beta1: float = 10.0
    beta2: float = 1.0
    beta3: float = 10.0
    beta4: float = 1.0
    beta5: float = 10.0
    beta6: float = 1.0

    def __post_init__(self):
        if min(self.as_tuple) < 0:
            raise OutOfRange("objective weights must be >= 0")

    @property
    def as_tuple(self) -> tuple[float, ...]:
        return (self.beta1, self.beta2, self.beta3, self.beta4, self.beta5, self.beta6)


class FeatureStack:
    """Ordered feature maps exported after each pooling level of the
    similarity extractor. Level resolutions must halve."""

    def __init__(self, levels: list[torch.Tensor]):
        if not levels:
            raise LevelMismatch("a feature stack needs at least one level")
        for a, b in zip(levels[:-1], levels[1:]):
            if b.shape[-1] * 2 != a.shape[-1] or b.shape[-2] * 2 != a.shape[-2]:
                raise LevelMismatch(
                    f"level resolutions must halve, got {tuple(a.shape)} -> {tuple(b.shape)}"
                )
        self.levels = list(levels)

    def __len__(self) -> int:
        return len(self.levels)

    def __iter__(self):
        return iter(self.levels)


def _check_batch(name: str, x: torch.Tensor) -> torch.Tensor:
    if x.ndim == 0 or x.shape[0] == 0 or x.numel() == 0:
        raise EmptyBatch(f"{name} is empty")
    return x


def lsgan_loss(d_real: torch.Tensor, d_fake: torch.Tensor) -> torch.Tensor:
    """Least-squares adversarial loss: mean (D(real)-1)^2 + mean D(fake)^2.

    Means run over batch and patch dimensions; real and fake batches may have
    different batch sizes but each must be patch maps of one shape.
    """
    d_real = _check_batch("d_real", d_real)
    d_fake = _check_batch("d_fake", d_fake)
    if d_real.shape[1:] != d_fake.shape[1:]:
        raise ShapeMismatch(
            f"patch shapes differ: {tuple(d_real.shape)} vs {tuple(d_fake.shape)}"
        )
    return ((d_real - 1.0) ** 2).mean() + (d_fake**2).mean()


def cycle_loss(p: torch.Tensor, m: torch.Tensor,
               p_rec: torch.Tensor, m_rec: torch.Tensor) -> torch.Tensor:
    """Mean L1 reconstruction error over both cycle directions."""
    _check_batch("p", p)
    _check_batch("m", m)
    if p.shape != p_rec.shape:
        raise ShapeMismatch(f"p {tuple(p.shape)} vs p_rec {tuple(p_rec.shape)}")
    if m.shape != m_rec.shape:
        raise ShapeMismatch(f"m {tuple(m.shape)} vs m_rec {tuple(m_rec.shape)}")
    return (p_rec - p).abs().mean() + (m_rec - m).abs().mean()


def _gaussian_reduce(x: torch.Tensor, params: SSLossParams) -> torch.Tensor:
    g = torch.exp(-((x - params.mu) ** 2) / (2.0 * params.sigma**2))
    per_image = g.flatten(1).mean(dim=1) if params.reduction == "mean" else g.flatten(1).sum(dim=1)
    return per_image.mean()


def ss_loss(gen_forward: torch.Tensor, gen_backward: torch.Tensor,
            params: SSLossParams = SSLossParams()) -> torch.Tensor:
    """Structural smoothing loss on the two generator outputs.

    A Gaussian of the pixel gray value centred on mid-gray: maximal for
    pixels at 127.5, vanishing toward 0 and 255, with the 1/(sqrt(2 pi)
    sigma) prefactor applied once to the bracketed sum. Minimizing it pushes
    pixels toward clean black or white.
    """
    for name, x in (("gen_forward", gen_forward), ("gen_backward", gen_backward)):
        _check_batch(name, x)
        if x.min() < 0.0 or x.max() > 255.0:
            raise OutOfRange(f"{name} has pixels outside [0, 255]")
    prefactor = 1.0 / (math.sqrt(2.0 * math.pi) * params.sigma)
    return prefactor * (_gaussian_reduce(gen_forward, params)
                        + _gaussian_reduce(gen_backward, params))


def sp_loss(x: torch.Tensor, y: torch.Tensor,
            feats_x: FeatureStack, feats_y: FeatureStack,
            w: SPLossWeights = SPLossWeights()) -> torch.Tensor:
    """Similarity-preserving loss: weighted squared-L2 distances between the
    two images and between their feature maps at every pool level. Squared-L2
    is a per-element mean so the level weights stay comparable across
    resolutions."""
    _check_batch("x", x)
    if x.shape != y.shape:
        raise ShapeMismatch(f"x {tuple(x.shape)} vs y {tuple(y.shape)}")
    if len(feats_x) != len(feats_y):
        raise LevelMismatch(f"{len(feats_x)} levels vs {len(feats_y)}")
    total = w.lambda_pixel * ((x - y) ** 2).mean()
    for i, (fx, fy) in enumerate(zip(feats_x, feats_y), start=1):
        if fx.shape != fy.shape:
            raise LevelMismatch(f"level {i}: {tuple(fx.shape)} vs {tuple(fy.shape)}")
        total = total + w.lambda_feat.get(i, 0.0) * ((fx - fy) ** 2).mean()
    return total


def _finite(name: str, value) -> torch.Tensor:
    t = torch.as_tensor(value, dtype=torch.float64) if not torch.is_tensor(value) else value
    if not torch.isfinite(t).all():
        raise NonFinite(f"{name} is not finite: {value}")
    return t


def atn_objective(adv_m, adv_p, cyc, sp_forward, sp_backward, ss,
                  w: ATNObjectiveWeights = ATNObjectiveWeights()) -> torch.Tensor:
    """Full appearance objective: both adversarial terms plus the weighted
    cycle, similarity-preserving, and structural-smoothing terms."""
    parts = {"adv_m": adv_m, "adv_p": adv_p, "cyc": cyc,
             "sp_forward": sp_forward, "sp_backward": sp_backward, "ss": ss}
    vals = {k: _finite(k, v) for k, v in parts.items()}
    a1, a2, a3, a4 = w.as_tuple
    return (vals["adv_m"] + vals["adv_p"] + a1 * vals["cyc"]
            + a2 * vals["sp_forward"] + a3 * vals["sp_backward"] + a4 * vals["ss"])


def characteristic_loss(xi_batch: torch.Tensor, gen_out: torch.Tensor,
                        mean_src: torch.Tensor, mean_dst: torch.Tensor,
                        eps: float = 1e-12) -> torch.Tensor:
    """Cosine loss between deviations from the two domain means.

    Per sample: 1 - cos(xi - mean_src, G(xi) - mean_dst), averaged over the
    batch. Samples whose deviation norm falls below eps have no
    characteristic direction; they are skipped with a warning, and if every
    sample is skipped the loss is 0 (with a warning).
    """
    xi_batch = _check_batch("xi_batch", xi_batch)
    gen_out = _check_batch("gen_out", gen_out)
    if xi_batch.shape != gen_out.shape:
        raise ShapeMismatch(f"{tuple(xi_batch.shape)} vs {tuple(gen_out.shape)}")
    if mean_src.shape != xi_batch.shape[1:] or mean_dst.shape != gen_out.shape[1:]:
        raise ShapeMismatch("mean vectors must match the sample dimension")

    dev_src = xi_batch - mean_src
    dev_dst = gen_out - mean_dst
    n_src = dev_src.norm(dim=1)
    n_dst = dev_dst.norm(dim=1)
    keep = (n_src >= eps) & (n_dst >= eps)
    if not bool(keep.all()):
        warnings.warn(
            f"skipping {int((~keep).sum())} sample(s) with zero deviation from the mean face",
            ZeroDeviationWarning,
        )
    if not bool(keep.any()):
        return torch.zeros((), dtype=xi_batch.dtype)
    cos = (dev_src[keep] * dev_dst[keep]).sum(dim=1) / (n_src[keep] * n_dst[keep])
    return (1.0 - cos).mean()


def gtn_objective(parts: dict[str, float | torch.Tensor],
                  w: GTNObjectiveWeights = GTNObjectiveWeights()) -> torch.Tensor:
    """Full geometry objective over the three attribute sub-GANs.

    `parts` holds, for each attribute in {loc, siz, sha}: "<attr>_adv_p",
    "<attr>_adv_m", "<attr>_cyc", "<attr>_cha_p", "<attr>_cha_m" (15 terms).
    """
    betas = w.as_tuple
    total = None
    for i, attr in enumerate(("loc", "siz", "sha")):
        vals = {k: _finite(f"{attr}_{k}", parts[f"{attr}_{k}"])
                for k in ("adv_p", "adv_m", "cyc", "cha_p", "cha_m")}
        b_cyc, b_cha = betas[2 * i], betas[2 * i + 1]
        term = (vals["adv_p"] + vals["adv_m"] + b_cyc * vals["cyc"]
                + b_cha * (vals["cha_p"] + vals["cha_m"]))
        total = term if total is None else total + term
    return total
