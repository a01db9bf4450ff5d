"""Network layer plans and their torch realizations.

Every buildable network is described first as a NetworkSpec: an ordered list
of layer rows (type, kernel, output channels, output size) whose sizes must
be consistent under stride arithmetic. Checkpoints store the plan and refuse
to load against a different one. `instantiate` turns a spec into the torch
module realizing those shapes.

Notes on the published plans: the residual stage consumes 128 channels at
half resolution and emits 256 at quarter resolution, so the first residual
block uses a strided projection shortcut; instance norm is omitted on the
single-channel output layer (it is degenerate there) although the row keeps
its printed label.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import torch
from torch import nn

from .errors import UnsupportedResolution


class NetworkRole(Enum):
    GENERATOR_RESNET6 = "GeneratorResnet6"
    PATCH_DISCRIMINATOR_70 = "PatchDiscriminator70"
    PHI_EXTRACTOR = "PhiExtractor"
    NOSE_GENERATOR = "NoseGenerator"
    NOSE_ENCODER = "NoseEncoder"
    EYE_ENCODER = "EyeEncoder"


@dataclass(frozen=True)
class LayerRow:
    kind: str
    kernel: int | None
    channels: int
    size: int
    stride: int = 1

    @property
    def table_entry(self) -> tuple[str, int | None, int, int]:
        """The (type, kernel, channels, size) cells as printed in plan tables."""
        return (self.kind, self.kernel, self.channels, self.size)


@dataclass(frozen=True)
class NetworkSpec:
    role: NetworkRole
    input_channels: int
    output_channels: int
    input_resolution: int
    rows: tuple[LayerRow, ...] = field(default_factory=tuple)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """Check that declared row sizes follow from stride arithmetic."""
        size = self.rows[0].size
        for row in self.rows[1:]:
            if "Upsample" in row.kind or "DeConv" in row.kind:
                expect = size * 2
            elif row.kind.startswith("FC"):
                expect = 1  # flattening head
            elif row.kernel == 4 and size == 1:
                expect = 4  # latent projection: 1x1 -> 4x4
            elif row.kernel == 4 and row.stride == 1:
                expect = size - 1  # valid-ish patch conv, padding 1
            else:
                expect = size // row.stride
            if row.size != expect:
                raise UnsupportedResolution(
                    f"{self.role.value}: row {row} declares size {row.size}, "
                    f"stride arithmetic gives {expect}"
                )
            size = row.size

    def to_dict(self) -> dict:
        return {
            "role": self.role.value,
            "input_channels": self.input_channels,
            "output_channels": self.output_channels,
            "input_resolution": self.input_resolution,
            "rows": [[r.kind, r.kernel, r.channels, r.size, r.stride] for r in self.rows],
        }

    @staticmethod
    def from_dict(d: dict) -> "NetworkSpec":
        return NetworkSpec(
            role=NetworkRole(d["role"]),
            input_channels=d["input_channels"],
            output_channels=d["output_channels"],
            input_resolution=d["input_resolution"],
            rows=tuple(LayerRow(*row) for row in d["rows"]),
        )


def _power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def build_generator(res: int) -> NetworkSpec:
    """Resnet-6 image translator plan. At 256 the rows reproduce the published
    generator table; other resolutions scale by stride arithmetic."""
    if not _power_of_two(res) or res < 64:
        raise UnsupportedResolution(f"generator resolution must be a power of two >= 64, got {res}")
    rows = [
        LayerRow("Input", None, 1, res),
        LayerRow("Conv", 7, 64, res),
        LayerRow("ReLu+Conv+IN", 3, 128, res // 2, stride=2),
    ]
    rows.append(LayerRow("Residual block", 3, 256, res // 4, stride=2))
    rows.extend(LayerRow("Residual block", 3, 256, res // 4) for _ in range(5))
    rows.extend([
        LayerRow("ReLu+DeConv+IN", 3, 128, res // 2, stride=2),
        LayerRow("ReLu+DeConv+IN", 3, 64, res, stride=2),
        LayerRow("ReLu+Conv+IN", 7, 1, res),
    ])
    return NetworkSpec(NetworkRole.GENERATOR_RESNET6, 1, 1, res, tuple(rows))


def build_discriminator(res: int) -> NetworkSpec:
    """70x70 patch discriminator plan: four strided levels then a 1-channel
    patch map. Being fully convolutional it also scores smaller inputs, but a
    plan is only declared for resolutions that fit the receptive field."""
    if res < 70:
        raise UnsupportedResolution(f"patch discriminator needs resolution >= 70, got {res}")
    s1 = res // 2
    s2 = s1 // 2
    s3 = s2 // 2
    rows = (
        LayerRow("Input", None, 1, res),
        LayerRow("Conv+LReLU", 4, 64, s1, stride=2),
        LayerRow("Conv+IN+LReLU", 4, 128, s2, stride=2),
        LayerRow("Conv+IN+LReLU", 4, 256, s3, stride=2),
        LayerRow("Conv+IN+LReLU", 4, 512, s3 - 1, stride=1),
        LayerRow("Conv", 4, 1, s3 - 2, stride=1),
    )
    return NetworkSpec(NetworkRole.PATCH_DISCRIMINATOR_70, 1, 1, res, rows)


PHI_CHANNELS = (32, 64, 128, 256, 512)


def build_phi(res: int = 256) -> NetworkSpec:
    """Similarity-preserving feature extractor: five conv blocks, each ending
    in a 2x downsampling pool; feature maps are exported after each pool."""
    if not _power_of_two(res) or res < 32:
        raise UnsupportedResolution(f"phi resolution must be a power of two >= 32, got {res}")
    rows = [LayerRow("Input", None, 1, res)]
    size = res
    for c in PHI_CHANNELS:
        size //= 2
        rows.append(LayerRow("Conv+LReLU+Pool", 3, c, size, stride=2))
    return NetworkSpec(NetworkRole.PHI_EXTRACTOR, 1, PHI_CHANNELS[-1], res, tuple(rows))


NOSE_LATENT_DIM = 512


def build_nose_generator(res: int = 64) -> NetworkSpec:
    """Latent-seeded nose generator. The rows follow the published
    progressive-generator table truncated at the `res` stage, plus a linear
    1-channel output head (desk scale renders grayscale directly)."""
    if not _power_of_two(res) or not 8 <= res <= 256:
        raise UnsupportedResolution(f"nose generator resolution must be a power of two in [8, 256], got {res}")
    rows = [
        LayerRow("Latent vector", None, NOSE_LATENT_DIM, 1),
        LayerRow("Conv+LReLU", 4, 512, 4),
        LayerRow("Conv+LReLU", 3, 512, 4),
    ]
    stage_channels = {8: 512, 16: 512, 32: 512, 64: 256, 128: 128, 256: 64}
    size = 4
    while size < res:
        size *= 2
        c = stage_channels[size]
        rows.append(LayerRow("Upsample", None, rows[-1].channels, size))
        rows.append(LayerRow("Conv+LReLU", 3, c, size))
        rows.append(LayerRow("Conv+LReLU", 3, c, size))
    rows.append(LayerRow("Conv+linear", 1, 1, res))
    return NetworkSpec(NetworkRole.NOSE_GENERATOR, NOSE_LATENT_DIM, 1, res, tuple(rows))


def build_nose_encoder(res: int = 64) -> NetworkSpec:
    """Variational encoder producing the 512-d nose seed (posterior mean)."""
    if not _power_of_two(res) or res < 16:
        raise UnsupportedResolution(f"nose encoder resolution must be a power of two >= 16, got {res}")
    rows = [LayerRow("Input", None, 1, res)]
    size, channels = res, (32, 64, 128, 256)
    for c in channels:
        size //= 2
        rows.append(LayerRow("Conv+LReLU", 3, c, size, stride=2))
    rows.append(LayerRow("FC mean/logvar", None, NOSE_LATENT_DIM, 1))
    return NetworkSpec(NetworkRole.NOSE_ENCODER, 1, NOSE_LATENT_DIM, res, tuple(rows))


def build_eye_encoder(res: int = 64) -> NetworkSpec:
    """Conditional translator that reduces a photo eye crop to its binary
    stroke backbone."""
    if not _power_of_two(res) or res < 32:
        raise UnsupportedResolution(f"eye encoder resolution must be a power of two >= 32, got {res}")
    rows = (
        LayerRow("Input", None, 1, res),
        LayerRow("Conv+IN+ReLU", 7, 32, res),
        LayerRow("Conv+IN+ReLU", 3, 64, res // 2, stride=2),
        LayerRow("Residual block", 3, 64, res // 2),
        LayerRow("Residual block", 3, 64, res // 2),
        LayerRow("ReLu+DeConv+IN", 3, 32, res, stride=2),
        LayerRow("Conv", 7, 1, res),
    )
    return NetworkSpec(NetworkRole.EYE_ENCODER, 1, 1, res, rows)


# --- torch realizations -----------------------------------------------------

class ResidualBlock(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, stride: int = 1):
        super().__init__()
        self.block = nn.Sequential(
            nn.ReflectionPad2d(1),
            nn.Conv2d(in_ch, out_ch, 3, stride=stride),
            nn.InstanceNorm2d(out_ch),
            nn.ReLU(inplace=True),
            nn.ReflectionPad2d(1),
            nn.Conv2d(out_ch, out_ch, 3),
            nn.InstanceNorm2d(out_ch),
        )
        if in_ch != out_ch or stride != 1:
            self.project = nn.Conv2d(in_ch, out_ch, 1, stride=stride)
        else:
            self.project = nn.Identity()

    def forward(self, x):
        return self.project(x) + self.block(x)


class ResnetGenerator(nn.Module):
    """Realizes the Resnet-6 plan; outputs tanh values in [-1, 1]."""

    def __init__(self, res: int):
        super().__init__()
        self.spec = build_generator(res)
        self.net = nn.Sequential(
            nn.ReflectionPad2d(3),
            nn.Conv2d(1, 64, 7),
            nn.InstanceNorm2d(64),
            nn.ReLU(inplace=True),
            nn.Conv2d(64, 128, 3, stride=2, padding=1),
            nn.InstanceNorm2d(128),
            nn.ReLU(inplace=True),
            ResidualBlock(128, 256, stride=2),
            *[ResidualBlock(256, 256) for _ in range(5)],
            nn.ConvTranspose2d(256, 128, 3, stride=2, padding=1, output_padding=1),
            nn.InstanceNorm2d(128),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(128, 64, 3, stride=2, padding=1, output_padding=1),
            nn.InstanceNorm2d(64),
            nn.ReLU(inplace=True),
            nn.ReflectionPad2d(3),
            nn.Conv2d(64, 1, 7),
            nn.Tanh(),
        )

    def forward(self, x):
        return self.net(x)


class PatchDiscriminator(nn.Module):
    """70x70 receptive-field patch scorer; emits an unbounded patch map."""

    def __init__(self, res: int):
        super().__init__()
        self.spec = build_discriminator(res)
        self.net = nn.Sequential(
            nn.Conv2d(1, 64, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(64, 128, 4, stride=2, padding=1),
            nn.InstanceNorm2d(128),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(128, 256, 4, stride=2, padding=1),
            nn.InstanceNorm2d(256),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(256, 512, 4, stride=1, padding=1),
            nn.InstanceNorm2d(512),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(512, 1, 4, stride=1, padding=1),
        )

    def forward(self, x):
        return self.net(x)


class PhiExtractor(nn.Module):
    """Frozen multi-resolution feature extractor for the SP loss."""

    SEED = 9247

    def __init__(self, res: int = 256):
        super().__init__()
        self.spec = build_phi(res)
        blocks = []
        in_ch = 1
        for c in PHI_CHANNELS:
            blocks.append(nn.Sequential(
                nn.Conv2d(in_ch, c, 3, padding=1),
                nn.LeakyReLU(0.2, inplace=True),
                nn.AvgPool2d(2),
            ))
            in_ch = c
        self.blocks = nn.ModuleList(blocks)
        gen = torch.Generator().manual_seed(self.SEED)
        with torch.no_grad():
            for p in self.parameters():
                if p.ndim > 1:
                    p.normal_(0.0, 0.05, generator=gen)
                else:
                    p.zero_()
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()

    def forward(self, x) -> list[torch.Tensor]:
        feats = []
        for block in self.blocks:
            x = block(x)
            feats.append(x)
        return feats


class NoseGenerator(nn.Module):
    def __init__(self, res: int = 64):
        super().__init__()
        self.spec = build_nose_generator(res)
        self.res = res
        layers: list[nn.Module] = [
            nn.ConvTranspose2d(NOSE_LATENT_DIM, 512, 4),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(512, 512, 3, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
        ]
        stage_channels = {8: 512, 16: 512, 32: 512, 64: 256, 128: 128, 256: 64}
        size, in_ch = 4, 512
        while size < res:
            size *= 2
            c = stage_channels[size]
            layers.extend([
                nn.Upsample(scale_factor=2, mode="nearest"),
                nn.Conv2d(in_ch, c, 3, padding=1),
                nn.LeakyReLU(0.2, inplace=True),
                nn.Conv2d(c, c, 3, padding=1),
                nn.LeakyReLU(0.2, inplace=True),
            ])
            in_ch = c
        layers.extend([nn.Conv2d(in_ch, 1, 1), nn.Tanh()])
        self.net = nn.Sequential(*layers)

    def forward(self, z):
        return self.net(z.view(z.shape[0], NOSE_LATENT_DIM, 1, 1))


class NoseCritic(nn.Module):
    """Small scorer for adversarial nose training (internal; desk-scale stand-in
    for the progressive discriminator)."""

    def __init__(self, res: int = 64):
        super().__init__()
        layers = []
        in_ch, size = 1, res
        for c in (64, 128, 256, 512):
            layers.extend([
                nn.Conv2d(in_ch, c, 3, stride=2, padding=1),
                nn.LeakyReLU(0.2, inplace=True),
            ])
            in_ch, size = c, size // 2
        layers.append(nn.Conv2d(512, 1, size))
        self.net = nn.Sequential(*layers)

    def forward(self, x):
        return self.net(x).flatten(1)


class NoseEncoder(nn.Module):
    """VAE encoder; forward returns (mean, logvar) of the 512-d posterior."""

    def __init__(self, res: int = 64):
        super().__init__()
        self.spec = build_nose_encoder(res)
        layers = []
        in_ch, size = 1, res
        for c in (32, 64, 128, 256):
            layers.extend([
                nn.Conv2d(in_ch, c, 3, stride=2, padding=1),
                nn.LeakyReLU(0.2, inplace=True),
            ])
            in_ch, size = c, size // 2
        self.conv = nn.Sequential(*layers)
        self.fc_mean = nn.Linear(256 * size * size, NOSE_LATENT_DIM)
        self.fc_logvar = nn.Linear(256 * size * size, NOSE_LATENT_DIM)

    def forward(self, x):
        h = self.conv(x).flatten(1)
        return self.fc_mean(h), self.fc_logvar(h)


class NoseDecoder(nn.Module):
    """VAE decoder used only while training the nose encoder."""

    def __init__(self, res: int = 64):
        super().__init__()
        self.size0 = res // 16
        self.fc = nn.Linear(NOSE_LATENT_DIM, 256 * self.size0 * self.size0)
        layers = []
        in_ch = 256
        for c in (128, 64, 32, 16):
            layers.extend([
                nn.ConvTranspose2d(in_ch, c, 4, stride=2, padding=1),
                nn.LeakyReLU(0.2, inplace=True),
            ])
            in_ch = c
        layers.extend([nn.Conv2d(16, 1, 3, padding=1), nn.Tanh()])
        self.net = nn.Sequential(*layers)

    def forward(self, z):
        h = self.fc(z).view(z.shape[0], 256, self.size0, self.size0)
        return self.net(h)


class EyeEncoderNet(nn.Module):
    """Realizes the eye-encoder plan; outputs tanh values in [-1, 1]."""

    def __init__(self, res: int = 64):
        super().__init__()
        self.spec = build_eye_encoder(res)
        self.net = nn.Sequential(
            nn.ReflectionPad2d(3),
            nn.Conv2d(1, 32, 7),
            nn.InstanceNorm2d(32),
            nn.ReLU(inplace=True),
            nn.Conv2d(32, 64, 3, stride=2, padding=1),
            nn.InstanceNorm2d(64),
            nn.ReLU(inplace=True),
            ResidualBlock(64, 64),
            ResidualBlock(64, 64),
            nn.ConvTranspose2d(64, 32, 3, stride=2, padding=1, output_padding=1),
            nn.InstanceNorm2d(32),
            nn.ReLU(inplace=True),
            nn.ReflectionPad2d(3),
            nn.Conv2d(32, 1, 7),
            nn.Tanh(),
        )

    def forward(self, x):
        return self.net(x)


def init_weights(module: nn.Module, seed: int) -> nn.Module:
    """Gaussian(0, 0.02) init for conv/linear weights, reproducible by seed."""
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for m in module.modules():
            if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
                m.weight.normal_(0.0, 0.02, generator=gen)
                if m.bias is not None:
                    m.bias.zero_()
    return module


def instantiate(spec: NetworkSpec) -> nn.Module:
    factory = {
        NetworkRole.GENERATOR_RESNET6: ResnetGenerator,
        NetworkRole.PATCH_DISCRIMINATOR_70: PatchDiscriminator,
        NetworkRole.PHI_EXTRACTOR: PhiExtractor,
        NetworkRole.NOSE_GENERATOR: NoseGenerator,
        NetworkRole.NOSE_ENCODER: NoseEncoder,
        NetworkRole.EYE_ENCODER: EyeEncoderNet,
    }[spec.role]
    return factory(spec.input_resolution)
