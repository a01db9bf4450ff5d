"""Training configuration and the optimizer schedule.

Defaults reproduce the reference recipe: Adam at 2e-4 with batch 5, constant
for 100 epochs then linearly decayed to 0 over the next 100; objective
weights (10, 5, 5, 1) for the appearance branch and (10, 1, 10, 1, 10, 1)
for the geometry branch; similarity weights pixel=1, pool5=1, pool1-4=0.
Desk-scale runs cap the step count and shrink the region resolution.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..errors import OutOfRange
from ..losses import ATNObjectiveWeights, GTNObjectiveWeights, SPLossWeights, SSLossParams


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    batch_size: int = 5
    lr_initial: float = 2e-4
    epochs_constant: int = 100
    epochs_decay: int = 100
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    atn_weights: ATNObjectiveWeights = field(default_factory=ATNObjectiveWeights)
    gtn_weights: GTNObjectiveWeights = field(default_factory=GTNObjectiveWeights)
    sp_weights: SPLossWeights = field(default_factory=SPLossWeights)
    ss_sigma: float = 255.0 / 6.0
    ss_reduction: str = "mean"
    region_resolution: int = 64
    nose_resolution: int = 64
    dataset_resolution: int = 256
    max_steps: int = 500           # 0 = run the full epoch schedule
    checkpoint_every: int = 250    # steps
    fc_hidden: int = 64
    eye_encoder_backend: str = "threshold"  # none | threshold | pretrained
    pretrain_eye_encoder: bool = False
    pretrain_steps: int = 300
    canvas_size: int = 512
    style_gender: str = "male"

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs_constant < 1 or self.epochs_decay < 1:
            raise OutOfRange("counts must be positive")
        if self.max_steps < 0 or self.checkpoint_every < 1:
            raise OutOfRange("step counts must be non-negative")
        if self.eye_encoder_backend not in ("none", "threshold", "pretrained"):
            raise OutOfRange(f"unknown eye encoder backend {self.eye_encoder_backend!r}")

    @property
    def ss_params(self) -> SSLossParams:
        return SSLossParams(sigma=self.ss_sigma, reduction=self.ss_reduction)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sp_weights"]["lambda_feat"] = {str(k): v for k, v in
                                          self.sp_weights.lambda_feat.items()}
        return d

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        d = dict(d)
        if "atn_weights" in d:
            d["atn_weights"] = ATNObjectiveWeights(**d["atn_weights"])
        if "gtn_weights" in d:
            d["gtn_weights"] = GTNObjectiveWeights(**d["gtn_weights"])
        if "sp_weights" in d:
            sp = dict(d["sp_weights"])
            sp["lambda_feat"] = {int(k): float(v) for k, v in sp["lambda_feat"].items()}
            d["sp_weights"] = SPLossWeights(**sp)
        return TrainConfig(**d)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n")

    @staticmethod
    def load(path) -> "TrainConfig":
        return TrainConfig.from_dict(json.loads(Path(path).read_text()))

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()


def lr_schedule(epoch: int, cfg: TrainConfig) -> float:
    """Constant learning rate, then a linear decay to zero."""
    if epoch < 0:
        raise OutOfRange(f"epoch must be >= 0, got {epoch}")
    if epoch < cfg.epochs_constant:
        return cfg.lr_initial
    k = epoch - cfg.epochs_constant
    if k >= cfg.epochs_decay:
        return 0.0
    return cfg.lr_initial * (1.0 - k / cfg.epochs_decay)
