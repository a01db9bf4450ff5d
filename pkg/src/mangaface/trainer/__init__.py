"""Deterministic training harness: config, ingestion, loops, checkpoints."""

from .api import train_atn_from_tree, train_gtn_from_tree
from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig, lr_schedule
from .ingest import DatasetManifest, ingest_dataset, load_meangeo
from .loops import (
    MetricsLog,
    load_eye_encoder,
    load_gtn,
    load_nose_branch,
    load_region_translator,
    save_gtn_checkpoint,
    save_nose_checkpoint,
    save_region_checkpoint,
    train_eye_encoder,
    train_gtn,
    train_nose_branch,
    train_region_translator,
)

__all__ = [
    "DatasetManifest",
    "MetricsLog",
    "TrainConfig",
    "ingest_dataset",
    "load_checkpoint",
    "load_eye_encoder",
    "load_gtn",
    "load_meangeo",
    "load_nose_branch",
    "load_region_translator",
    "lr_schedule",
    "save_checkpoint",
    "save_gtn_checkpoint",
    "save_nose_checkpoint",
    "save_region_checkpoint",
    "train_atn_from_tree",
    "train_eye_encoder",
    "train_gtn",
    "train_gtn_from_tree",
    "train_nose_branch",
    "train_region_translator",
]
