"""Versioned checkpoint containers: layer plans + weights + config hash.

Loading verifies the stored plans against the plans of the freshly built
architecture and refuses on any mismatch, so stale weights can never be
poured into a different network.
"""

from __future__ import annotations

from pathlib import Path

import torch

from ..errors import CheckpointMismatch

FORMAT_VERSION = 1


def save_checkpoint(path, kind: str, plans: dict[str, dict],
                    states: dict[str, dict], config_hash: str,
                    extra: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save({
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "plans": plans,
        "states": states,
        "config_hash": config_hash,
        "extra": extra or {},
    }, path)
    return path


def load_checkpoint(path, kind: str, expected_plans: dict[str, dict]) -> dict:
    path = Path(path)
    if not path.exists():
        raise CheckpointMismatch(f"checkpoint not found: {path}")
    blob = torch.load(path, map_location="cpu", weights_only=False)
    if blob.get("format_version") != FORMAT_VERSION:
        raise CheckpointMismatch(
            f"{path}: format version {blob.get('format_version')} != {FORMAT_VERSION}"
        )
    if blob.get("kind") != kind:
        raise CheckpointMismatch(f"{path}: checkpoint kind {blob.get('kind')!r} != {kind!r}")
    stored = blob.get("plans", {})
    if set(stored) != set(expected_plans):
        raise CheckpointMismatch(
            f"{path}: plan entries {sorted(stored)} != expected {sorted(expected_plans)}"
        )
    for name, plan in expected_plans.items():
        if stored[name] != plan:
            raise CheckpointMismatch(f"{path}: layer plan mismatch for {name!r}")
    return blob
