"""Shared fixtures: synthetic faces and a session-wide set of tiny trained
checkpoints for the end-to-end tests."""

from pathlib import Path

import numpy as np
import pytest

from mangaface.imaging import save_png
from mangaface.synthfaces import build_dataset_tree, photo_landmarks, render_photo
from mangaface.trainer import TrainConfig, ingest_dataset
from mangaface.trainer.api import train_atn_from_tree, train_gtn_from_tree

TINY_CFG = TrainConfig(
    dataset_resolution=64,
    region_resolution=64,
    nose_resolution=64,
    max_steps=6,
    batch_size=2,
    checkpoint_every=1000,
    pretrain_steps=6,
)


@pytest.fixture
def template_face():
    return photo_landmarks(size=256)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def fixture_env(tmp_path_factory):
    """Demo dataset tree, tiny checkpoints for every branch, and an input
    photo; shared by the pipeline, CLI, and service tests."""
    base = tmp_path_factory.mktemp("fixture_env")
    root = base / "data"
    ckpt = base / "ckpt"
    build_dataset_tree(root, n_faces=4, seed=3, resolution=64)
    ingest_dataset(root, TINY_CFG)
    train_atn_from_tree(root, "eye", TINY_CFG, ckpt)
    train_atn_from_tree(root, "mouth", TINY_CFG, ckpt)
    train_atn_from_tree(root, "nose", TINY_CFG, ckpt)
    train_gtn_from_tree(root, TINY_CFG, ckpt)
    photo_path = base / "photo.png"
    save_png(render_photo(photo_landmarks(size=256)), photo_path)
    return {"base": base, "root": root, "ckpt": ckpt, "photo": photo_path,
            "catalog": root / "catalog", "cfg": TINY_CFG}


@pytest.fixture(scope="session")
def fixture_scene(fixture_env):
    """A translated scene document with its resources, for service tests."""
    from mangaface.pipeline import translate_photo

    out = fixture_env["base"] / "translated"
    run = translate_photo(fixture_env["photo"], fixture_env["ckpt"], out,
                          fixture_env["cfg"], catalog_dir=fixture_env["catalog"])
    return {"out": out, "run": run, "scene_path": Path(run.scene_path),
            "catalog": fixture_env["catalog"]}
