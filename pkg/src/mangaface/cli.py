"""Command-line entry points.

    mangaface ingest ROOT [--make-demo N]
    mangaface train-atn --region {eye,mouth,nose} --data ROOT --out DIR
    mangaface train-gtn --data ROOT --out DIR
    mangaface translate --photo P --checkpoints DIR --out DIR [--catalog DIR]
    mangaface synthesize --scene S --out PNG [--catalog DIR]
    mangaface serve --scene S [--port N] [--catalog DIR]

Training flags mirror the scalar TrainConfig fields (--seed, --batch-size,
--max-steps, ...); nested loss weights come from --config JSON.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .errors import MangaFaceError, StageError
from .trainer.config import TrainConfig

_SCALAR = (int, float, str, bool)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="TrainConfig JSON file")
    defaults = TrainConfig()
    for f in dataclasses.fields(TrainConfig):
        value = getattr(defaults, f.name)
        if not isinstance(value, _SCALAR):
            continue
        flag = "--" + f.name.replace("_", "-")
        if isinstance(value, bool):
            p.add_argument(flag, action="store_true", default=None,
                           help=f"TrainConfig.{f.name}")
        else:
            p.add_argument(flag, type=type(value), default=None,
                           help=f"TrainConfig.{f.name} (default {value})")


def _build_config(args: argparse.Namespace) -> TrainConfig:
    cfg = TrainConfig.load(args.config) if getattr(args, "config", None) else TrainConfig()
    overrides = {}
    for f in dataclasses.fields(TrainConfig):
        v = getattr(args, f.name, None)
        if v is not None and isinstance(getattr(cfg, f.name), _SCALAR):
            overrides[f.name] = v
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mangaface",
                                     description="Unpaired photo-to-manga face translation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a dataset tree and build caches")
    p.add_argument("root", type=Path)
    p.add_argument("--make-demo", type=int, metavar="N", default=0,
                   help="first generate a synthetic demo tree with N faces")
    _add_config_flags(p)

    p = sub.add_parser("train-atn", help="train one appearance region")
    p.add_argument("--region", required=True, choices=("eye", "mouth", "nose"))
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    _add_config_flags(p)

    p = sub.add_parser("train-gtn", help="train the geometry branch")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    _add_config_flags(p)

    p = sub.add_parser("translate", help="translate a photo into a manga face")
    p.add_argument("--photo", required=True, type=Path)
    p.add_argument("--checkpoints", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--catalog", type=Path, default=None)
    _add_config_flags(p)

    p = sub.add_parser("synthesize", help="render a scene document to PNG")
    p.add_argument("--scene", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--catalog", type=Path, default=None)

    p = sub.add_parser("serve", help="run the local editing service")
    p.add_argument("--scene", required=True, type=Path)
    p.add_argument("--port", type=int, default=8737)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--catalog", type=Path, default=None)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except MangaFaceError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "ingest":
        cfg = _build_config(args)
        if args.make_demo:
            from .synthfaces import build_dataset_tree
            build_dataset_tree(args.root, n_faces=args.make_demo, seed=cfg.seed,
                               resolution=cfg.dataset_resolution)
        from .trainer.ingest import ingest_dataset
        manifest = ingest_dataset(args.root, cfg)
        print(f"photos: {manifest.photos}")
        print(f"manga: {manifest.manga}  landmark files: {manifest.landmark_count}")
        return 0

    if args.command == "train-atn":
        cfg = _build_config(args)
        from .trainer.api import train_atn_from_tree
        _, ckpt = train_atn_from_tree(args.data, args.region, cfg, args.out)
        print(f"checkpoint: {ckpt}")
        return 0

    if args.command == "train-gtn":
        cfg = _build_config(args)
        from .trainer.api import train_gtn_from_tree
        _, ckpt = train_gtn_from_tree(args.data, cfg, args.out)
        print(f"checkpoint: {ckpt}")
        return 0

    if args.command == "translate":
        cfg = _build_config(args)
        from .pipeline import translate_photo
        run = translate_photo(args.photo, args.checkpoints, args.out, cfg,
                              catalog_dir=args.catalog)
        for stage, dt in run.timings.items():
            print(f"{stage:>10}: {dt * 1000:8.1f} ms")
        print(f"scene: {run.scene_path}")
        print(f"manga: {run.rendered_path}")
        return 0

    if args.command == "synthesize":
        from .imaging import save_png
        from .synthesis.catalog import load_catalog
        from .synthesis.compose import SceneResources, render
        from .synthesis.scene import parse_scene
        scene = parse_scene(args.scene.read_text())
        catalog_dir = args.catalog if args.catalog else args.scene.parent / "catalog"
        resources = SceneResources(base_dir=args.scene.parent, catalog=load_catalog(catalog_dir))
        save_png(render(scene, resources), args.out)
        print(f"wrote {args.out}")
        return 0

    if args.command == "serve":
        from .service import serve_forever
        serve_forever(args.scene, port=args.port, host=args.host, catalog_dir=args.catalog)
        return 0

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
