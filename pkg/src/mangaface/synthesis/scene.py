"""Composition scenes: the placed-component document behind the editor.

A scene is a value. Serialization is canonical (sorted keys, two-space
indent, trailing newline) so that byte equality of documents is meaningful:
serialize(parse(doc)) == doc for canonical documents.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ParseError
from ..facegeom.landmarks import RegionKind
from ..gtn import FaceLayout

SCENE_SCHEMA_VERSION = 1

# z slots: body < face shape < ears < hair < nose < mouth < eyes
Z_BODY = 0
Z_FACE_SHAPE = 10
Z_EAR = 15
Z_HAIR = 20
Z_NOSE = 30
Z_MOUTH = 40
Z_EYES = 50

SINGLETON_REGIONS = (RegionKind.NOSE, RegionKind.MOUTH, RegionKind.BODY)


@dataclass(frozen=True)
class SceneComponent:
    id: str
    region: RegionKind
    source: dict  # {"kind": "generated", "path": ...} | {"kind": "catalog", "category": ..., "index": ...}
    center: tuple[float, float]
    scale: float
    z_order: int

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "region": self.region.value,
            "source": dict(self.source),
            "center": [float(self.center[0]), float(self.center[1])],
            "scale": float(self.scale),
            "z_order": int(self.z_order),
        }


@dataclass(frozen=True)
class CompositionScene:
    canvas_size: tuple[int, int]
    layout: FaceLayout
    components: tuple[SceneComponent, ...]
    style: dict = field(default_factory=dict)

    def __post_init__(self):
        check_scene(self, complete=False)

    def component(self, component_id: str) -> SceneComponent | None:
        for c in self.components:
            if c.id == component_id:
                return c
        return None

    def with_component(self, comp: SceneComponent) -> "CompositionScene":
        comps = tuple(comp if c.id == comp.id else c for c in self.components)
        return replace(self, components=comps)


def check_scene(scene: CompositionScene, complete: bool = True) -> None:
    """Raise ParseError on invariant violations.

    Always: positive scales, unique ids, totally ordered z. With
    complete=True (documents, service state): exactly one component per
    singleton region and exactly two eye components.
    """
    ids = [c.id for c in scene.components]
    if len(set(ids)) != len(ids):
        raise ParseError(f"component ids must be unique, got {ids}")
    zs = [c.z_order for c in scene.components]
    if len(set(zs)) != len(zs) or Z_FACE_SHAPE in zs:
        raise ParseError("z_order must be a total ordering (face shape occupies z 10)")
    for c in scene.components:
        if not c.scale > 0:
            raise ParseError(f"component {c.id!r} violates: scale > 0")
        kind = c.source.get("kind")
        if kind not in ("generated", "catalog"):
            raise ParseError(f"component {c.id!r}: unknown source kind {kind!r}")
        if kind == "generated" and not isinstance(c.source.get("path"), str):
            raise ParseError(f"component {c.id!r}: generated source needs a path")
        if kind == "catalog":
            if c.source.get("category") not in ("ears", "bodies"):
                raise ParseError(f"component {c.id!r}: catalog category must be ears or bodies")
            if not isinstance(c.source.get("index"), int):
                raise ParseError(f"component {c.id!r}: catalog source needs an integer index")
    if complete:
        per_region: dict[RegionKind, int] = {}
        for c in scene.components:
            per_region[c.region] = per_region.get(c.region, 0) + 1
        for region in SINGLETON_REGIONS:
            if per_region.get(region, 0) != 1:
                raise ParseError(f"scene needs exactly one {region.value} component")
        eyes = per_region.get(RegionKind.EYE_LEFT, 0) + per_region.get(RegionKind.EYE_RIGHT, 0)
        if eyes != 2:
            raise ParseError(f"scene needs exactly two eye components, got {eyes}")


# --- document form ----------------------------------------------------------

def _layout_to_dict(layout: FaceLayout) -> dict:
    return {
        "canvas_size": [int(layout.canvas_size[0]), int(layout.canvas_size[1])],
        "cheek_points": [[float(x), float(y)] for x, y in layout.cheek_points],
        "cheek_box": [float(v) for v in layout.cheek_box],
        "forehead_top": float(layout.forehead_top),
        "forehead_ratio": float(layout.forehead_ratio),
        "region_centers": {r.value: [float(c[0]), float(c[1])]
                           for r, c in layout.region_centers.items()},
        "region_widths": {r.value: float(w) for r, w in layout.region_widths.items()},
    }


def _layout_from_dict(d: dict) -> FaceLayout:
    try:
        return FaceLayout(
            canvas_size=(int(d["canvas_size"][0]), int(d["canvas_size"][1])),
            cheek_points=np.asarray(d["cheek_points"], dtype=np.float64),
            cheek_box=tuple(float(v) for v in d["cheek_box"]),
            forehead_top=float(d["forehead_top"]),
            forehead_ratio=float(d["forehead_ratio"]),
            region_centers={RegionKind(k): (float(v[0]), float(v[1]))
                            for k, v in d["region_centers"].items()},
            region_widths={RegionKind(k): float(v) for k, v in d["region_widths"].items()},
        )
    except KeyError as e:
        raise ParseError(f"layout: missing field {e.args[0]!r}") from None


def scene_to_dict(scene: CompositionScene) -> dict:
    return {
        "schema_version": SCENE_SCHEMA_VERSION,
        "canvas_size": [int(scene.canvas_size[0]), int(scene.canvas_size[1])],
        "style": dict(scene.style),
        "layout": _layout_to_dict(scene.layout),
        "components": [c.to_dict() for c in scene.components],
    }


def serialize_scene(scene: CompositionScene) -> str:
    """Canonical document text for a scene."""
    check_scene(scene, complete=True)
    return json.dumps(scene_to_dict(scene), sort_keys=True, indent=2) + "\n"


def _component_from_dict(d: dict, pos: int) -> SceneComponent:
    for key in ("id", "region", "source", "center", "scale", "z_order"):
        if key not in d:
            raise ParseError(f"component[{pos}]: missing field {key!r}")
    try:
        region = RegionKind(d["region"])
    except ValueError:
        raise ParseError(f"component[{pos}]: unknown region {d['region']!r}") from None
    return SceneComponent(
        id=str(d["id"]),
        region=region,
        source=dict(d["source"]),
        center=(float(d["center"][0]), float(d["center"][1])),
        scale=float(d["scale"]),
        z_order=int(d["z_order"]),
    )


def parse_scene(doc: str) -> CompositionScene:
    """Parse and validate a scene document."""
    try:
        data = json.loads(doc)
    except json.JSONDecodeError as e:
        raise ParseError(f"not valid JSON: line {e.lineno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise ParseError("scene document must be a JSON object")
    if data.get("schema_version") != SCENE_SCHEMA_VERSION:
        raise ParseError(
            f"missing or unsupported field 'schema_version': {data.get('schema_version')!r}"
        )
    for key in ("canvas_size", "layout", "components"):
        if key not in data:
            raise ParseError(f"missing field {key!r}")
    comps = tuple(_component_from_dict(c, i) for i, c in enumerate(data["components"]))
    scene = CompositionScene(
        canvas_size=(int(data["canvas_size"][0]), int(data["canvas_size"][1])),
        layout=_layout_from_dict(data["layout"]),
        components=comps,
        style=dict(data.get("style", {})),
    )
    check_scene(scene, complete=True)
    return scene


def scenes_equal(a: CompositionScene, b: CompositionScene) -> bool:
    return scene_to_dict(a) == scene_to_dict(b)
