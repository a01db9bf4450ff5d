"""Synthesis engine: face-shape curve, component placement, scene rendering."""

from .catalog import ComponentCatalog, load_catalog, write_default_catalog
from .compose import SceneResources, draw_face_shape, place_components, render
from .pchip import pchip_curve_points, pchip_derivatives, pchip_interpolate
from .scene import (
    CompositionScene,
    SceneComponent,
    check_scene,
    parse_scene,
    scene_to_dict,
    scenes_equal,
    serialize_scene,
)

__all__ = [
    "ComponentCatalog",
    "CompositionScene",
    "SceneComponent",
    "SceneResources",
    "check_scene",
    "draw_face_shape",
    "load_catalog",
    "parse_scene",
    "pchip_curve_points",
    "pchip_derivatives",
    "pchip_interpolate",
    "place_components",
    "render",
    "scene_to_dict",
    "scenes_equal",
    "serialize_scene",
    "write_default_catalog",
]
