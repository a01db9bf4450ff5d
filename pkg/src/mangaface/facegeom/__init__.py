"""Landmark data model, geometric encodings, and region cropping."""

from .detect import MomentTemplateDetector, default_detector, detect_landmarks
from .encode import (
    LOC_REGIONS,
    FaceShape,
    GeoAttributes,
    LocVector,
    MeanGeo,
    SizeVector,
    cheek_box,
    crop_region,
    crop_window,
    decode_centers,
    decode_widths,
    encode_geometry,
    encode_location,
    encode_size,
    extract_shape,
    forehead_extent_ratio,
    mean_geo,
    region_center,
)
from .landmarks import (
    LandmarkSet,
    RegionKind,
    Schema,
    load_index_table,
    load_pair_table,
    midline_x,
    reflect_about_midline,
    region_indices,
    symmetrize,
)

__all__ = [
    "LOC_REGIONS",
    "FaceShape",
    "GeoAttributes",
    "LandmarkSet",
    "LocVector",
    "MeanGeo",
    "MomentTemplateDetector",
    "RegionKind",
    "Schema",
    "SizeVector",
    "cheek_box",
    "crop_region",
    "crop_window",
    "decode_centers",
    "decode_widths",
    "default_detector",
    "detect_landmarks",
    "encode_geometry",
    "encode_location",
    "encode_size",
    "extract_shape",
    "forehead_extent_ratio",
    "load_index_table",
    "load_pair_table",
    "mean_geo",
    "midline_x",
    "reflect_about_midline",
    "region_center",
    "region_indices",
    "symmetrize",
]
