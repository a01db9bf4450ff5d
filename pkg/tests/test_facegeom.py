import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from mangaface.errors import DegenerateFace, EmptyDataset, InvalidSchema, NoFaceFound
from mangaface.facegeom import (
    LandmarkSet,
    RegionKind,
    Schema,
    cheek_box,
    crop_region,
    decode_centers,
    decode_widths,
    detect_landmarks,
    encode_location,
    encode_size,
    extract_shape,
    load_index_table,
    mean_geo,
    midline_x,
    reflect_about_midline,
    region_indices,
    symmetrize,
)
from mangaface.facegeom.detect import MomentTemplateDetector
from mangaface.facegeom.encode import LOC_REGIONS
from mangaface.imaging import GrayImage, blank, resize
from mangaface.synthfaces import (
    manga_landmarks,
    photo_landmarks,
    render_photo,
    sample_params,
    transform,
)

param_seeds = st.integers(0, 10_000)


def jittered_face(seed, size=256):
    return photo_landmarks(sample_params(np.random.default_rng(seed)), size=size)


# --- landmark model ---------------------------------------------------------

def test_point_count_must_match_schema():
    with pytest.raises(InvalidSchema):
        LandmarkSet(np.zeros((67, 2)) + 10, Schema.PHOTO68, (256, 256))


def test_points_must_be_inside_image():
    pts = photo_landmarks().points.copy()
    pts[0] = (-1.0, 10.0)
    with pytest.raises(InvalidSchema):
        LandmarkSet(pts, Schema.PHOTO68, (256, 256))


def test_index_tables_cover_regions():
    for schema in Schema:
        table = load_index_table(schema)
        assert len(table[RegionKind.CHEEK]) == 17
        for region in LOC_REGIONS:
            assert len(table[region]) > 0


# --- symmetrize ---------------------------------------------------------------

def test_symmetrize_fixed_point(template_face):
    sym = symmetrize(template_face)
    again = symmetrize(sym)
    assert np.abs(sym.points - again.points).max() < 1e-9
    # the canonical template is already symmetric
    assert np.abs(sym.points - template_face.points).max() < 1e-9


def test_symmetrize_reflection_average(template_face):
    m = midline_x(template_face)
    pts = template_face.points.copy()
    # 36/45 are a mirrored eye-corner pair; displace them asymmetrically
    pts[36] = (m - 2.0, 120.0)
    pts[45] = (m + 4.0, 120.0)
    l = LandmarkSet(pts, Schema.PHOTO68, template_face.image_size)
    sym = symmetrize(l)
    assert sym.points[36][0] == pytest.approx(midline_x(l) - 3.0, abs=1e-9)
    assert sym.points[45][0] == pytest.approx(midline_x(l) + 3.0, abs=1e-9)


@settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(param_seeds)
def test_symmetrize_idempotent(seed):
    l = jittered_face(seed)
    once = symmetrize(l)
    twice = symmetrize(once)
    assert np.abs(once.points - twice.points).max() < 1e-9
    assert once.schema is l.schema and len(once.points) == len(l.points)


@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(param_seeds)
def test_shape_reflection_invariant_after_symmetrize(seed):
    l = symmetrize(jittered_face(seed))
    mirrored = reflect_about_midline(l)
    a = extract_shape(l).points
    b = extract_shape(mirrored).points
    assert np.abs(a - b).max() < 1e-9


# --- location encoding ---------------------------------------------------------

def _loc_fixture(nose_x: float, nose_spread: float = 0.0):
    """68-point set whose cheek box is exactly [50, 150]^2 (a unit box scaled
    by 100), every feature inside it, and every nose point at y = 110."""
    base = transform(photo_landmarks(size=512), 0.3125, (20.0, -18.75))
    pts = base.points.copy()
    cheek_i = list(region_indices(Schema.PHOTO68, RegionKind.CHEEK))
    for k, i in enumerate(cheek_i):
        t = k / 16.0
        pts[i] = (50.0 + 100.0 * t, 50.0 + 100.0 * np.sin(np.pi * t))
    pts[cheek_i[0]] = (50.0, 50.0)
    pts[cheek_i[-1]] = (150.0, 50.0)
    pts[cheek_i[8]] = (100.0, 150.0)
    nose_i = list(region_indices(Schema.PHOTO68, RegionKind.NOSE))
    for k, i in enumerate(nose_i):
        dx = nose_spread * (k / (len(nose_i) - 1) - 0.5)
        pts[i] = (50.0 + nose_x + dx, 110.0)
    return LandmarkSet(pts, Schema.PHOTO68, (512, 512))


def test_encode_location_axis_distances():
    loc = encode_location(_loc_fixture(50.0))
    assert loc.region(RegionKind.NOSE) == pytest.approx([0.5, 0.5, 0.4], abs=1e-9)


def test_encode_location_boundary():
    loc = encode_location(_loc_fixture(0.0))
    assert loc.region(RegionKind.NOSE)[0] == pytest.approx(0.0, abs=1e-9)


def brute_force_location(l: LandmarkSet) -> np.ndarray:
    """Independent recomputation straight from the definitions."""
    idx = load_index_table(l.schema)
    cheek = l.points[list(idx[RegionKind.CHEEK])]
    left, right = cheek[:, 0].min(), cheek[:, 0].max()
    bottom = cheek[:, 1].max()
    w = right - left
    rows = []
    for region in LOC_REGIONS:
        sub = l.points[list(idx[region])]
        cx = sum(p[0] for p in sub) / len(sub)
        cy = sum(p[1] for p in sub) / len(sub)
        rows.append(((cx - left) / w, (right - cx) / w, (bottom - cy) / w))
    return np.asarray(rows)


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(param_seeds)
def test_encode_location_matches_bruteforce(seed):
    l = jittered_face(seed)
    assert np.abs(encode_location(l).values - brute_force_location(l)).max() < 1e-9


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(param_seeds, st.floats(0.5, 1.9), st.floats(0, 400))
def test_encode_location_scale_translation_invariant(seed, scale, offset):
    l = jittered_face(seed)
    moved = transform(l, scale, (offset, offset / 2.0), image_size=(2048, 2048))
    a = encode_location(l).values
    b = encode_location(moved).values
    assert np.abs(a - b).max() < 1e-9
    assert np.abs(encode_size(l).values - encode_size(moved).values).max() < 1e-9
    assert np.abs(extract_shape(l).points - extract_shape(moved).points).max() < 1e-9


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(param_seeds)
def test_loc_spans_sum_to_one(seed):
    v = encode_location(jittered_face(seed)).values
    assert np.abs(v[:, 0] + v[:, 1] - 1.0).max() < 1e-6


def test_degenerate_cheek_rejected():
    pts = photo_landmarks().points.copy()
    for i in region_indices(Schema.PHOTO68, RegionKind.CHEEK):
        pts[i] = (128.0, pts[i][1])
    l = LandmarkSet(pts, Schema.PHOTO68, (256, 256))
    with pytest.raises(DegenerateFace):
        cheek_box(l)


# --- size encoding ---------------------------------------------------------------

def test_encode_size_extent_arithmetic():
    pts = _loc_fixture(50.0, nose_spread=10.0).points.copy()
    eye_i = list(region_indices(Schema.PHOTO68, RegionKind.EYE_LEFT))
    for k, i in enumerate(eye_i):
        pts[i] = (60.0 + 30.0 * (k / (len(eye_i) - 1)), 90.0)
    l = LandmarkSet(pts, Schema.PHOTO68, (512, 512))
    assert encode_size(l).region(RegionKind.EYE_LEFT) == pytest.approx(0.30, abs=1e-9)


def test_encode_size_degenerate_region():
    pts = photo_landmarks().points.copy()
    for i in region_indices(Schema.PHOTO68, RegionKind.MOUTH):
        pts[i] = (128.0, 180.0)
    l = LandmarkSet(pts, Schema.PHOTO68, (256, 256))
    with pytest.raises(DegenerateFace):
        encode_size(l)


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(param_seeds)
def test_encode_size_matches_bruteforce(seed):
    l = jittered_face(seed)
    idx = load_index_table(l.schema)
    cheek = l.points[list(idx[RegionKind.CHEEK])]
    w = cheek[:, 0].max() - cheek[:, 0].min()
    expected = [(l.points[list(idx[r])][:, 0].max() - l.points[list(idx[r])][:, 0].min()) / w
                for r in LOC_REGIONS]
    assert np.abs(encode_size(l).values - np.asarray(expected)).max() < 1e-9


# --- face shape ---------------------------------------------------------------------

def test_extract_shape_invariants(template_face):
    shape = extract_shape(template_face)
    assert shape.points.shape == (17, 2)
    assert np.all(np.diff(shape.points[:, 0]) > 0)
    assert shape.points[:, 0].min() == pytest.approx(0.0, abs=1e-12)
    assert shape.points[:, 0].max() == pytest.approx(1.0, abs=1e-12)


def test_manga_cheek_indices_match_index_table_file():
    # oracle: parse the data file independently of the library loader
    from importlib import resources

    text = resources.files("mangaface.facegeom").joinpath("data", "manga106.idx").read_text()
    table = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        key, _, vals = line.partition(":")
        table[key.strip()] = [int(v) for v in vals.split(",")]
    m = manga_landmarks()
    sub = m.points[table["Cheek"]]
    assert np.array_equal(sub, m.region_points(RegionKind.CHEEK))
    assert extract_shape(m).points.shape == (17, 2)


# --- mean geometry --------------------------------------------------------------------

def test_mean_geo_singleton(template_face):
    mg = mean_geo([template_face])
    assert mg.sample_count == 1
    assert np.abs(mg.loc.values - encode_location(template_face).values).max() < 1e-12


def test_mean_geo_two_faces_average():
    a, b = jittered_face(1), jittered_face(2)
    mg = mean_geo([a, b])
    expected = (encode_location(a).values + encode_location(b).values) / 2.0
    assert np.abs(mg.loc.values - expected).max() < 1e-12


def test_mean_geo_matches_summation_oracle():
    faces = [jittered_face(s) for s in range(10)]
    mg = mean_geo(faces)
    acc_siz = np.zeros(4)
    acc_sha = np.zeros((17, 2))
    for f in faces:
        acc_siz += encode_size(f).values
        acc_sha += extract_shape(f).points
    assert np.abs(mg.siz.values - acc_siz / 10).max() < 1e-9
    assert np.abs(mg.shape.points - acc_sha / 10).max() < 1e-9


def test_mean_geo_empty_and_mixed():
    with pytest.raises(EmptyDataset):
        mean_geo([])
    with pytest.raises(EmptyDataset):
        mean_geo([photo_landmarks(), manga_landmarks()])


def test_manga_mean_geo_has_forehead_ratio():
    mg = mean_geo([manga_landmarks()])
    assert mg.forehead_ratio is not None and 0.1 < mg.forehead_ratio < 1.5
    assert mean_geo([photo_landmarks()]).forehead_ratio is None


# --- cropping ----------------------------------------------------------------------------

def _gradient_photo(size=512):
    g = np.linspace(0, 255, size, dtype=np.float32)
    return GrayImage(np.minimum(g[None, :], g[:, None]))


def test_crop_window_hand_computed():
    # region bbox [100,150]x[200,230], margin 0.2 -> side 60, window (95,185)
    pts = photo_landmarks(size=512).points.copy()
    eye_i = list(region_indices(Schema.PHOTO68, RegionKind.EYE_LEFT))
    for k, i in enumerate(eye_i):
        t = k / (len(eye_i) - 1)
        pts[i] = (100.0 + 50.0 * t, 200.0 + 30.0 * t)
    l = LandmarkSet(pts, Schema.PHOTO68, (512, 512))
    from mangaface.facegeom import crop_window

    assert crop_window(l, RegionKind.EYE_LEFT, 0.2) == (95, 185, 60)
    photo = _gradient_photo()
    got = crop_region(photo, l, RegionKind.EYE_LEFT, 0.2, 64)
    manual = resize(GrayImage(photo.pixels[185:245, 95:155].copy()), 64)
    assert np.array_equal(got.pixels, manual.pixels)


def test_crop_square_bbox_margin_zero():
    pts = photo_landmarks(size=512).points.copy()
    eye_i = list(region_indices(Schema.PHOTO68, RegionKind.EYE_LEFT))
    corners = [(100, 200), (160, 200), (100, 260), (160, 260)]
    for k, i in enumerate(eye_i):
        pts[i] = corners[k % 4]
    l = LandmarkSet(pts, Schema.PHOTO68, (512, 512))
    photo = _gradient_photo()
    got = crop_region(photo, l, RegionKind.EYE_LEFT, 0.0, 60)
    manual = resize(GrayImage(photo.pixels[200:260, 100:160].copy()), 60)
    assert np.array_equal(got.pixels, manual.pixels)


def test_crop_deterministic(template_face):
    photo = render_photo(template_face)
    a = crop_region(photo, template_face, RegionKind.MOUTH, 0.4, 64)
    b = crop_region(photo, template_face, RegionKind.MOUTH, 0.4, 64)
    assert np.array_equal(a.pixels, b.pixels)


def test_crop_clamps_at_image_edge():
    l = transform(photo_landmarks(size=256), 1.0, (-40.0, 0.0))
    photo = blank(256, 256, 128.0)
    crop = crop_region(photo, l, RegionKind.EYE_LEFT, 3.0, 64)
    assert crop.shape == (64, 64)


def test_crop_rejects_noncroppable_region(template_face):
    with pytest.raises(DegenerateFace):
        crop_region(render_photo(template_face), template_face, RegionKind.BODY)


# --- decode round trip -----------------------------------------------------------------------

@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(param_seeds)
def test_location_size_round_trip(seed):
    l = jittered_face(seed)
    box = cheek_box(l)
    loc = encode_location(l)
    siz = encode_size(l)
    centers = decode_centers(loc, box)
    widths = decode_widths(siz, box[2])
    left, top, w, h = box
    bottom = top + h
    re_loc = np.stack([(centers[:, 0] - left) / w,
                       (left + w - centers[:, 0]) / w,
                       (bottom - centers[:, 1]) / w], axis=1)
    assert np.abs(re_loc - loc.values).max() < 1e-9
    assert np.abs(widths / w - siz.values).max() < 1e-9


# --- detection -----------------------------------------------------------------------------

def test_detect_on_transformed_template_within_3px():
    for scale, offset in ((1.0, (0, 0)), (1.2, (-20, -10)), (0.8, (25, 20))):
        l = transform(photo_landmarks(), scale, offset)
        found = detect_landmarks(render_photo(l), MomentTemplateDetector())
        assert np.abs(found.points - l.points).max() < 3.0


def test_detect_blank_image_raises():
    with pytest.raises(NoFaceFound):
        detect_landmarks(blank(256, 256))


def test_detect_deterministic(template_face):
    photo = render_photo(template_face)
    a = detect_landmarks(photo)
    b = detect_landmarks(photo)
    assert np.array_equal(a.points, b.points)


def test_detect_rejects_wrong_point_count(template_face):
    photo = render_photo(template_face)
    with pytest.raises(InvalidSchema):
        detect_landmarks(photo, lambda img: np.full((70, 2), 10.0))
