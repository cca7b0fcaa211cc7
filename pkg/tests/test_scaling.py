import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roipack.geometry import RectGroup
from roipack.regions import BBox, DetectedRegion, RegionSet
from roipack.scaling import (
    ALLOWED_FACTORS,
    PolicyError,
    ScaledRect,
    ScaleFactor,
    ScalePolicy,
    ScaleRule,
    assign_scale,
    global_resize,
    parse_policy,
    resample,
    round_to_even,
)

# ------------------------------------------------------------ round_to_even


@pytest.mark.parametrize(
    "value,expected",
    [
        (365.0, 366),
        (25.0, 26),
        (366.0, 366),
        (364.9, 364),
        (1.0, 2),
        (0.3, 2),
        (0.0, 2),
        (2.999, 2),
        (3.0, 4),
    ],
)
def test_round_to_even(value, expected):
    assert round_to_even(value) == expected


@given(st.floats(min_value=0.0, max_value=10000.0))
def test_round_to_even_properties(v):
    r = round_to_even(v)
    assert r % 2 == 0 and r >= 2
    if v >= 2:
        assert abs(r - v) <= 1.0  # nearest even is at most 1 away


# ------------------------------------------------------------- scale factor


def test_allowed_factors_only():
    for num, den in ALLOWED_FACTORS:
        ScaleFactor(num, den)
    with pytest.raises(ValueError):
        ScaleFactor(2, 3)
    with pytest.raises(ValueError):
        ScaleFactor(2, 4)  # unreduced 1/2 spelled differently is rejected


def test_scale_factor_parse():
    assert ScaleFactor.parse("3/4") == ScaleFactor(3, 4)
    assert ScaleFactor.parse("1/1").value == 1.0
    assert ScaleFactor.parse("0.5") == ScaleFactor(1, 2)  # Fraction normalizes
    with pytest.raises(ValueError):
        ScaleFactor.parse("2/3")
    with pytest.raises(ValueError):
        ScaleFactor.parse("fast")


def test_scaled_rect_dst_dims():
    sr = ScaledRect(BBox(0, 0, 48, 32), ScaleFactor(1, 2))
    assert (sr.dst_w, sr.dst_h) == (24, 16)
    sr = ScaledRect(BBox(0, 0, 16, 16), ScaleFactor(3, 4))
    assert (sr.dst_w, sr.dst_h) == (12, 12)
    # Odd products go to the nearest even value, never below 2.
    sr = ScaledRect(BBox(0, 0, 2, 2), ScaleFactor(1, 4))
    assert (sr.dst_w, sr.dst_h) == (2, 2)


# ------------------------------------------------------------------ policy


POLICY_TEXT = """
# shrink big vehicles, keep everything else
when class in [0, 2] and area > 1000: scale = 1/2
when area > 5000: scale = 3/4
default: 1/1
"""


def _group(area_cells: int) -> RectGroup:
    side = 16
    rects = tuple(BBox(i * side, 0, side, side) for i in range(area_cells))
    return RectGroup(rects, tuple(range(1)))


def _regions(class_id: int) -> RegionSet:
    return RegionSet(
        image_id="synthetic",
        image_w=4096,
        image_h=4096,
        regions=(DetectedRegion(BBox(0, 0, 16, 16), class_id, 0.9),),
    )


def test_policy_first_match_wins():
    policy = parse_policy(POLICY_TEXT)
    assert len(policy.rules) == 2
    group = _group(8)  # area 2048
    assert assign_scale(group, _regions(0), policy) == ScaleFactor(1, 2)
    # class 1 fails rule 1; area 2048 fails rule 2 -> default
    assert assign_scale(group, _regions(1), policy) == ScaleFactor(1, 1)
    big = _group(24)  # area 6144: class 1 skips rule 1, hits rule 2
    assert assign_scale(big, _regions(1), policy) == ScaleFactor(3, 4)


def test_policy_group_classes_must_all_match():
    policy = parse_policy("when class in [0]: scale = 1/2\ndefault: 1/1")
    rs = RegionSet(
        image_id="synthetic",
        image_w=256,
        image_h=256,
        regions=(
            DetectedRegion(BBox(0, 0, 16, 16), 0, 0.9),
            DetectedRegion(BBox(8, 8, 16, 16), 3, 0.9),
        ),
    )
    group = RectGroup((BBox(0, 0, 32, 32),), (0, 1))
    assert assign_scale(group, rs, policy) == ScaleFactor(1, 1)
    solo = RectGroup((BBox(0, 0, 32, 32),), (0,))
    assert assign_scale(solo, rs, policy) == ScaleFactor(1, 2)


def test_policy_default_identity_when_no_rules():
    policy = ScalePolicy.identity()
    assert policy.default == ScaleFactor(1, 1)
    assert assign_scale(_group(100), _regions(2), policy) == ScaleFactor(1, 1)


@pytest.mark.parametrize(
    "text",
    [
        "when: scale = 1/2",  # no predicate at all
        "when area > 10: scale = 2/3",  # factor outside the allowed set
        "when class in [a]: scale = 1/2",  # bad class literal
        "scale = 1/2",  # missing when/default
        "default: 5",
    ],
)
def test_policy_parse_errors(text):
    with pytest.raises(PolicyError):
        parse_policy(text)


def test_policy_comments_and_blanks_ignored():
    policy = parse_policy("\n# only a comment\n\ndefault: 1/2\n")
    assert policy.rules == ()
    assert policy.default == ScaleFactor(1, 2)


# ---------------------------------------------------------------- resample


def test_resample_box_mean_example():
    patch = np.array([[10, 20], [30, 40]], dtype=np.uint8)
    out = resample(patch, 1, 1)
    assert out.shape == (1, 1)
    assert out[0, 0] == 25


def test_resample_identity():
    rng = np.random.default_rng(0)
    patch = rng.integers(0, 256, (24, 40), dtype=np.uint8)
    assert np.array_equal(resample(patch, 40, 24), patch)


def test_resample_preserves_constants():
    for value in (0, 77, 255):
        patch = np.full((32, 48), value, dtype=np.uint8)
        for dw, dh in ((24, 16), (12, 8), (48, 32), (96, 64)):
            out = resample(patch, dw, dh)
            assert out.shape == (dh, dw)
            assert np.all(out == value)


def test_resample_color_patch_shape():
    rng = np.random.default_rng(1)
    patch = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
    out = resample(patch, 8, 8)
    assert out.shape == (8, 8, 3) and out.dtype == np.uint8


def test_resample_downscale_preserves_mean():
    rng = np.random.default_rng(2)
    for _ in range(20):
        h = int(rng.integers(8, 64))
        w = int(rng.integers(8, 64))
        patch = rng.integers(0, 256, (h, w), dtype=np.uint8)
        out = resample(patch, max(2, w // 2), max(2, h // 2))
        # Box filtering is an average; global mean moves only by rounding.
        assert abs(float(out.mean()) - float(patch.mean())) <= 1.5


# ------------------------------------------------------------ global resize


def test_global_resize_identity():
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, (120, 90, 3), dtype=np.uint8)
    assert global_resize(img, 100) is img


@pytest.mark.parametrize(
    "shape,percent,expected",
    [
        ((730, 1024), 50, (366, 512)),
        ((100, 100), 25, (26, 26)),
        ((240, 320), 75, (180, 240)),
        ((7, 9), 50, (4, 4)),
    ],
)
def test_global_resize_shapes(shape, percent, expected):
    img = np.zeros(shape, dtype=np.uint8)
    out = global_resize(img, percent)
    assert out.shape == expected


def test_global_resize_rejects_other_percentages():
    img = np.zeros((16, 16), dtype=np.uint8)
    for bad in (0, 10, 60, 101, -50):
        with pytest.raises(ValueError):
            global_resize(img, bad)


def test_global_resize_constant_preserved():
    img = np.full((64, 64, 3), 200, dtype=np.uint8)
    for percent in (75, 50, 25):
        assert np.all(global_resize(img, percent) == 200)


# ------------------------------------------------- hypothesis sanity checks


@given(
    st.integers(2, 200),
    st.integers(2, 200),
    st.sampled_from([(1, 1), (3, 4), (1, 2), (1, 4)]),
)
@settings(max_examples=100)
def test_scaled_rect_rounding_error_bounded(w, h, factor):
    sr = ScaledRect(BBox(0, 0, w, h), ScaleFactor(*factor))
    num, den = factor
    assert abs(sr.dst_w - w * num / den) <= 1.0 or sr.dst_w == 2
    assert abs(sr.dst_h - h * num / den) <= 1.0 or sr.dst_h == 2
    assert sr.dst_w % 2 == 0 and sr.dst_h % 2 == 0


def test_rule_matches_requires_strict_area():
    rule = ScaleRule(ScaleFactor(1, 2), None, 100)
    assert not rule.matches(frozenset({0}), 100)
    assert rule.matches(frozenset({0}), 101)
