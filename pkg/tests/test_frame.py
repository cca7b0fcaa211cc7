import numpy as np
import pytest

from roipack.container import InvalidRecordError, RegionRecord
from roipack.frame import (
    Yuv420Frame,
    compose_packed_frame,
    rgb_to_yuv420,
    rgb_to_yuv444,
    roi_cover_mask,
    unpack_frame,
    yuv420_to_image,
    yuv444_to_rgb,
)
from roipack.packing import Bin, PackResult, Placement
from roipack.regions import BBox
from roipack.scaling import ScaledRect, ScaleFactor

# ---------------------------------------------------------------- colorspace


def _solid(r, g, b, h=8, w=8):
    img = np.zeros((h, w, 3), dtype=np.uint8)
    img[..., 0], img[..., 1], img[..., 2] = r, g, b
    return img


def test_bt601_black_anchor():
    y, u, v = rgb_to_yuv444(_solid(0, 0, 0))
    assert np.all(y == 16) and np.all(u == 128) and np.all(v == 128)


def test_bt601_white_anchor():
    y, u, v = rgb_to_yuv444(_solid(255, 255, 255))
    assert np.all(y == 235) and np.all(u == 128) and np.all(v == 128)


def test_bt601_primaries_are_limited_range():
    for rgb in ((255, 0, 0), (0, 255, 0), (0, 0, 255)):
        y, u, v = rgb_to_yuv444(_solid(*rgb))
        for plane in (y, u, v):
            assert plane.min() >= 16 and plane.max() <= 240


def test_gray_ramp_round_trip_max_error_2():
    ramp = np.repeat(np.arange(256, dtype=np.uint8)[None, :, None], 3, axis=2)
    ramp = np.repeat(ramp, 4, axis=0)
    back = yuv444_to_rgb(*rgb_to_yuv444(ramp))
    err = np.abs(back.astype(int) - ramp.astype(int)).max()
    assert err <= 2
    # Gray stays gray: all three channels equal after the round trip.
    assert np.all(back[..., 0] == back[..., 1])
    assert np.all(back[..., 1] == back[..., 2])


def test_rgb_round_trip_error_bound():
    rng = np.random.default_rng(42)
    img = rng.integers(0, 256, (64, 64, 3), dtype=np.uint8)
    back = yuv444_to_rgb(*rgb_to_yuv444(img))
    assert np.abs(back.astype(int) - img.astype(int)).max() <= 2


def test_yuv420_shapes_and_means():
    img = _solid(200, 100, 50, h=32, w=48)
    frame = rgb_to_yuv420(img)
    assert frame.y.shape == (32, 48)
    assert frame.u.shape == (16, 24) and frame.v.shape == (16, 24)
    # Constant input: subsampling must not change plane values.  The
    # 4:4:4 planes are float; round them the same way the frame does.
    y, u, v = (np.floor(p + 0.5) for p in rgb_to_yuv444(img))
    assert np.all(frame.y == y[0, 0])
    assert np.all(frame.u == u[0, 0]) and np.all(frame.v == v[0, 0])


def test_yuv420_rejects_odd_dims():
    with pytest.raises(ValueError):
        rgb_to_yuv420(np.zeros((7, 8, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        Yuv420Frame(
            np.zeros((8, 9), dtype=np.uint8),
            np.zeros((4, 4), dtype=np.uint8),
            np.zeros((4, 4), dtype=np.uint8),
        )


def test_yuv420_constant_round_trip_exact():
    img = _solid(137, 61, 200, h=16, w=16)
    back = yuv420_to_image(rgb_to_yuv420(img))
    assert np.abs(back.astype(int) - img.astype(int)).max() <= 2
    assert np.all(back == back[0, 0])


def test_grayscale_input_uses_neutral_chroma():
    gray = np.full((16, 16), 90, dtype=np.uint8)
    frame = rgb_to_yuv420(gray)
    assert np.all(frame.u == 128) and np.all(frame.v == 128)
    back = yuv420_to_image(frame, grayscale=True)
    assert back.ndim == 2
    assert np.abs(back.astype(int) - 90).max() <= 1


def test_planes_bytes_layout():
    frame = rgb_to_yuv420(_solid(10, 20, 30, h=4, w=4))
    raw = frame.planes_bytes()
    assert len(raw) == 16 + 4 + 4
    assert raw[:16] == frame.y.tobytes()


# ------------------------------------------------------------------ compose


def _layout_for(scaled, positions, bin_w, bin_h):
    placements = tuple(
        Placement(i, x, y) for i, (x, y) in enumerate(positions)
    )
    total = sum(sr.dst_w * sr.dst_h for sr in scaled)
    return PackResult(Bin(bin_w, bin_h), placements, bin_w * bin_h - total)


def test_compose_identity_crop():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (64, 96, 3), dtype=np.uint8)
    scaled = [ScaledRect(BBox(16, 16, 32, 32), ScaleFactor(1, 1))]
    layout = _layout_for(scaled, [(0, 0)], 32, 32)
    packed = compose_packed_frame(img, layout, scaled)
    assert np.array_equal(packed, img[16:48, 16:48])


def test_compose_uncovered_area_is_black():
    img = np.full((64, 64, 3), 255, dtype=np.uint8)
    scaled = [ScaledRect(BBox(0, 0, 16, 16), ScaleFactor(1, 1))]
    layout = _layout_for(scaled, [(0, 0)], 48, 32)
    packed = compose_packed_frame(img, layout, scaled)
    assert np.all(packed[:16, :16] == 255)
    assert np.all(packed[16:, :] == 0) and np.all(packed[:, 16:] == 0)


def test_compose_applies_scaling():
    img = np.full((32, 32), 80, dtype=np.uint8)
    scaled = [ScaledRect(BBox(0, 0, 32, 32), ScaleFactor(1, 2))]
    layout = _layout_for(scaled, [(0, 0)], 16, 16)
    packed = compose_packed_frame(img, layout, scaled)
    assert packed.shape == (16, 16)
    assert np.all(packed == 80)


# -------------------------------------------------------------------- unpack


def _record(sx, sy, sw, sh, dx, dy, dw=None, dh=None):
    return RegionRecord(sx, sy, sw, sh, dx, dy, dw or sw, dh or sh)


def test_unpack_restores_identity_layout():
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, (48, 48, 3), dtype=np.uint8)
    scaled = [ScaledRect(BBox(0, 16, 16, 16), ScaleFactor(1, 1)),
              ScaledRect(BBox(32, 0, 16, 32), ScaleFactor(1, 1))]
    layout = _layout_for(scaled, [(0, 0), (16, 0)], 32, 32)
    packed = compose_packed_frame(img, layout, scaled)
    records = [
        _record(0, 16, 16, 16, 0, 0),
        _record(32, 0, 16, 32, 16, 0),
    ]
    out = unpack_frame(packed, records, 48, 48)
    mask = roi_cover_mask(records, 48, 48)
    assert np.array_equal(out[mask], img[mask])
    assert np.all(out[~mask] == 0)


def test_unpack_zero_records_gives_black():
    packed = np.full((16, 16), 200, dtype=np.uint8)
    out = unpack_frame(packed, [], 32, 24)
    assert out.shape == (24, 32)
    assert np.all(out == 0)


def test_unpack_last_write_wins():
    packed = np.zeros((16, 32), dtype=np.uint8)
    packed[:, :16] = 10
    packed[:, 16:] = 99
    records = [
        _record(0, 0, 16, 16, 0, 0),   # writes 10
        _record(0, 0, 16, 16, 16, 0),  # same src rect, writes 99 after
    ]
    out = unpack_frame(packed, records, 16, 16)
    assert np.all(out == 99)


def test_unpack_rejects_record_outside_packed_frame():
    packed = np.zeros((16, 16), dtype=np.uint8)
    with pytest.raises(InvalidRecordError):
        unpack_frame(packed, [_record(0, 0, 16, 16, 8, 0)], 16, 16)


def test_unpack_scaled_region_upscales_back():
    img = np.full((32, 32), 120, dtype=np.uint8)
    scaled = [ScaledRect(BBox(0, 0, 32, 32), ScaleFactor(1, 2))]
    layout = _layout_for(scaled, [(0, 0)], 16, 16)
    packed = compose_packed_frame(img, layout, scaled)
    rec = _record(0, 0, 32, 32, 0, 0, 16, 16)
    out = unpack_frame(packed, [rec], 32, 32)
    assert out.shape == (32, 32)
    assert np.all(out == 120)


def test_unpack_grid_extension_overhang_cropped():
    # Source rect overhangs a 40-px-wide image out to the 48-px grid
    # line; the overhang exists only in the extended canvas and must be
    # cropped away.
    packed = np.full((16, 16), 55, dtype=np.uint8)
    rec = _record(32, 0, 16, 16, 0, 0)
    out = unpack_frame(packed, [rec], 40, 16)
    assert out.shape == (16, 40)
    assert np.all(out[:, 32:] == 55)
    assert np.all(out[:, :32] == 0)


def test_roi_cover_mask_clips_to_image():
    mask = roi_cover_mask([_record(32, 0, 16, 16, 0, 0)], 40, 16)
    assert mask.shape == (16, 40)
    assert mask[:, 32:].all() and not mask[:, :32].any()
