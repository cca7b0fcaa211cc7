"""Packed-frame composition, decode-side reassembly and colorspace
conversion.

Images are numpy uint8 arrays, (h, w) for grayscale or (h, w, 3) for
RGB.  YUV conversion is BT.601 limited range with 2x2 box-averaged
chroma subsampling; the inverse upsamples chroma by replication.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .container import InvalidRecordError, RegionRecord
from .packing import PackResult
from .scaling import ScaledRect, resample


@dataclass(frozen=True)
class Yuv420Frame:
    """Planar 4:2:0 frame; luma at full resolution, chroma halved."""

    y: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        h, w = self.y.shape
        if h % 2 or w % 2:
            raise ValueError(f"frame dimensions must be even, got {w}x{h}")
        if self.u.shape != (h // 2, w // 2) or self.v.shape != (h // 2, w // 2):
            raise ValueError("chroma planes must be half the luma resolution")

    @property
    def width(self) -> int:
        return self.y.shape[1]

    @property
    def height(self) -> int:
        return self.y.shape[0]

    def planes_bytes(self) -> bytes:
        return self.y.tobytes() + self.u.tobytes() + self.v.tobytes()


def _round_u8(a: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(a + 0.5), 0, 255).astype(np.uint8)


def _as_rgb_f64(image: np.ndarray) -> np.ndarray:
    if image.ndim == 2:
        return np.repeat(image[:, :, None].astype(np.float64), 3, axis=2)
    return image.astype(np.float64)


def rgb_to_yuv444(image: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full-resolution BT.601 limited-range conversion (float planes)."""
    rgb = _as_rgb_f64(image)
    r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    luma = 0.299 * r + 0.587 * g + 0.114 * b
    y = 16.0 + luma * (219.0 / 255.0)
    u = 128.0 + (224.0 / 255.0) * (b - luma) / 1.772
    v = 128.0 + (224.0 / 255.0) * (r - luma) / 1.402
    return y, u, v


def yuv444_to_rgb(y: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    luma = (y - 16.0) * (255.0 / 219.0)
    pb = (u - 128.0) * (255.0 / 224.0)
    pr = (v - 128.0) * (255.0 / 224.0)
    r = luma + 1.402 * pr
    b = luma + 1.772 * pb
    g = (luma - 0.299 * r - 0.114 * b) / 0.587
    return np.stack([_round_u8(r), _round_u8(g), _round_u8(b)], axis=2)


def rgb_to_yuv420(image: np.ndarray) -> Yuv420Frame:
    """Convert an RGB or grayscale image to 4:2:0 (even dims required).

    Grayscale maps straight onto limited-range luma with neutral
    chroma, so the chroma planes carry no signal to compress.
    """
    h, w = image.shape[:2]
    if h % 2 or w % 2:
        raise ValueError(f"image dimensions must be even for 4:2:0, got {w}x{h}")
    if image.ndim == 2:
        y = 16.0 + image.astype(np.float64) * (219.0 / 255.0)
        cdims = (h // 2, w // 2)
        return Yuv420Frame(
            _round_u8(y),
            np.full(cdims, 128, dtype=np.uint8),
            np.full(cdims, 128, dtype=np.uint8),
        )
    y, u, v = rgb_to_yuv444(image)
    u2 = u.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))
    v2 = v.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))
    return Yuv420Frame(_round_u8(y), _round_u8(u2), _round_u8(v2))


def yuv420_to_image(frame: Yuv420Frame, grayscale: bool = False) -> np.ndarray:
    """Back to RGB (or grayscale) with chroma upsampled by replication."""
    if grayscale:
        luma = (frame.y.astype(np.float64) - 16.0) * (255.0 / 219.0)
        return _round_u8(luma)
    u = np.repeat(np.repeat(frame.u, 2, axis=0), 2, axis=1).astype(np.float64)
    v = np.repeat(np.repeat(frame.v, 2, axis=0), 2, axis=1).astype(np.float64)
    return yuv444_to_rgb(frame.y.astype(np.float64), u, v)


def compose_packed_frame(
    image: np.ndarray, layout: PackResult, scaled: Sequence[ScaledRect]
) -> np.ndarray:
    """Build the packed frame: crop, scale and place every rectangle on
    a black canvas of bin size."""
    shape = (layout.bin.h, layout.bin.w)
    if image.ndim == 3:
        shape += (image.shape[2],)
    out = np.zeros(shape, dtype=np.uint8)
    for placement in layout.placements:
        sr = scaled[placement.rect_id]
        assert placement.x + sr.dst_w <= layout.bin.w
        assert placement.y + sr.dst_h <= layout.bin.h
        assert sr.src.x2 <= image.shape[1] and sr.src.y2 <= image.shape[0]
        patch = image[sr.src.y : sr.src.y2, sr.src.x : sr.src.x2]
        if (sr.dst_h, sr.dst_w) != patch.shape[:2]:
            patch = resample(patch, sr.dst_w, sr.dst_h)
        out[placement.y : placement.y + sr.dst_h, placement.x : placement.x + sr.dst_w] = patch
    return out


def unpack_frame(
    packed: np.ndarray, records: Sequence[RegionRecord], orig_w: int, orig_h: int
) -> np.ndarray:
    """Reassemble the original-size image from the packed frame.

    Regions are written in metadata order (later records overwrite
    earlier ones); everything not covered stays black.  Source rects
    may overhang the image by the grid-extension margin; the overhang
    is dropped.
    """
    ph, pw = packed.shape[:2]
    ext_w = max([orig_w] + [rec.src_x + rec.src_w for rec in records])
    ext_h = max([orig_h] + [rec.src_y + rec.src_h for rec in records])
    shape = (ext_h, ext_w)
    if packed.ndim == 3:
        shape += (packed.shape[2],)
    out = np.zeros(shape, dtype=np.uint8)
    for rec in records:
        if rec.dst_x + rec.dst_w > pw or rec.dst_y + rec.dst_h > ph:
            raise InvalidRecordError(
                f"region {rec.dst_w}x{rec.dst_h}@({rec.dst_x},{rec.dst_y}) "
                f"exceeds packed frame {pw}x{ph}"
            )
        patch = packed[rec.dst_y : rec.dst_y + rec.dst_h, rec.dst_x : rec.dst_x + rec.dst_w]
        if (rec.src_h, rec.src_w) != patch.shape[:2]:
            patch = resample(patch, rec.src_w, rec.src_h)
        out[rec.src_y : rec.src_y + rec.src_h, rec.src_x : rec.src_x + rec.src_w] = patch
    return out[:orig_h, :orig_w]


def roi_cover_mask(records: Sequence[RegionRecord], orig_w: int, orig_h: int) -> np.ndarray:
    """Boolean mask of original-image pixels covered by any region."""
    mask = np.zeros((orig_h, orig_w), dtype=bool)
    for rec in records:
        mask[rec.src_y : rec.src_y + rec.src_h, rec.src_x : rec.src_x + rec.src_w] = True
    return mask
