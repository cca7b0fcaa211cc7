"""End-to-end orchestration: detections + image in, container out, and
the reverse.

Encode order: optional global resize (detections rescaled
conservatively), confidence filter, padding, hull grouping, grid
cover, rectangulation, per-group scaling, bin packing, frame
composition, codec.  All coordinates in the container refer to the
(possibly globally resized) encode-space image, whose dimensions are
stored as orig_w/orig_h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import codec as codec_mod
from .container import (
    CODEC_EXTERNAL,
    CODEC_LOSSLESS,
    CODEC_LOSSY,
    RegionRecord,
    RoipContainer,
    serialize,
)
from .frame import (
    compose_packed_frame,
    rgb_to_yuv420,
    roi_cover_mask,
    unpack_frame,
    yuv420_to_image,
)
from .geometry import extract_rect_groups, pad_region
from .metrics import bpp, psnr
from .packing import Bin, PackResult, choose_bin
from .regions import DetectedRegion, RegionSet
from .scaling import ScaledRect, ScalePolicy, assign_scale, global_resize

CODEC_NAMES = {"lossless": CODEC_LOSSLESS, "lossy": CODEC_LOSSY, "external": CODEC_EXTERNAL}


class ConfigError(ValueError):
    """Bad configuration (usage error, not a runtime failure)."""


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    pad: int = 15
    grid: int = 16
    min_confidence: float = 0.0
    scale_policy: ScalePolicy = field(default_factory=ScalePolicy.identity)
    codec: str = "lossy"
    qp: int = 32
    global_size: int = 100
    single_hull: bool = False
    external: "codec_mod.ExternalCodecSpec | None" = None

    def __post_init__(self):
        if self.pad < 0:
            raise ConfigError(f"pad must be >= 0, got {self.pad}")
        if self.grid < 8 or self.grid % 2:
            raise ConfigError(f"grid must be even and >= 8, got {self.grid}")
        if self.global_size not in (100, 75, 50, 25):
            raise ConfigError(f"global_size must be 100/75/50/25, got {self.global_size}")
        if self.codec not in CODEC_NAMES:
            raise ConfigError(f"codec must be one of {sorted(CODEC_NAMES)}, got {self.codec!r}")
        if not codec_mod.QP_MIN <= self.qp <= codec_mod.QP_MAX:
            raise ConfigError(f"qp {self.qp} outside [{codec_mod.QP_MIN}, {codec_mod.QP_MAX}]")
        if self.codec == "external" and self.external is None:
            raise ConfigError("external codec selected but no command templates given")


def _rescale_regions(region_set: RegionSet, new_w: int, new_h: int) -> RegionSet:
    """Map detections into resized-image coordinates, widening outward."""
    sx = new_w / region_set.image_w
    sy = new_h / region_set.image_h
    out = []
    for r in region_set.regions:
        x0 = max(0, math.floor(r.bbox.x * sx))
        y0 = max(0, math.floor(r.bbox.y * sy))
        x1 = min(new_w, math.ceil(r.bbox.x2 * sx))
        y1 = min(new_h, math.ceil(r.bbox.y2 * sy))
        if x1 - x0 >= 1 and y1 - y0 >= 1:
            out.append(
                DetectedRegion(
                    type(r.bbox)(x0, y0, x1 - x0, y1 - y0), r.class_id, r.confidence
                )
            )
    return RegionSet(region_set.image_id, new_w, new_h, tuple(out))


def _encode_payload(packed: np.ndarray, config: PipelineConfig) -> tuple[int, int, bytes]:
    """Returns (codec_id, qp byte, payload) for the packed frame."""
    if config.codec == "lossless":
        return CODEC_LOSSLESS, 0, codec_mod.encode_lossless(packed)
    frame = rgb_to_yuv420(packed)
    if config.codec == "lossy":
        return CODEC_LOSSY, config.qp, codec_mod.encode_lossy(frame, config.qp)
    payload = codec_mod.run_external(config.external, frame, config.qp)
    return CODEC_EXTERNAL, config.qp, payload


def plan_layout(
    region_set: RegionSet, config: PipelineConfig
) -> tuple[list[ScaledRect], PackResult]:
    """Geometry half of the encoder: regions to scaled rects and a layout."""
    w, h = region_set.image_w, region_set.image_h
    kept = [r for r in region_set.regions if r.confidence >= config.min_confidence]
    padded = [pad_region(r.bbox, config.pad, w, h) for r in kept]
    groups = extract_rect_groups(padded, config.grid, w, h, config.single_hull)

    kept_set = RegionSet(region_set.image_id, w, h, tuple(kept))
    scaled: list[ScaledRect] = []
    for group in groups:
        factor = assign_scale(group, kept_set, config.scale_policy)
        scaled.extend(ScaledRect(rect, factor) for rect in group.rects)

    if not scaled:  # nothing survives filtering: one empty grid cell
        empty = PackResult(Bin(config.grid, config.grid), (), config.grid**2)
        return [], empty
    layout = choose_bin([(sr.dst_w, sr.dst_h) for sr in scaled], config.grid)
    return scaled, layout


def prepare_inputs(
    image: np.ndarray, region_set: RegionSet, config: PipelineConfig
) -> tuple[np.ndarray, RegionSet]:
    """Check dims and apply the global resize; encode-space coordinates
    from here on."""
    h, w = image.shape[:2]
    if (region_set.image_w, region_set.image_h) != (w, h):
        raise PipelineError(
            f"detections are for {region_set.image_w}x{region_set.image_h} "
            f"but the image is {w}x{h}"
        )
    if config.global_size != 100:
        image = global_resize(image, config.global_size)
        region_set = _rescale_regions(region_set, image.shape[1], image.shape[0])
    return image, region_set


def _grid_extend(image: np.ndarray, grid: int) -> np.ndarray:
    """Black-pad bottom/right so grid cells never overhang the array."""
    h, w = image.shape[:2]
    eh = (-h) % grid
    ew = (-w) % grid
    if not (eh or ew):
        return image
    widths = ((0, eh), (0, ew)) + ((0, 0),) * (image.ndim - 2)
    return np.pad(image, widths)


def encode_image(
    image: np.ndarray, region_set: RegionSet, config: PipelineConfig
) -> RoipContainer:
    image, region_set = prepare_inputs(image, region_set, config)
    h, w = image.shape[:2]

    scaled, layout = plan_layout(region_set, config)
    if scaled:
        packed = compose_packed_frame(_grid_extend(image, config.grid), layout, scaled)
    else:
        shape = (layout.bin.h, layout.bin.w) + (() if image.ndim == 2 else (image.shape[2],))
        packed = np.zeros(shape, dtype=np.uint8)

    codec_id, qp, payload = _encode_payload(packed, config)
    records = tuple(
        RegionRecord(
            src_x=scaled[p.rect_id].src.x,
            src_y=scaled[p.rect_id].src.y,
            src_w=scaled[p.rect_id].src.w,
            src_h=scaled[p.rect_id].src.h,
            dst_x=p.x,
            dst_y=p.y,
            dst_w=scaled[p.rect_id].dst_w,
            dst_h=scaled[p.rect_id].dst_h,
        )
        for p in layout.placements
    )
    return RoipContainer(
        orig_w=w,
        orig_h=h,
        bin_w=layout.bin.w,
        bin_h=layout.bin.h,
        pad=config.pad,
        grid=config.grid,
        grayscale=image.ndim == 2,
        records=records,
        codec_id=codec_id,
        qp=qp,
        payload=payload,
    )


def decode_packed_frame(
    container: RoipContainer, external: "codec_mod.ExternalCodecSpec | None" = None
) -> np.ndarray:
    """Decode just the packed frame (bin-sized image)."""
    channels = 1 if container.grayscale else 3
    if container.codec_id == CODEC_LOSSLESS:
        return codec_mod.decode_lossless_image(
            container.payload, container.bin_w, container.bin_h, channels
        )
    if container.codec_id == CODEC_LOSSY:
        frame = codec_mod.decode_lossy(container.payload, container.bin_w, container.bin_h)
    else:
        if external is None:
            raise PipelineError("container uses an external codec; pass its command spec")
        frame = codec_mod.decode_external(
            external, container.payload, container.bin_w, container.bin_h
        )
    return yuv420_to_image(frame, grayscale=container.grayscale)


def decode_container(
    container: RoipContainer, external: "codec_mod.ExternalCodecSpec | None" = None
) -> np.ndarray:
    packed = decode_packed_frame(container, external)
    return unpack_frame(packed, container.records, container.orig_w, container.orig_h)


def roundtrip_report(
    image: np.ndarray, region_set: RegionSet, config: PipelineConfig
) -> dict:
    """Encode + decode in memory and summarize fidelity and size."""
    container = encode_image(image, region_set, config)
    blob = serialize(container)
    recon = decode_container(container, config.external)

    image, _ = prepare_inputs(image, region_set, config)
    mask = roi_cover_mask(container.records, container.orig_w, container.orig_h)
    if not mask.any():
        quality = "empty"
    elif np.array_equal(image[mask], recon[mask]):
        quality = "exact"
    else:
        quality = f"{psnr(image, recon, mask):.2f} dB"

    orig_area = container.orig_w * container.orig_h
    return {
        "codec": config.codec,
        "qp": config.qp if config.codec != "lossless" else "-",
        "regions": container.region_count,
        "bin": f"{container.bin_w}x{container.bin_h}",
        "roi_quality": quality,
        "container_bytes": len(blob),
        "bpp": bpp(len(blob), container.orig_w, container.orig_h),
        "compression_ratio": image.nbytes / len(blob),
        "packed_area_ratio": (container.bin_w * container.bin_h) / orig_area,
    }
