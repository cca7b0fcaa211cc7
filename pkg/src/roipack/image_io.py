"""Image file I/O: PNG and PPM/PGM via Pillow, plus raw planar YUV
4:2:0 files for the external codec adapter (dimensions out-of-band).
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .frame import Yuv420Frame


def load_image(path) -> np.ndarray:
    """Read an 8-bit image as (h, w) grayscale or (h, w, 3) RGB."""
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            arr = np.asarray(im.convert("L"))
        else:
            arr = np.asarray(im.convert("RGB"))
    return np.ascontiguousarray(arr, dtype=np.uint8)


def save_image(path, image: np.ndarray) -> None:
    if image.ndim == 2:
        pil = Image.fromarray(image, mode="L")
    elif image.ndim == 3 and image.shape[2] == 3:
        pil = Image.fromarray(image, mode="RGB")
    else:
        raise ValueError(f"unsupported image shape {image.shape}")
    pil.save(path)


def write_yuv(path, frame: Yuv420Frame) -> None:
    """Raw planar 4:2:0, Y then U then V, no header."""
    with open(path, "wb") as fh:
        fh.write(frame.planes_bytes())


def read_yuv(path, width: int, height: int) -> Yuv420Frame:
    if width % 2 or height % 2:
        raise ValueError("YUV 4:2:0 dimensions must be even")
    expected = width * height * 3 // 2
    with open(path, "rb") as fh:
        raw = fh.read(expected + 1)
    if len(raw) != expected:
        raise ValueError(
            f"{path}: expected {expected} bytes for {width}x{height} 4:2:0, got {len(raw)}"
        )
    buf = np.frombuffer(raw, dtype=np.uint8)
    ysz = width * height
    csz = ysz // 4
    return Yuv420Frame(
        buf[:ysz].reshape(height, width).copy(),
        buf[ysz : ysz + csz].reshape(height // 2, width // 2).copy(),
        buf[ysz + csz :].reshape(height // 2, width // 2).copy(),
    )
