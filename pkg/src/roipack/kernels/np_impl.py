"""Pure-numpy implementations of the hot pixel kernels.

This backend is always importable and serves as the reference for the
numba-accelerated twin in ``nb_impl``.  Both expose the same functions
with identical semantics; see ``kernels/__init__`` for selection.
"""

import numpy as np

BLOCK = 8

EOB = 255  # run byte marking "rest of block is zero"


def dct_basis() -> np.ndarray:
    """Orthonormal 8x8 DCT-II basis matrix B, so F = B @ X @ B.T."""
    n = np.arange(BLOCK)
    k = n[:, None]
    b = np.cos((2 * n[None, :] + 1) * k * np.pi / (2 * BLOCK))
    b *= np.sqrt(2.0 / BLOCK)
    b[0, :] = np.sqrt(1.0 / BLOCK)
    return b


_BASIS = dct_basis()


def blockwise_dct(plane: np.ndarray) -> np.ndarray:
    """Forward 8x8 block DCT of a float64 plane (dims multiples of 8)."""
    h, w = plane.shape
    blocks = plane.reshape(h // BLOCK, BLOCK, w // BLOCK, BLOCK).transpose(0, 2, 1, 3)
    out = _BASIS @ blocks @ _BASIS.T
    return out.transpose(0, 2, 1, 3).reshape(h, w)

def blockwise_idct(coefs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`blockwise_dct`."""
    h, w = coefs.shape
    blocks = coefs.reshape(h // BLOCK, BLOCK, w // BLOCK, BLOCK).transpose(0, 2, 1, 3)
    out = _BASIS.T @ blocks @ _BASIS
    return out.transpose(0, 2, 1, 3).reshape(h, w)


def resize_axis0_box(src: np.ndarray, dst_h: int) -> np.ndarray:
    """Area-average resampling along axis 0 (float64 in, float64 out).

    Each output row averages the source interval [i*s, (i+1)*s) with
    s = src_h/dst_h, weighting partially covered rows by their overlap.
    """
    src_h = src.shape[0]
    if dst_h == src_h:
        return src.copy()
    scale = src_h / dst_h
    lo = np.arange(dst_h) * scale
    hi = lo + scale
    j = np.arange(src_h)
    overlap = np.minimum(hi[:, None], j + 1.0) - np.maximum(lo[:, None], j)
    weights = np.clip(overlap, 0.0, None) / scale
    return weights @ src


def resize_axis0_bilinear(src: np.ndarray, dst_h: int) -> np.ndarray:
    """Bilinear (center-aligned) resampling along axis 0."""
    src_h = src.shape[0]
    if dst_h == src_h:
        return src.copy()
    pos = (np.arange(dst_h) + 0.5) * (src_h / dst_h) - 0.5
    pos = np.clip(pos, 0.0, src_h - 1.0)
    i0 = np.floor(pos).astype(np.int64)
    i1 = np.minimum(i0 + 1, src_h - 1)
    frac = (pos - i0)[:, None]
    return src[i0] * (1.0 - frac) + src[i1] * frac


def rle_encode(zz: np.ndarray) -> np.ndarray:
    """Run-length code zigzagged coefficient blocks into a byte stream.

    ``zz`` is int32 of shape (nblocks, 64).  Per block, each nonzero
    level is emitted as (run-of-zeros u8, level int16 LE); a lone EOB
    byte terminates blocks with trailing zeros.
    """
    parts = []
    for blk in zz:
        nz = np.flatnonzero(blk)
        if nz.size == 0:
            parts.append(np.array([EOB], dtype=np.uint8))
            continue
        runs = np.empty(nz.size, dtype=np.int64)
        runs[0] = nz[0]
        runs[1:] = np.diff(nz) - 1
        levels = blk[nz].astype(np.int16)
        triple = np.empty((nz.size, 3), dtype=np.uint8)
        triple[:, 0] = runs
        triple[:, 1] = levels.view(np.uint16) & 0xFF
        triple[:, 2] = levels.view(np.uint16) >> 8
        flat = triple.reshape(-1)
        if nz[-1] != 63:
            flat = np.concatenate([flat, np.array([EOB], dtype=np.uint8)])
        parts.append(flat)
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.uint8)


def rle_decode(data: np.ndarray, nblocks: int) -> np.ndarray:
    """Invert :func:`rle_encode`; raises ValueError on corrupt streams."""
    out = np.zeros((nblocks, 64), dtype=np.int32)
    pos = 0
    n = data.shape[0]
    for b in range(nblocks):
        idx = 0
        while idx < 64:
            if pos >= n:
                raise ValueError("truncated coefficient stream")
            run = int(data[pos])
            if run == EOB:
                pos += 1
                break
            if pos + 3 > n:
                raise ValueError("truncated coefficient stream")
            level = int(data[pos + 1]) | (int(data[pos + 2]) << 8)
            if level >= 0x8000:
                level -= 0x10000
            pos += 3
            idx += run
            if idx > 63 or level == 0:
                raise ValueError("invalid run/level in coefficient stream")
            out[b, idx] = level
            idx += 1
    if pos != n:
        raise ValueError("trailing bytes after coefficient stream")
    return out
