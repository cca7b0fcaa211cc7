"""Numba-accelerated twins of the kernels in ``np_impl``.

Loop-level implementations of the same functions; compiled lazily on
first call and cached on disk (``cache=True``).
"""

import numpy as np
from numba import njit

from .np_impl import BLOCK, EOB, dct_basis

_BASIS = dct_basis()
_BASIS_T = np.ascontiguousarray(_BASIS.T)


@njit(cache=True)
def _block_transform(plane, left, right):
    h, w = plane.shape
    out = np.empty((h, w), dtype=np.float64)
    tmp = np.empty((BLOCK, BLOCK), dtype=np.float64)
    for by in range(0, h, BLOCK):
        for bx in range(0, w, BLOCK):
            for i in range(BLOCK):
                for j in range(BLOCK):
                    acc = 0.0
                    for k in range(BLOCK):
                        acc += left[i, k] * plane[by + k, bx + j]
                    tmp[i, j] = acc
            for i in range(BLOCK):
                for j in range(BLOCK):
                    acc = 0.0
                    for k in range(BLOCK):
                        acc += tmp[i, k] * right[k, j]
                    out[by + i, bx + j] = acc
    return out


def blockwise_dct(plane: np.ndarray) -> np.ndarray:
    return _block_transform(plane, _BASIS, _BASIS_T)

def blockwise_idct(coefs: np.ndarray) -> np.ndarray:
    return _block_transform(coefs, _BASIS_T, _BASIS)


@njit(cache=True)
def resize_axis0_box(src, dst_h):
    src_h, w = src.shape
    if dst_h == src_h:
        return src.copy()
    out = np.zeros((dst_h, w), dtype=np.float64)
    scale = src_h / dst_h
    for i in range(dst_h):
        lo = i * scale
        hi = lo + scale
        j0 = int(np.floor(lo))
        j1 = min(int(np.ceil(hi)), src_h)
        for j in range(j0, j1):
            ov = min(hi, j + 1.0) - max(lo, float(j))
            if ov <= 0.0:
                continue
            wgt = ov / scale
            for c in range(w):
                out[i, c] += wgt * src[j, c]
    return out


@njit(cache=True)
def resize_axis0_bilinear(src, dst_h):
    src_h, w = src.shape
    if dst_h == src_h:
        return src.copy()
    out = np.empty((dst_h, w), dtype=np.float64)
    ratio = src_h / dst_h
    for i in range(dst_h):
        pos = (i + 0.5) * ratio - 0.5
        if pos < 0.0:
            pos = 0.0
        if pos > src_h - 1.0:
            pos = src_h - 1.0
        i0 = int(np.floor(pos))
        i1 = min(i0 + 1, src_h - 1)
        frac = pos - i0
        for c in range(w):
            out[i, c] = src[i0, c] * (1.0 - frac) + src[i1, c] * frac
    return out


@njit(cache=True)
def rle_encode(zz):
    nblocks = zz.shape[0]
    buf = np.empty(nblocks * (64 * 3 + 1), dtype=np.uint8)
    pos = 0
    for b in range(nblocks):
        run = 0
        wrote_last = False
        for idx in range(64):
            level = zz[b, idx]
            if level == 0:
                run += 1
                continue
            buf[pos] = run
            u = np.uint16(level)
            buf[pos + 1] = u & 0xFF
            buf[pos + 2] = u >> 8
            pos += 3
            run = 0
            wrote_last = idx == 63
        if not wrote_last:
            buf[pos] = EOB
            pos += 1
    return buf[:pos].copy()


@njit(cache=True)
def _rle_decode_inner(data, out):
    nblocks = out.shape[0]
    pos = 0
    n = data.shape[0]
    for b in range(nblocks):
        idx = 0
        while idx < 64:
            if pos >= n:
                return -1
            run = data[pos]
            if run == EOB:
                pos += 1
                break
            if pos + 3 > n:
                return -1
            level = int(data[pos + 1]) | (int(data[pos + 2]) << 8)
            if level >= 0x8000:
                level -= 0x10000
            pos += 3
            idx += run
            if idx > 63 or level == 0:
                return -1
            out[b, idx] = level
            idx += 1
    if pos != n:
        return -1
    return pos


def rle_decode(data: np.ndarray, nblocks: int) -> np.ndarray:
    out = np.zeros((nblocks, 64), dtype=np.int32)
    if _rle_decode_inner(data, out) < 0:
        raise ValueError("corrupt coefficient stream")
    return out
