"""Packed-frame codecs.

Three back ends share one byte-level contract (opaque payload bytes):

* lossless — zlib over the raw planes; exact round trip, used wherever
  bit-exact reconstruction matters.
* lossy — a deliberately small still-image codec (8x8 block DCT,
  uniform quantization, zigzag + run-length coding, zlib).  It exists
  to give the pipeline real rate-distortion behaviour without external
  tools; it does no prediction or adaptive entropy coding and is not a
  substitute for a production encoder.
* external — subprocess adapter that hands raw 4:2:0 YUV to a
  user-supplied encoder/decoder command pair (e.g. a VVC reference
  build).
"""

from __future__ import annotations

import os
import shlex
import shutil
import struct
import subprocess
import tempfile
import zlib
from dataclasses import dataclass

import numpy as np

from . import kernels
from .frame import Yuv420Frame

QP_MIN = 0
QP_MAX = 51
QP_LADDER = (22, 27, 32, 37, 42, 47)

# The DC coefficient keeps a fixed fine step so flat areas survive any
# QP: an orthonormal 8x8 DCT stores 8x the block mean in DC, hence a
# step of 8 reproduces integer-valued constant blocks exactly.
DC_STEP = 8.0

_LEN = struct.Struct("<I")


class CodecError(ValueError):
    pass


class ExternalCodecError(RuntimeError):
    """External command failed, timed out or produced no output."""


def qstep(qp: int) -> float:
    """Quantization step for a QP, 2**((qp - 4) / 6)."""
    if not QP_MIN <= qp <= QP_MAX:
        raise CodecError(f"qp {qp} outside [{QP_MIN}, {QP_MAX}]")
    return 2.0 ** ((qp - 4) / 6.0)


def _zigzag_order() -> np.ndarray:
    def key(flat: int):
        r, c = divmod(flat, kernels.BLOCK)
        d = r + c
        return (d, c if d % 2 == 0 else r)

    return np.array(sorted(range(kernels.BLOCK**2), key=key), dtype=np.intp)


ZIGZAG = _zigzag_order()


# --------------------------------------------------------------------
# lossless

def encode_lossless(frame) -> bytes:
    """zlib-compress the raw samples of an Image array or Yuv420Frame."""
    if isinstance(frame, Yuv420Frame):
        raw = frame.planes_bytes()
    else:
        raw = np.ascontiguousarray(frame, dtype=np.uint8).tobytes()
    return zlib.compress(raw, 9)


def _inflate(data: bytes, expected: int) -> bytes:
    try:
        raw = zlib.decompress(data)
    except zlib.error as exc:
        raise CodecError(f"corrupt lossless stream: {exc}") from exc
    if len(raw) != expected:
        raise CodecError(f"lossless stream holds {len(raw)} samples, expected {expected}")
    return raw


def decode_lossless_image(data: bytes, width: int, height: int, channels: int) -> np.ndarray:
    if channels not in (1, 3):
        raise ValueError(f"channels must be 1 or 3, got {channels}")
    raw = _inflate(data, width * height * channels)
    arr = np.frombuffer(raw, dtype=np.uint8)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return arr.reshape(shape).copy()


def decode_lossless_yuv(data: bytes, width: int, height: int) -> Yuv420Frame:
    if width % 2 or height % 2:
        raise CodecError("4:2:0 dimensions must be even")
    ysz = width * height
    csz = ysz // 4
    raw = _inflate(data, ysz + 2 * csz)
    buf = np.frombuffer(raw, dtype=np.uint8)
    return Yuv420Frame(
        buf[:ysz].reshape(height, width).copy(),
        buf[ysz : ysz + csz].reshape(height // 2, width // 2).copy(),
        buf[ysz + csz :].reshape(height // 2, width // 2).copy(),
    )


# --------------------------------------------------------------------
# lossy

def _pad8(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    ph = (-h) % kernels.BLOCK
    pw = (-w) % kernels.BLOCK
    if ph or pw:
        plane = np.pad(plane, ((0, ph), (0, pw)), mode="edge")
    return plane


def _steps(q_ac: float) -> np.ndarray:
    steps = np.full(kernels.BLOCK**2, q_ac)
    steps[0] = DC_STEP
    return steps


def _to_blocks(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    b = kernels.BLOCK
    return plane.reshape(h // b, b, w // b, b).transpose(0, 2, 1, 3).reshape(-1, b * b)


def _from_blocks(flat: np.ndarray, h: int, w: int) -> np.ndarray:
    b = kernels.BLOCK
    return flat.reshape(h // b, w // b, b, b).transpose(0, 2, 1, 3).reshape(h, w)


def _encode_plane(plane: np.ndarray, q_ac: float) -> bytes:
    padded = _pad8(plane).astype(np.float64)
    coefs = kernels.blockwise_dct(padded)
    zz = _to_blocks(coefs)[:, ZIGZAG]
    q = np.sign(zz) * np.floor(np.abs(zz) / _steps(q_ac) + 0.5)
    return kernels.rle_encode(q.astype(np.int32)).tobytes()


def _decode_plane(data: bytes, width: int, height: int, q_ac: float) -> np.ndarray:
    b = kernels.BLOCK
    pw = width + (-width) % b
    ph = height + (-height) % b
    nblocks = (ph // b) * (pw // b)
    try:
        q = kernels.rle_decode(np.frombuffer(data, dtype=np.uint8), nblocks)
    except ValueError as exc:
        raise CodecError(str(exc)) from exc
    zz = q.astype(np.float64) * _steps(q_ac)
    flat = np.empty_like(zz)
    flat[:, ZIGZAG] = zz
    pix = kernels.blockwise_idct(_from_blocks(flat, ph, pw))
    return np.clip(np.floor(pix + 0.5), 0, 255).astype(np.uint8)[:height, :width]


def _check_lossy_dims(width: int, height: int) -> None:
    if width % kernels.BLOCK or height % kernels.BLOCK:
        raise CodecError(
            f"lossy codec needs dimensions in multiples of {kernels.BLOCK}, "
            f"got {width}x{height}"
        )


def encode_lossy(frame: Yuv420Frame, qp: int) -> bytes:
    """DCT/quantize/RLE each plane, then zlib the joined streams.

    The QP is stored as the stream's first (pre-compression) byte so a
    payload decodes with nothing but its dimensions.
    """
    _check_lossy_dims(frame.width, frame.height)
    if not QP_MIN <= qp <= QP_MAX:
        raise CodecError(f"qp {qp} outside [{QP_MIN}, {QP_MAX}]")
    q_ac = qstep(qp)
    parts = [struct.pack("<B", qp)]
    for plane in (frame.y, frame.u, frame.v):
        stream = _encode_plane(plane, q_ac)
        parts.append(_LEN.pack(len(stream)))
        parts.append(stream)
    return zlib.compress(b"".join(parts), 9)


def decode_lossy(data: bytes, width: int, height: int) -> Yuv420Frame:
    _check_lossy_dims(width, height)
    try:
        raw = zlib.decompress(data)
    except zlib.error as exc:
        raise CodecError(f"corrupt lossy stream: {exc}") from exc
    if len(raw) < 1:
        raise CodecError("empty lossy stream")
    q_ac = qstep(raw[0])
    planes = []
    pos = 1
    for pw, ph in ((width, height), (width // 2, height // 2), (width // 2, height // 2)):
        if pos + _LEN.size > len(raw):
            raise CodecError("truncated lossy stream")
        (n,) = _LEN.unpack_from(raw, pos)
        pos += _LEN.size
        if pos + n > len(raw):
            raise CodecError("truncated lossy stream")
        planes.append(_decode_plane(raw[pos : pos + n], pw, ph, q_ac))
        pos += n
    if pos != len(raw):
        raise CodecError("trailing bytes in lossy stream")
    return Yuv420Frame(*planes)


# --------------------------------------------------------------------
# external codec adapter

_ENCODE_PLACEHOLDERS = ("{input_yuv}", "{width}", "{height}", "{qp}", "{output_bitstream}")
_DECODE_PLACEHOLDERS = ("{input_bitstream}", "{width}", "{height}", "{output_yuv}")


@dataclass(frozen=True)
class ExternalCodecSpec:
    """Command templates for an out-of-process encoder/decoder pair.

    Templates are shell-like strings; every placeholder must appear,
    e.g.::

        EncoderApp -i {input_yuv} -wdt {width} -hgt {height} \\
            -q {qp} -b {output_bitstream} -c intra.cfg
    """

    encode_cmd: str
    decode_cmd: str

    def __post_init__(self):
        for tpl, needed in (
            (self.encode_cmd, _ENCODE_PLACEHOLDERS),
            (self.decode_cmd, _DECODE_PLACEHOLDERS),
        ):
            missing = [p for p in needed if p not in tpl]
            if missing:
                raise CodecError(f"command template is missing {', '.join(missing)}")


def _run_command(template: str, subs: dict, timeout: float) -> None:
    argv = [token.format(**subs) for token in shlex.split(template)]
    try:
        proc = subprocess.run(argv, capture_output=True, timeout=timeout)
    except subprocess.TimeoutExpired as exc:
        raise ExternalCodecError(f"{argv[0]} timed out after {timeout:.0f} s") from exc
    except OSError as exc:
        raise ExternalCodecError(f"cannot run {argv[0]}: {exc}") from exc
    if proc.returncode != 0:
        tail = proc.stderr.decode("utf-8", "replace").strip()[-2000:]
        raise ExternalCodecError(f"{argv[0]} exited {proc.returncode}: {tail}")


def _tmpdir() -> str:
    return tempfile.mkdtemp(prefix="roipack-", dir=os.environ.get("ROIPACK_TMPDIR"))


def run_external(
    spec: ExternalCodecSpec, frame: Yuv420Frame, qp: int, timeout: float = 600.0
) -> bytes:
    """Encode the frame through the external command; returns the bitstream."""
    work = _tmpdir()
    try:
        input_yuv = os.path.join(work, "in.yuv")
        output_bs = os.path.join(work, "out.bin")
        with open(input_yuv, "wb") as fh:
            fh.write(frame.planes_bytes())
        _run_command(
            spec.encode_cmd,
            {
                "input_yuv": input_yuv,
                "width": frame.width,
                "height": frame.height,
                "qp": qp,
                "output_bitstream": output_bs,
            },
            timeout,
        )
        if not os.path.exists(output_bs):
            raise ExternalCodecError("encoder wrote no output bitstream")
        with open(output_bs, "rb") as fh:
            return fh.read()
    finally:
        shutil.rmtree(work, ignore_errors=True)


def decode_external(
    spec: ExternalCodecSpec, data: bytes, width: int, height: int, timeout: float = 600.0
) -> Yuv420Frame:
    work = _tmpdir()
    try:
        input_bs = os.path.join(work, "in.bin")
        output_yuv = os.path.join(work, "out.yuv")
        with open(input_bs, "wb") as fh:
            fh.write(data)
        _run_command(
            spec.decode_cmd,
            {
                "input_bitstream": input_bs,
                "width": width,
                "height": height,
                "output_yuv": output_yuv,
            },
            timeout,
        )
        if not os.path.exists(output_yuv):
            raise ExternalCodecError("decoder wrote no output frame")
        from .image_io import read_yuv

        try:
            return read_yuv(output_yuv, width, height)
        except ValueError as exc:
            raise ExternalCodecError(str(exc)) from exc
    finally:
        shutil.rmtree(work, ignore_errors=True)
