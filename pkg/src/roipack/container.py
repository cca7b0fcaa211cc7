"""The `.roip` container: a fixed little-endian binary layout carrying
image geometry, region metadata and the codec payload.

Layout (all integers little-endian):

    offset  size  field
    0       4     magic "ROIP"
    4       1     version (= 1)
    5       1     flags (bit 0: grayscale)
    6       4     orig_w        10      4     orig_h
    14      4     bin_w         18      4     bin_h
    22      2     pad           24      2     grid
    26      2     region_count
    28      32*n  records: src_x, src_y, src_w, src_h,
                           dst_x, dst_y, dst_w, dst_h (each u32)
    28+32n  1     codec_id (0 lossless, 1 lossy, 2 external)
    +1      1     qp
    +2      8     payload_len (u64)
    +10     *     payload

Total size = 28 + 32*region_count + 10 + payload_len.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

MAGIC = b"ROIP"
VERSION = 1
FLAG_GRAYSCALE = 0x01

CODEC_LOSSLESS = 0
CODEC_LOSSY = 1
CODEC_EXTERNAL = 2

_HEADER = struct.Struct("<4sBB4IHHH")
_RECORD = struct.Struct("<8I")
_TRAILER = struct.Struct("<BBQ")

HEADER_SIZE = _HEADER.size  # 28
RECORD_SIZE = _RECORD.size  # 32
TRAILER_SIZE = _TRAILER.size  # 10

_U32_MAX = 2**32 - 1
_U16_MAX = 2**16 - 1


class ContainerError(ValueError):
    """Base class for every container format violation."""


class BadMagicError(ContainerError):
    pass


class UnsupportedVersionError(ContainerError):
    pass


class TruncatedError(ContainerError):
    """Input ends before the declared structure does."""


class InvalidHeaderError(ContainerError):
    pass


class InvalidRecordError(ContainerError):
    """A region record violates its own invariants."""


class RecordOutOfBoundsError(InvalidRecordError):
    """A destination rect does not fit inside the bin."""


class OverlappingRecordsError(InvalidRecordError):
    """Two destination rect interiors overlap."""


@dataclass(frozen=True)
class RegionRecord:
    """Maps one packed-frame rect (dst) back to original coordinates (src)."""

    src_x: int
    src_y: int
    src_w: int
    src_h: int
    dst_x: int
    dst_y: int
    dst_w: int
    dst_h: int

    def astuple(self) -> tuple[int, ...]:
        return (
            self.src_x, self.src_y, self.src_w, self.src_h,
            self.dst_x, self.dst_y, self.dst_w, self.dst_h,
        )


@dataclass(frozen=True)
class RoipContainer:
    orig_w: int
    orig_h: int
    bin_w: int
    bin_h: int
    pad: int
    grid: int
    grayscale: bool
    records: tuple[RegionRecord, ...]
    codec_id: int
    qp: int
    payload: bytes = field(repr=False)

    @property
    def region_count(self) -> int:
        return len(self.records)

    def serialized_size(self) -> int:
        return HEADER_SIZE + RECORD_SIZE * len(self.records) + TRAILER_SIZE + len(self.payload)


def _validate_record(rec: RegionRecord, idx: int, container: RoipContainer) -> None:
    for name in ("src_x", "src_y", "src_w", "src_h", "dst_x", "dst_y", "dst_w", "dst_h"):
        v = getattr(rec, name)
        if not 0 <= v <= _U32_MAX:
            raise InvalidRecordError(f"record {idx}: {name}={v} out of u32 range")
    if rec.src_w < 1 or rec.src_h < 1 or rec.dst_w < 1 or rec.dst_h < 1:
        raise InvalidRecordError(f"record {idx}: zero-size rect")
    if rec.dst_x + rec.dst_w > container.bin_w or rec.dst_y + rec.dst_h > container.bin_h:
        raise RecordOutOfBoundsError(
            f"record {idx}: dst {rec.dst_w}x{rec.dst_h}@({rec.dst_x},{rec.dst_y}) "
            f"outside bin {container.bin_w}x{container.bin_h}"
        )
    # Grid cells may overhang the image edge up to the next grid
    # multiple, so src rects are bounded by the grid-extended image.
    g = max(container.grid, 1)
    ext_w = -(-container.orig_w // g) * g
    ext_h = -(-container.orig_h // g) * g
    if rec.src_x + rec.src_w > ext_w or rec.src_y + rec.src_h > ext_h:
        raise InvalidRecordError(
            f"record {idx}: src rect outside grid-extended image {ext_w}x{ext_h}"
        )
    # Same scale on both axes up to the +-1 even-rounding slack:
    # |dst_w/src_w - dst_h/src_h| <= 1/src_w + 1/src_h, cross-multiplied.
    if abs(rec.dst_w * rec.src_h - rec.dst_h * rec.src_w) > rec.src_w + rec.src_h:
        raise InvalidRecordError(f"record {idx}: inconsistent x/y scale")


def validate(container: RoipContainer) -> None:
    """Check every container invariant; raises a ContainerError subclass."""
    if container.orig_w < 1 or container.orig_h < 1:
        raise InvalidHeaderError("original dimensions must be positive")
    if container.bin_w < 1 or container.bin_h < 1:
        raise InvalidHeaderError("bin dimensions must be positive")
    for name, limit in (("orig_w", _U32_MAX), ("orig_h", _U32_MAX),
                        ("bin_w", _U32_MAX), ("bin_h", _U32_MAX),
                        ("pad", _U16_MAX), ("grid", _U16_MAX)):
        if not 0 <= getattr(container, name) <= limit:
            raise InvalidHeaderError(f"{name} out of range")
    if container.codec_id not in (CODEC_LOSSLESS, CODEC_LOSSY, CODEC_EXTERNAL):
        raise InvalidHeaderError(f"unknown codec id {container.codec_id}")
    if not 0 <= container.qp <= 255:
        raise InvalidHeaderError(f"qp {container.qp} out of u8 range")
    if len(container.records) > _U16_MAX:
        raise InvalidHeaderError(f"too many regions ({len(container.records)} > {_U16_MAX})")

    for idx, rec in enumerate(container.records):
        _validate_record(rec, idx, container)

    # Pairwise-disjoint dst interiors; sort by x so most pairs skip early.
    order = sorted(range(len(container.records)),
                   key=lambda i: container.records[i].dst_x)
    for pos, i in enumerate(order):
        a = container.records[i]
        for j in order[pos + 1 :]:
            b = container.records[j]
            if b.dst_x >= a.dst_x + a.dst_w:
                break
            if a.dst_y < b.dst_y + b.dst_h and b.dst_y < a.dst_y + a.dst_h:
                raise OverlappingRecordsError(
                    f"records {min(i, j)} and {max(i, j)}: dst rects overlap"
                )


def serialize(container: RoipContainer) -> bytes:
    """Serialize to the exact byte layout; validates invariants first."""
    validate(container)
    flags = FLAG_GRAYSCALE if container.grayscale else 0
    parts = [
        _HEADER.pack(
            MAGIC, VERSION, flags,
            container.orig_w, container.orig_h,
            container.bin_w, container.bin_h,
            container.pad, container.grid, len(container.records),
        )
    ]
    for rec in container.records:
        parts.append(_RECORD.pack(*rec.astuple()))
    parts.append(_TRAILER.pack(container.codec_id, container.qp, len(container.payload)))
    parts.append(container.payload)
    return b"".join(parts)


def parse(data: bytes) -> RoipContainer:
    """Parse and validate a container from bytes.

    Total on arbitrary input: any malformed byte string raises a
    ContainerError subclass.  payload_len is checked against the bytes
    actually present before any slice is taken, so memory stays bounded
    by the input size.
    """
    if len(data) < 4:
        raise TruncatedError(f"only {len(data)} bytes, need at least a magic")
    if data[:4] != MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}")
    if len(data) < HEADER_SIZE:
        raise TruncatedError(f"header needs {HEADER_SIZE} bytes, got {len(data)}")
    (_, version, flags, orig_w, orig_h, bin_w, bin_h,
     pad, grid, region_count) = _HEADER.unpack_from(data, 0)
    if version != VERSION:
        raise UnsupportedVersionError(f"version {version}, expected {VERSION}")
    if flags & ~FLAG_GRAYSCALE:
        raise InvalidHeaderError(f"unknown flag bits 0x{flags:02x}")

    need = HEADER_SIZE + RECORD_SIZE * region_count + TRAILER_SIZE
    if len(data) < need:
        raise TruncatedError(
            f"{region_count} records need {need} bytes before payload, got {len(data)}"
        )
    records = tuple(
        RegionRecord(*_RECORD.unpack_from(data, HEADER_SIZE + RECORD_SIZE * i))
        for i in range(region_count)
    )
    codec_id, qp, payload_len = _TRAILER.unpack_from(data, HEADER_SIZE + RECORD_SIZE * region_count)
    if payload_len > len(data) - need:
        raise TruncatedError(
            f"declared payload of {payload_len} bytes, only {len(data) - need} present"
        )
    if payload_len < len(data) - need:
        raise ContainerError(f"{len(data) - need - payload_len} trailing bytes after payload")
    payload = data[need : need + payload_len]

    container = RoipContainer(
        orig_w=orig_w, orig_h=orig_h, bin_w=bin_w, bin_h=bin_h,
        pad=pad, grid=grid, grayscale=bool(flags & FLAG_GRAYSCALE),
        records=records, codec_id=codec_id, qp=qp, payload=payload,
    )
    validate(container)
    return container


def write_file(path, container: RoipContainer) -> int:
    data = serialize(container)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def read_file(path) -> RoipContainer:
    with open(path, "rb") as fh:
        return parse(fh.read())
