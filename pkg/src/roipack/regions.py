"""Detection-region types and loading of detector output files.

A detection document is a UTF-8 JSON object::

    {"image_id": "frame01", "width": 1024, "height": 730,
     "regions": [{"x": 10, "y": 20, "w": 50, "h": 40,
                  "class_id": 0, "confidence": 0.92}, ...]}

A batch file holds one such object per line (JSON Lines).  Loading
clamps every box into the image, drops boxes that fall fully outside,
and preserves input order.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Iterator

log = logging.getLogger(__name__)


class DetectionFormatError(ValueError):
    """Raised for unreadable or structurally malformed detection documents."""


@dataclass(frozen=True)
class BBox:
    """Axis-aligned pixel rectangle anchored at its top-left corner."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"bbox needs positive dimensions, got {self.w}x{self.h}")

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    def corners(self) -> tuple[tuple[int, int], ...]:
        """The four corner points, top-left first."""
        return (
            (self.x, self.y),
            (self.x2, self.y),
            (self.x, self.y2),
            (self.x2, self.y2),
        )

    def intersects(self, other: "BBox") -> bool:
        """Closed-rectangle intersection test; edge/corner touch counts."""
        return (
            self.x <= other.x2
            and other.x <= self.x2
            and self.y <= other.y2
            and other.y <= self.y2
        )


@dataclass(frozen=True)
class DetectedRegion:
    bbox: BBox
    class_id: int
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.class_id < 0:
            raise ValueError(f"negative class_id {self.class_id}")


@dataclass(frozen=True)
class RegionSet:
    """All regions detected in one image, in input-file order."""

    image_id: str
    image_w: int
    image_h: int
    regions: tuple[DetectedRegion, ...]


def clamp_bbox(bbox: BBox, image_w: int, image_h: int) -> BBox | None:
    """Intersect ``bbox`` with the image rectangle; None if empty."""
    x0 = max(bbox.x, 0)
    y0 = max(bbox.y, 0)
    x1 = min(bbox.x2, image_w)
    y1 = min(bbox.y2, image_h)
    if x1 <= x0 or y1 <= y0:
        return None
    return BBox(x0, y0, x1 - x0, y1 - y0)


def _region_from_record(rec: dict, image_w: int, image_h: int) -> DetectedRegion | None:
    """Build one region from a raw record; None when it must be skipped.

    Fractional coordinates are widened to the enclosing integer box
    (floor the origin, ceil the far edge) so object pixels are never cut.
    """
    try:
        x, y, w, h = float(rec["x"]), float(rec["y"]), float(rec["w"]), float(rec["h"])
    except (KeyError, TypeError, ValueError) as exc:
        log.warning("skipping region record with bad geometry fields: %s", exc)
        return None
    if w <= 0 or h <= 0 or not all(map(math.isfinite, (x, y, w, h))):
        log.warning("skipping region with non-positive size: w=%s h=%s", w, h)
        return None
    x0 = math.floor(x)
    y0 = math.floor(y)
    box = BBox(x0, y0, math.ceil(x + w) - x0, math.ceil(y + h) - y0)
    clamped = clamp_bbox(box, image_w, image_h)
    if clamped is None:
        log.debug("dropping region fully outside %dx%d image: %s", image_w, image_h, box)
        return None
    class_id = int(rec.get("class_id", 0))
    confidence = float(rec.get("confidence", 1.0))
    if class_id < 0 or not 0.0 <= confidence <= 1.0:
        log.warning(
            "skipping region with invalid attributes: class_id=%s confidence=%s",
            class_id,
            confidence,
        )
        return None
    return DetectedRegion(clamped, class_id, confidence)


def regions_from_document(doc: dict, image_w: int, image_h: int) -> RegionSet:
    """Interpret one parsed detection document against known image dims."""
    if not isinstance(doc, dict) or not isinstance(doc.get("regions"), list):
        raise DetectionFormatError("detection document needs a 'regions' array")
    doc_w, doc_h = doc.get("width"), doc.get("height")
    if doc_w is not None and doc_h is not None and (doc_w, doc_h) != (image_w, image_h):
        log.warning(
            "detection document says %sx%s but image is %dx%d; using image dims",
            doc_w,
            doc_h,
            image_w,
            image_h,
        )
    out = []
    for rec in doc["regions"]:
        if not isinstance(rec, dict):
            log.warning("skipping non-object region record: %r", rec)
            continue
        region = _region_from_record(rec, image_w, image_h)
        if region is not None:
            out.append(region)
    return RegionSet(str(doc.get("image_id", "")), image_w, image_h, tuple(out))


def load_detections(path, image_w: int, image_h: int) -> RegionSet:
    """Load the detection document at ``path`` for an image of known size.

    Accepts a single-document file or the first line of a batch file.
    Raises :class:`DetectionFormatError` when the document cannot be
    parsed; individually bad records are skipped with a warning.
    """
    if image_w < 1 or image_h < 1:
        raise ValueError("image dimensions must be >= 1")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DetectionFormatError(f"cannot read detections {path}: {exc}") from exc
    line = next((ln for ln in text.splitlines() if ln.strip()), "")
    try:
        doc = json.loads(line if line else text)
    except json.JSONDecodeError as exc:
        raise DetectionFormatError(f"malformed detection document {path}: {exc}") from exc
    return regions_from_document(doc, image_w, image_h)


def iter_detection_batch(path) -> Iterator[RegionSet]:
    """Yield a RegionSet per line of a batch file, clamped to its own dims."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DetectionFormatError(f"{path}:{lineno}: {exc}") from exc
            try:
                w, h = int(doc["width"]), int(doc["height"])
            except (KeyError, TypeError, ValueError) as exc:
                raise DetectionFormatError(
                    f"{path}:{lineno}: batch records need width/height"
                ) from exc
            yield regions_from_document(doc, w, h)


def save_detections(region_set: RegionSet, path) -> None:
    """Write a RegionSet back out in the detection document format."""
    doc = {
        "image_id": region_set.image_id,
        "width": region_set.image_w,
        "height": region_set.image_h,
        "regions": [
            {
                "x": r.bbox.x,
                "y": r.bbox.y,
                "w": r.bbox.w,
                "h": r.bbox.h,
                "class_id": r.class_id,
                "confidence": r.confidence,
            }
            for r in region_set.regions
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")
