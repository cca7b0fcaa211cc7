"""Adaptive region down-scaling: factors, policies and resampling.

Scale factors are restricted to {1, 3/4, 1/2, 1/4} and applied per
region group so one merged region never mixes resolutions.  Scaled
dimensions are rounded to even integers (4:2:0 chroma needs even
dims).  Down-scaling uses a box (area-average) filter, up-scaling
bilinear interpolation; both are separable and deterministic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .geometry import RectGroup
from .regions import BBox, RegionSet

ALLOWED_FACTORS = ((1, 1), (3, 4), (1, 2), (1, 4))


class PolicyError(ValueError):
    """Raised for unparseable scale-policy documents."""


@dataclass(frozen=True)
class ScaleFactor:
    num: int
    den: int

    def __post_init__(self):
        if (self.num, self.den) not in ALLOWED_FACTORS:
            allowed = ", ".join(f"{n}/{d}" for n, d in ALLOWED_FACTORS)
            raise ValueError(f"scale {self.num}/{self.den} not in {{{allowed}}}")

    @property
    def value(self) -> float:
        return self.num / self.den

    def __str__(self) -> str:
        return f"{self.num}/{self.den}"

    @classmethod
    def parse(cls, text: str) -> "ScaleFactor":
        frac = Fraction(text.strip().replace(" ", ""))
        return cls(frac.numerator, frac.denominator)


IDENTITY = ScaleFactor(1, 1)


@dataclass(frozen=True)
class ScaleRule:
    """One policy rule: both predicates must hold for the rule to fire.

    ``classes`` of None means any class mix; otherwise every class in
    the group must belong to the set.  ``min_area`` of None means any
    area; otherwise the group's covered area must exceed it.
    """

    factor: ScaleFactor
    classes: frozenset[int] | None = None
    min_area: int | None = None

    def matches(self, group_classes: frozenset[int], area: int) -> bool:
        if self.classes is not None and not group_classes <= self.classes:
            return False
        if self.min_area is not None and not area > self.min_area:
            return False
        return True


@dataclass(frozen=True)
class ScalePolicy:
    rules: tuple[ScaleRule, ...] = ()
    default: ScaleFactor = IDENTITY

    @classmethod
    def identity(cls) -> "ScalePolicy":
        return cls()


_RULE_RE = re.compile(
    r"^when\s+(?:class\s+in\s+\[(?P<classes>[^\]]*)\]\s*)?"
    r"(?:and\s+)?(?:area\s*>\s*(?P<area>\d+)\s*)?"
    r":\s*scale\s*=\s*(?P<factor>\S+)$"
)
_DEFAULT_RE = re.compile(r"^default\s*:\s*(?P<factor>\S+)$")


def parse_policy(text: str) -> ScalePolicy:
    """Parse the key-value policy format::

        when class in [0, 2] and area > 100000: scale = 1/2
        when area > 400000: scale = 1/4
        default: 1/1
    """
    rules: list[ScaleRule] = []
    default = IDENTITY
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _DEFAULT_RE.match(line)
        if m:
            try:
                default = ScaleFactor.parse(m.group("factor"))
            except ValueError as exc:
                raise PolicyError(f"line {lineno}: {exc}") from exc
            continue
        m = _RULE_RE.match(line)
        if m is None:
            raise PolicyError(f"line {lineno}: cannot parse rule: {line!r}")
        if m.group("classes") is None and m.group("area") is None:
            raise PolicyError(f"line {lineno}: rule needs a class or area predicate")
        classes = None
        if m.group("classes") is not None:
            items = [s for s in m.group("classes").split(",") if s.strip()]
            try:
                classes = frozenset(int(s) for s in items)
            except ValueError as exc:
                raise PolicyError(f"line {lineno}: bad class list") from exc
        area = int(m.group("area")) if m.group("area") is not None else None
        try:
            factor = ScaleFactor.parse(m.group("factor"))
        except ValueError as exc:
            raise PolicyError(f"line {lineno}: {exc}") from exc
        rules.append(ScaleRule(factor, classes, area))
    return ScalePolicy(tuple(rules), default)


def load_policy(path) -> ScalePolicy:
    with open(path, encoding="utf-8") as fh:
        return parse_policy(fh.read())


def round_to_even(v: float) -> int:
    """Nearest even integer, halves rounding up; never below 2."""
    return max(2, 2 * int(np.floor(v / 2.0 + 0.5)))


@dataclass(frozen=True)
class ScaledRect:
    """A source rectangle plus the factor and destination size it gets
    in the packed frame."""

    src: BBox
    scale: ScaleFactor
    dst_w: int = field(init=False, default=0)
    dst_h: int = field(init=False, default=0)

    def __post_init__(self):
        object.__setattr__(self, "dst_w", round_to_even(self.src.w * self.scale.value))
        object.__setattr__(self, "dst_h", round_to_even(self.src.h * self.scale.value))


def assign_scale(group: RectGroup, regions: RegionSet, policy: ScalePolicy) -> ScaleFactor:
    """Pick one factor for a whole group (first matching rule wins)."""
    group_classes = frozenset(
        regions.regions[i].class_id for i in group.source_region_ids
    )
    area = group.area
    for rule in policy.rules:
        if rule.matches(group_classes, area):
            return rule.factor
    return policy.default


def _resample_axis0(plane: np.ndarray, dst: int) -> np.ndarray:
    src = plane.shape[0]
    if dst == src:
        return plane
    if dst < src:
        return kernels.resize_axis0_box(plane, dst)
    return kernels.resize_axis0_bilinear(plane, dst)


def resample(patch: np.ndarray, dst_w: int, dst_h: int) -> np.ndarray:
    """Resize an 8-bit patch to (dst_w, dst_h); box filter when an axis
    shrinks, bilinear when it grows.  Channel count is preserved."""
    if dst_w < 1 or dst_h < 1:
        raise ValueError("target dimensions must be >= 1")
    h, w = patch.shape[:2]
    flat = patch.reshape(h, -1).astype(np.float64)
    flat = _resample_axis0(flat, dst_h)
    cols = flat.reshape(dst_h, w, -1).transpose(1, 0, 2).reshape(w, -1)
    cols = _resample_axis0(cols, dst_w)
    nch = patch.shape[2] if patch.ndim == 3 else 1
    out = cols.reshape(dst_w, dst_h, nch).transpose(1, 0, 2)
    if patch.ndim == 2:
        out = out[:, :, 0]
    return np.clip(np.round(out), 0, 255).astype(np.uint8)


def global_resize(image: np.ndarray, percent: int) -> np.ndarray:
    """Scale the whole input to one of the supported size rungs.

    Dimensions are rounded to the nearest even integer (>= 2); 100 is a
    bit-exact identity.
    """
    if percent not in (100, 75, 50, 25):
        raise ValueError(f"unsupported size {percent}, pick one of 100/75/50/25")
    if percent == 100:
        return image
    h, w = image.shape[:2]
    return resample(image, round_to_even(w * percent / 100), round_to_even(h * percent / 100))
