"""Single-bin rectangle packing with the maximal-free-rectangles
best-area-fit heuristic.

Rectangles are placed largest-area first; each placement picks the free
rectangle whose leftover area is smallest, breaking ties by lowest y
then lowest x, so results are fully deterministic.  ``choose_bin``
wraps the packer with a square-ish start size, grow-on-infeasible
retries and a final trim to grid multiples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


class PackInfeasible(Exception):
    """No feasible position exists for some rectangle in this bin."""


@dataclass(frozen=True)
class Bin:
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError("bin dimensions must be >= 1")


@dataclass(frozen=True)
class Placement:
    rect_id: int
    x: int
    y: int


@dataclass(frozen=True)
class PackResult:
    bin: Bin
    placements: tuple[Placement, ...]
    unused: int


def _split_free_rect(free, used):
    """MaxRects split: free rect minus a placed rect, up to 4 pieces."""
    fx, fy, fw, fh = free
    ux, uy, uw, uh = used
    if ux >= fx + fw or ux + uw <= fx or uy >= fy + fh or uy + uh <= fy:
        return None  # disjoint, keep the free rect as is
    pieces = []
    if uy > fy:
        pieces.append((fx, fy, fw, uy - fy))
    if uy + uh < fy + fh:
        pieces.append((fx, uy + uh, fw, fy + fh - (uy + uh)))
    if ux > fx:
        pieces.append((fx, fy, ux - fx, fh))
    if ux + uw < fx + fw:
        pieces.append((ux + uw, fy, fx + fw - (ux + uw), fh))
    return pieces


def _prune(free: list) -> list:
    out = []
    for i, a in enumerate(free):
        contained = False
        for j, b in enumerate(free):
            if i == j:
                continue
            if (
                a[0] >= b[0]
                and a[1] >= b[1]
                and a[0] + a[2] <= b[0] + b[2]
                and a[1] + a[3] <= b[1] + b[3]
                and (a != b or i > j)
            ):
                contained = True
                break
        if not contained:
            out.append(a)
    return out


# Exact-fill fallback limits: the search is only complete (and cheap)
# for small inputs, so larger ones stay on the greedy-only path.
_EXACT_FILL_MAX_RECTS = 12
_EXACT_FILL_NODE_BUDGET = 500_000


def _lowest_empty_point(placed: list, bin_w: int, bin_h: int):
    """Lexicographically smallest (y, x) not covered by any placed box.

    Row coverage only changes where a box starts or ends, so scanning
    those event rows finds the first row with a gap.
    """
    events = sorted({0} | {b[1] + b[3] for b in placed if b[1] + b[3] < bin_h})
    for y in events:
        spans = sorted(
            (b[0], b[0] + b[2]) for b in placed if b[1] <= y < b[1] + b[3]
        )
        x = 0
        for x0, x1 in spans:
            if x0 > x:
                break
            x = max(x, x1)
        if x < bin_w:
            return x, y
    return None


def _exact_fill(rects: Sequence[tuple[int, int]], bin: Bin):
    """Complete search for a perfect tiling of the bin (no slack).

    Bottom-left-fill argument: in any tiling, the rect covering the
    lowest-left empty point must have its top-left corner there, so
    trying every remaining rect at that point explores every tiling.
    Returns placements as {rect_id: (x, y)} or None; deterministic.
    """
    n = len(rects)
    budget = _EXACT_FILL_NODE_BUDGET
    placed: list[tuple[int, int, int, int]] = []
    slots: dict[int, tuple[int, int]] = {}
    remaining = list(range(n))

    def walk() -> bool:
        nonlocal budget
        if budget <= 0:
            return False
        budget -= 1
        if not remaining:
            return True
        point = _lowest_empty_point(placed, bin.w, bin.h)
        if point is None:  # full but rects remain: impossible for exact area
            return False
        px, py = point
        tried = set()
        for k in range(len(remaining)):
            idx = remaining[k]
            rw, rh = rects[idx]
            if (rw, rh) in tried:  # duplicates branch identically
                continue
            tried.add((rw, rh))
            if px + rw > bin.w or py + rh > bin.h:
                continue
            box = (px, py, rw, rh)
            if any(
                px < b[0] + b[2] and b[0] < px + rw and py < b[1] + b[3] and b[1] < py + rh
                for b in placed
            ):
                continue
            placed.append(box)
            remaining.pop(k)
            slots[idx] = (px, py)
            if walk():
                return True
            placed.pop()
            remaining.insert(k, idx)
            del slots[idx]
        return False

    return slots if walk() else None


def pack(rects: Sequence[tuple[int, int]], bin: Bin) -> PackResult:
    """Pack all ``rects`` (w, h) into ``bin`` or raise PackInfeasible.

    Raises ValueError if a rectangle cannot fit the bin even alone
    (precondition violation rather than a packing failure).

    When the greedy pass fails but the rects' total area equals the bin
    area exactly, a bounded complete search for a perfect tiling runs
    before giving up; the greedy alone misses many feasible tilings.
    """
    for w, h in rects:
        if w < 1 or h < 1:
            raise ValueError(f"rect {w}x{h} has non-positive dimensions")
        if w > bin.w or h > bin.h:
            raise ValueError(f"rect {w}x{h} exceeds bin {bin.w}x{bin.h}")

    order = sorted(
        range(len(rects)),
        key=lambda i: (-rects[i][0] * rects[i][1], -rects[i][1], i),
    )
    free = [(0, 0, bin.w, bin.h)]
    placements = []
    failed_dims = None
    for idx in order:
        rw, rh = rects[idx]
        best = None  # (leftover_area, y, x)
        for fx, fy, fw, fh in free:
            if fw < rw or fh < rh:
                continue
            key = (fw * fh - rw * rh, fy, fx)
            if best is None or key < best:
                best = key
        if best is None:
            failed_dims = (rw, rh)
            break
        _, py, px = best
        used = (px, py, rw, rh)
        placements.append(Placement(idx, px, py))
        next_free = []
        for fr in free:
            pieces = _split_free_rect(fr, used)
            if pieces is None:
                next_free.append(fr)
            else:
                next_free.extend(pieces)
        free = _prune(next_free)
    total = sum(w * h for w, h in rects)
    if failed_dims is not None:
        exact = None
        if total == bin.w * bin.h and len(rects) <= _EXACT_FILL_MAX_RECTS:
            exact = _exact_fill(rects, bin)
        if exact is None:
            raise PackInfeasible(
                f"no feasible position for rect {failed_dims[0]}x{failed_dims[1]}"
            )
        placements = [Placement(i, x, y) for i, (x, y) in exact.items()]
    placements.sort(key=lambda p: p.rect_id)
    return PackResult(bin, tuple(placements), bin.w * bin.h - total)


def _round_up(v: int, grid: int) -> int:
    return -(-v // grid) * grid


def choose_bin(rects: Sequence[tuple[int, int]], grid: int) -> PackResult:
    """Pick a bin, pack, and trim it to the tightest grid multiple.

    Starts from a square whose side covers the total rectangle area
    (and the widest/tallest rect), grows the shorter side one grid step
    per infeasible attempt, then trims to the placements' bounding box.
    """
    if not rects:
        raise ValueError("choose_bin needs at least one rectangle")
    if grid < 1:
        raise ValueError("grid must be >= 1")
    total = sum(w * h for w, h in rects)
    side = _round_up(math.isqrt(total - 1) + 1, grid)  # ceil(sqrt) then grid
    w = max(side, _round_up(max(r[0] for r in rects), grid))
    h = max(side, _round_up(max(r[1] for r in rects), grid))
    while True:
        try:
            result = pack(rects, Bin(w, h))
            break
        except PackInfeasible:
            if h < w:
                h += grid
            else:
                w += grid
    max_x = max(p.x + rects[p.rect_id][0] for p in result.placements)
    max_y = max(p.y + rects[p.rect_id][1] for p in result.placements)
    trimmed = Bin(_round_up(max_x, grid), _round_up(max_y, grid))
    unused = trimmed.w * trimmed.h - total
    return PackResult(trimmed, result.placements, unused)
