"""Region geometry: padding, overlap grouping, hulls, grid cover and
rectangle decomposition.

The stage order mirrors the encoder: detector boxes are padded for
context, overlapping boxes are grouped, each group is unified by its
convex hull, the hull is covered conservatively with fixed-size grid
cells (so regions stay aligned with codec coding units), the resulting
rectilinear cell set is sliced into rectangles, and adjacent slices are
greedily re-merged into fewer, larger rectangles.

All arithmetic is integer and exact; every function is pure and
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .regions import BBox

Point = tuple[int, int]


@dataclass(frozen=True)
class ConvexPolygon:
    """Convex polygon with counter-clockwise vertices (y-up orientation).

    Degenerate inputs (all points collinear) are represented by the
    bounding box of the points, possibly with fewer than 3 distinct
    vertices.
    """

    vertices: tuple[Point, ...]

    @property
    def bounds(self) -> tuple[int, int, int, int]:
        xs = [p[0] for p in self.vertices]
        ys = [p[1] for p in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def area2(self) -> int:
        """Twice the signed area (shoelace); positive for CCW."""
        verts = self.vertices
        n = len(verts)
        if n < 3:
            return 0
        acc = 0
        for i in range(n):
            x0, y0 = verts[i]
            x1, y1 = verts[(i + 1) % n]
            acc += x0 * y1 - x1 * y0
        return acc


@dataclass(frozen=True)
class RectilinearPolygon:
    """Edge-connected set of grid cells; a cell (cx, cy) spans the pixel
    square [cx*grid, (cx+1)*grid) x [cy*grid, (cy+1)*grid)."""

    cells: frozenset[tuple[int, int]]
    grid: int

    @property
    def area(self) -> int:
        return len(self.cells) * self.grid * self.grid


@dataclass(frozen=True)
class RectGroup:
    """Disjoint rectangles covering one merged region group, plus the
    indices of the detector regions that produced it."""

    rects: tuple[BBox, ...]
    source_region_ids: tuple[int, ...]

    @property
    def area(self) -> int:
        return sum(r.area for r in self.rects)


def pad_region(bbox: BBox, pad: int, image_w: int, image_h: int) -> BBox:
    """Grow ``bbox`` by ``pad`` pixels on all sides, clamped to the image."""
    if pad < 0:
        raise ValueError("pad must be >= 0")
    x0 = max(bbox.x - pad, 0)
    y0 = max(bbox.y - pad, 0)
    x1 = min(bbox.x2 + pad, image_w)
    y1 = min(bbox.y2 + pad, image_h)
    return BBox(x0, y0, x1 - x0, y1 - y0)


def overlap_components(regions: Sequence[BBox]) -> list[list[int]]:
    """Partition region indices into connected components of the
    intersection graph (closed rectangles; touching counts)."""
    n = len(regions)
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if regions[i].intersects(regions[j]):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [groups[root] for root in sorted(groups)]


def _cross(o: Point, a: Point, b: Point) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Iterable[Point]) -> ConvexPolygon:
    """Smallest convex polygon containing ``points`` (monotone chain).

    Hull vertices are a subset of the input points, in counter-clockwise
    order with no three collinear.  If all points are collinear the
    bounding box of the points is returned instead, which is a valid
    superset for the downstream grid cover.
    """
    pts = sorted(set(points))
    if not pts:
        raise ValueError("convex_hull needs at least one point")
    if len(pts) >= 3:
        lower: list[Point] = []
        for p in pts:
            while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
                lower.pop()
            lower.append(p)
        upper: list[Point] = []
        for p in reversed(pts):
            while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
                upper.pop()
            upper.append(p)
        hull = lower[:-1] + upper[:-1]
        if len(hull) >= 3:
            return ConvexPolygon(tuple(hull))
    # Collinear fallback: bounding box, deduplicated if degenerate.
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    corners = ((x0, y0), (x1, y0), (x1, y1), (x0, y1))
    seen: list[Point] = []
    for c in corners:
        if c not in seen:
            seen.append(c)
    return ConvexPolygon(tuple(seen))


def _projections_overlap_strictly(av: Sequence[Point], bv: Sequence[Point], axis: Point) -> bool:
    adots = [p[0] * axis[0] + p[1] * axis[1] for p in av]
    bdots = [p[0] * axis[0] + p[1] * axis[1] for p in bv]
    return max(min(adots), min(bdots)) < min(max(adots), max(bdots))


def _cell_interior_intersects_hull(cell: Sequence[Point], hull: Sequence[Point]) -> bool:
    """Separating-axis test for positive-area overlap, exact in integers."""
    axes: list[Point] = [(1, 0), (0, 1)]
    n = len(hull)
    for i in range(n):
        x0, y0 = hull[i]
        x1, y1 = hull[(i + 1) % n]
        axes.append((y0 - y1, x1 - x0))
    for axis in axes:
        if not _projections_overlap_strictly(cell, hull, axis):
            return False
    return True


def grid_cover(
    hull: ConvexPolygon, grid: int, image_w: int, image_h: int
) -> RectilinearPolygon:
    """Cells whose overlap with the hull has positive area.

    The candidate range is clipped to the image extended to the next
    grid multiple.  Cells that only touch the hull boundary (zero-area
    intersection) are excluded, which makes grid-aligned rectangles
    cover exactly their own cells.
    """
    if grid < 1:
        raise ValueError("grid must be >= 1")
    ncx = -(-image_w // grid)
    ncy = -(-image_h // grid)
    x0, y0, x1, y1 = hull.bounds
    degenerate = hull.area2() == 0

    def clamp(v: int, hi: int) -> int:
        return max(0, min(v, hi))

    if degenerate:
        # Half-open cell convention: the cell owning each boundary point.
        cx_lo = clamp(x0 // grid, ncx - 1)
        cx_hi = clamp(max(x0 // grid, -(-x1 // grid) - 1), ncx - 1)
        cy_lo = clamp(y0 // grid, ncy - 1)
        cy_hi = clamp(max(y0 // grid, -(-y1 // grid) - 1), ncy - 1)
        cells = frozenset(
            (cx, cy)
            for cy in range(cy_lo, cy_hi + 1)
            for cx in range(cx_lo, cx_hi + 1)
        )
        return RectilinearPolygon(cells, grid)

    cx_lo = clamp(x0 // grid, ncx - 1)
    cx_hi = clamp((x1 - 1) // grid, ncx - 1)
    cy_lo = clamp(y0 // grid, ncy - 1)
    cy_hi = clamp((y1 - 1) // grid, ncy - 1)
    verts = hull.vertices
    covered = set()
    for cy in range(cy_lo, cy_hi + 1):
        py = cy * grid
        row_hit = False
        for cx in range(cx_lo, cx_hi + 1):
            px = cx * grid
            cell = ((px, py), (px + grid, py), (px + grid, py + grid), (px, py + grid))
            if _cell_interior_intersects_hull(cell, verts):
                covered.add((cx, cy))
                row_hit = True
            elif row_hit:
                break  # convex: each row's covered cells form one run
    return RectilinearPolygon(frozenset(covered), grid)


def rectangulate(poly: RectilinearPolygon) -> list[BBox]:
    """Slice a rectilinear cell set into disjoint grid-aligned rectangles.

    Rows are sliced into horizontal bands wherever the run structure
    changes (exactly the y-coordinates of boundary corners); each
    maximal run within a band becomes one rectangle.  Output is ordered
    top-to-bottom, left-to-right.
    """
    if not poly.cells:
        raise ValueError("cannot rectangulate an empty polygon")
    g = poly.grid
    rows: dict[int, list[tuple[int, int]]] = {}
    by_row: dict[int, list[int]] = {}
    for cx, cy in poly.cells:
        by_row.setdefault(cy, []).append(cx)
    for cy, xs in by_row.items():
        xs.sort()
        runs = []
        start = prev = xs[0]
        for x in xs[1:]:
            if x == prev + 1:
                prev = x
                continue
            runs.append((start, prev))
            start = prev = x
        runs.append((start, prev))
        rows[cy] = runs

    out: list[BBox] = []
    band_start: int | None = None
    band_runs: list[tuple[int, int]] = []
    prev_cy: int | None = None

    def flush(last_cy: int) -> None:
        height = (last_cy - band_start + 1) * g
        for rx0, rx1 in band_runs:
            out.append(BBox(rx0 * g, band_start * g, (rx1 - rx0 + 1) * g, height))

    for cy in sorted(rows):
        if band_start is not None and cy == prev_cy + 1 and rows[cy] == band_runs:
            prev_cy = cy
            continue
        if band_start is not None:
            flush(prev_cy)
        band_start = prev_cy = cy
        band_runs = rows[cy]
    flush(prev_cy)
    return out


def _try_merge(a: BBox, b: BBox) -> BBox | None:
    if a.x == b.x and a.w == b.w:
        if a.y2 == b.y:
            return BBox(a.x, a.y, a.w, a.h + b.h)
        if b.y2 == a.y:
            return BBox(a.x, b.y, a.w, a.h + b.h)
    if a.y == b.y and a.h == b.h:
        if a.x2 == b.x:
            return BBox(a.x, a.y, a.w + b.w, a.h)
        if b.x2 == a.x:
            return BBox(b.x, a.y, a.w + b.w, a.h)
    return None


def greedy_merge(rects: Sequence[BBox]) -> list[BBox]:
    """Repeatedly merge rectangle pairs that share a full common edge.

    Candidates are scanned in lexicographic (y, x) order and re-scanned
    after every merge, so the fixpoint is deterministic.  Covered area
    is preserved exactly and no overlaps are created.
    """
    work = sorted(rects, key=lambda r: (r.y, r.x))
    merged = True
    while merged:
        merged = False
        for i in range(len(work)):
            for j in range(i + 1, len(work)):
                combined = _try_merge(work[i], work[j])
                if combined is not None:
                    del work[j]
                    del work[i]
                    work.append(combined)
                    work.sort(key=lambda r: (r.y, r.x))
                    merged = True
                    break
            if merged:
                break
    return work


def extract_rect_groups(
    padded: Sequence[BBox],
    grid: int,
    image_w: int,
    image_h: int,
    single_hull: bool = False,
) -> list[RectGroup]:
    """Full extractor: group, hull, cover, rectangulate and merge.

    With ``single_hull`` every region contributes to one hull over the
    whole image, matching the literal all-regions union; the default
    builds one hull per overlapping cluster.
    """
    if not padded:
        return []
    if single_hull:
        components = [list(range(len(padded)))]
    else:
        components = overlap_components(padded)
    groups = []
    for comp in components:
        points: list[Point] = []
        for idx in comp:
            points.extend(padded[idx].corners())
        hull = convex_hull(points)
        cover = grid_cover(hull, grid, image_w, image_h)
        rects = greedy_merge(rectangulate(cover))
        groups.append(RectGroup(tuple(rects), tuple(comp)))
    return groups


def debug_dump(
    padded: Sequence[BBox], groups: Sequence[RectGroup], grid: int
) -> str:
    """Human-readable stage dump used by the CLI preview command."""
    lines = [f"grid={grid}", f"padded boxes: {len(padded)}"]
    for i, box in enumerate(padded):
        lines.append(f"  box[{i}] x={box.x} y={box.y} w={box.w} h={box.h}")
    lines.append(f"groups: {len(groups)}")
    for gi, group in enumerate(groups):
        ids = ",".join(str(i) for i in group.source_region_ids)
        lines.append(f"  group[{gi}] regions=[{ids}] rects={len(group.rects)} area={group.area}")
        for r in group.rects:
            lines.append(f"    rect x={r.x} y={r.y} w={r.w} h={r.h}")
    return "\n".join(lines) + "\n"
