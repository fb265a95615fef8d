"""Layout verification (containment, pairwise non-overlap) and waste accounting.

Squares are checked pairwise through a spatial hash with cell size 2: two unit
squares with intersecting interiors have centers closer than sqrt(2), so they
always sit in the same or adjacent cells. Analytic grid blocks are checked as
oriented rectangles through a shapely STRtree broad phase.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
import shapely
from shapely import STRtree

from sqpack.domain.errors import ConstructionError, SqpackError, UnverifiedLayoutError
from sqpack.domain.geometry import SQUARE_HALF, obb_overlap_depth, polygon_area, square_corners
from sqpack.domain.models import DEFAULT_SHRINK, DEFAULT_SLACK, Layout, PackingStats, Violation

# --- VERIFIER CONSTANTS ---
# Largest accepted shrink or slack
MAX_TOLERANCE = 0.01
CELL_SIZE = 2.0
# Self cell plus the four "forward" neighbours: every adjacent cell pair is visited once
NEIGHBOR_OFFSETS = ((0, 0), (1, -1), (1, 0), (1, 1), (0, 1))
PAIR_CHUNK = 400_000
CONTAINMENT_CHUNK = 200_000
# Above this many items, waste pieces are not attributed geometrically
ATTRIBUTION_LIMIT = 20_000


def _block_arrays(layout: Layout, shrink: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    blocks = layout.grid_blocks
    centers = np.array([b.center.as_tuple() for b in blocks], dtype=float).reshape(-1, 2)
    halves = np.array([(0.5 * b.cols - shrink, 0.5 * b.rows - shrink) for b in blocks], dtype=float).reshape(-1, 2)
    angles = np.array([b.angle for b in blocks], dtype=float)
    return centers, halves, angles


def _containment(layout: Layout, slack: float) -> List[Violation]:
    found = []
    n = layout.square_count
    for lo in range(0, n, CONTAINMENT_CHUNK):
        hi = min(n, lo + CONTAINMENT_CHUNK)
        corners = square_corners(layout.centers[lo:hi], layout.angles[lo:hi])
        excess = layout.region.excess(corners).max(axis=1)
        for k in np.nonzero(excess > slack)[0]:
            found.append(Violation("containment", (lo + int(k),), float(excess[k])))
    if layout.grid_blocks:
        corners = np.array([b.corners() for b in layout.grid_blocks])
        excess = layout.region.excess(corners).max(axis=1)
        for k in np.nonzero(excess > slack)[0]:
            found.append(Violation("containment", (n + int(k),), float(excess[k])))
    return found


def _expand_pairs(order, start, counts, ga, gb, same) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    sizes = counts[ga] * counts[gb]
    cum = np.cumsum(sizes)
    lo = 0
    while lo < len(sizes):
        base = cum[lo - 1] if lo else 0
        hi = max(lo + 1, int(np.searchsorted(cum, base + PAIR_CHUNK, side="right")))
        a, b = counts[ga[lo:hi]], counts[gb[lo:hi]]
        s = a * b
        rep = np.repeat(np.arange(len(s)), s)
        local = np.arange(int(s.sum())) - np.repeat(np.cumsum(s) - s, s)
        ia = start[ga[lo:hi]][rep] + local // b[rep]
        ib = start[gb[lo:hi]][rep] + local % b[rep]
        if same:
            keep = ia < ib
            ia, ib = ia[keep], ib[keep]
        yield order[ia], order[ib]
        lo = hi


def _hash_overlaps(layout: Layout, shrink: float, offset: Tuple[int, int], table) -> List[Violation]:
    order, start, counts, uniq, width = table
    dx, dy = offset
    target = uniq + dx * width + dy
    pos = np.minimum(np.searchsorted(uniq, target), len(uniq) - 1)
    hit = uniq[pos] == target
    ga, gb = np.nonzero(hit)[0], pos[hit]
    half = np.full(2, SQUARE_HALF - shrink)
    found = []
    for i, j in _expand_pairs(order, start, counts, ga, gb, same=offset == (0, 0)):
        depth = obb_overlap_depth(layout.centers[i], half, layout.angles[i], layout.centers[j], half, layout.angles[j])
        for k in np.nonzero(depth > 0.0)[0]:
            a, b = int(i[k]), int(j[k])
            found.append(Violation("overlap", (min(a, b), max(a, b)), float(depth[k])))
    return found


def _hash_table(centers: np.ndarray):
    cells = np.floor(centers / CELL_SIZE).astype(np.int64)
    kx = cells[:, 0] - cells[:, 0].min()
    ky = cells[:, 1] - cells[:, 1].min() + 1
    width = int(ky.max()) + 2
    keys = kx * width + ky
    order = np.argsort(keys, kind="stable")
    uniq, start, counts = np.unique(keys[order], return_index=True, return_counts=True)
    return order, start, counts, uniq, width


def _block_polygons(layout: Layout) -> np.ndarray:
    return shapely.polygons(np.array([b.corners() for b in layout.grid_blocks]).reshape(-1, 4, 2))


def _block_overlaps(layout: Layout, shrink: float) -> List[Violation]:
    if not layout.grid_blocks:
        return []
    n = layout.square_count
    b_centers, b_halves, b_angles = _block_arrays(layout, shrink)
    # Broad phase on the rectangles themselves: bounding boxes of long tilted rows overlap widely
    polys = _block_polygons(layout)
    tree = STRtree(polys)
    found = []
    if n:
        sq_halves = np.full((n, 2), SQUARE_HALF - shrink)
        qi, bi = tree.query(shapely.polygons(square_corners(layout.centers, layout.angles)), predicate="intersects")
        depth = obb_overlap_depth(
            layout.centers[qi], sq_halves[qi], layout.angles[qi], b_centers[bi], b_halves[bi], b_angles[bi]
        )
        for k in np.nonzero(depth > 0.0)[0]:
            found.append(Violation("overlap", (int(qi[k]), n + int(bi[k])), float(depth[k])))
    qa, qb = tree.query(polys, predicate="intersects")
    keep = qa < qb
    qa, qb = qa[keep], qb[keep]
    depth = obb_overlap_depth(b_centers[qa], b_halves[qa], b_angles[qa], b_centers[qb], b_halves[qb], b_angles[qb])
    for k in np.nonzero(depth > 0.0)[0]:
        found.append(Violation("overlap", (n + int(qa[k]), n + int(qb[k])), float(depth[k])))
    return found


def _sorted(violations: List[Violation]) -> List[Violation]:
    return sorted(violations, key=lambda v: (v.kind, v.indices))


def verify_layout(
    layout: Layout,
    shrink: float = DEFAULT_SHRINK,
    slack: float = DEFAULT_SLACK,
    workers: int = 1,
) -> List[Violation]:
    """Return every containment and overlap violation, ordered by kind then indices.

    Item indices count squares first, then grid blocks.
    """
    for name, value in (("shrink", shrink), ("slack", slack)):
        if not 0.0 <= value <= MAX_TOLERANCE:
            raise SqpackError(f"{name} must lie in [0, {MAX_TOLERANCE}], got {value}")
    violations = _containment(layout, slack)
    if layout.square_count > 1:
        table = _hash_table(layout.centers)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = pool.map(lambda off: _hash_overlaps(layout, shrink, off, table), NEIGHBOR_OFFSETS)
                for part in parts:
                    violations.extend(part)
        else:
            for offset in NEIGHBOR_OFFSETS:
                violations.extend(_hash_overlaps(layout, shrink, offset, table))
    violations.extend(_block_overlaps(layout, shrink))
    if violations:
        logging.debug(f"verify_layout: {len(violations)} violations")
    return _sorted(violations)


def brute_force_violations(
    layout: Layout,
    shrink: float = DEFAULT_SHRINK,
    slack: float = DEFAULT_SLACK,
    chunk: int = 256,
) -> List[Violation]:
    """All-pairs reference check; same report as verify_layout, quadratic cost."""
    violations = _containment(layout, slack)
    b_centers, b_halves, b_angles = _block_arrays(layout, shrink)
    n = layout.square_count
    centers = np.concatenate([layout.centers, b_centers])
    halves = np.concatenate([np.full((n, 2), SQUARE_HALF - shrink), b_halves])
    angles = np.concatenate([layout.angles, b_angles])
    total = len(centers)
    for lo in range(0, total, chunk):
        rows = np.arange(lo, min(total, lo + chunk))
        i, j = np.meshgrid(rows, np.arange(total), indexing="ij")
        keep = j > i
        i, j = i[keep], j[keep]
        depth = obb_overlap_depth(centers[i], halves[i], angles[i], centers[j], halves[j], angles[j])
        for k in np.nonzero(depth > 0.0)[0]:
            violations.append(Violation("overlap", (int(i[k]), int(j[k])), float(depth[k])))
    return _sorted(violations)


def _zone_waste(layout: Layout) -> Dict[str, float]:
    counts = np.concatenate([np.ones(layout.square_count), [b.count for b in layout.grid_blocks]])
    packed = np.bincount(layout.zone_index, weights=counts, minlength=len(layout.zones))
    per_tag: Dict[str, float] = {}
    for zone, used in zip(layout.zones, packed):
        per_tag[zone.label] = per_tag.get(zone.label, 0.0) + polygon_area(zone.region) - float(used)
    return per_tag


def _item_polygons(layout: Layout) -> np.ndarray:
    corners = square_corners(layout.centers, layout.angles)
    blocks = [b.corners() for b in layout.grid_blocks]
    if blocks:
        corners = np.concatenate([corners, np.array(blocks)])
    return shapely.polygons(corners)


def _nearest_tag_waste(layout: Layout, waste: float) -> Dict[str, float]:
    if layout.item_count == 0:
        return {"unpacked": waste}
    census = layout.tag_census()
    if layout.item_count > ATTRIBUTION_LIMIT:
        logging.warning(f"Layout has {layout.item_count} items; waste attributed to the dominant tag only")
        return {max(census, key=census.get): waste}
    polys = _item_polygons(layout)
    container = shapely.Polygon(layout.region.array)
    pieces = shapely.get_parts(shapely.difference(container, shapely.union_all(polys)))
    areas = shapely.area(pieces) if len(pieces) else np.zeros(0)
    if len(pieces) == 0 or areas.sum() <= 0.0:
        return {max(census, key=census.get): waste}
    nearest = STRtree(polys).nearest(shapely.point_on_surface(pieces))
    per_tag: Dict[str, float] = {}
    scale = waste / float(areas.sum())
    for idx, area in zip(nearest, areas):
        tag = layout.tags[int(idx)]
        per_tag[tag] = per_tag.get(tag, 0.0) + float(area) * scale
    return per_tag


def measure_waste(
    layout: Layout,
    shrink: float = DEFAULT_SHRINK,
    slack: float = DEFAULT_SLACK,
    violations: Optional[List[Violation]] = None,
    workers: int = 1,
) -> PackingStats:
    """Waste = container area minus packed unit squares; refuses unverified layouts."""
    if violations is None:
        violations = verify_layout(layout, shrink, slack, workers)
    if violations:
        first = violations[0]
        raise UnverifiedLayoutError(
            f"Layout has {len(violations)} violations (first: {first.kind} {first.indices} by {first.magnitude:.3g})"
        )
    area = polygon_area(layout.region)
    count = layout.total_count
    waste = area - count
    per_tag = _zone_waste(layout) if layout.zones else _nearest_tag_waste(layout, waste)
    return PackingStats(
        region_area=area,
        square_count=count,
        waste=waste,
        per_tag_waste=per_tag,
        verified=True,
        flags=tuple(layout.meta.get("flags", ())),
    )


def ensure_verified(layout: Layout, context: str, workers: int = 1) -> Layout:
    """Raise ConstructionError unless the freshly built layout verifies at default tolerances."""
    violations = verify_layout(layout, workers=workers)
    if violations:
        logging.error(f"{context}: construction produced {len(violations)} violations")
        raise ConstructionError(f"{context}: {len(violations)} violations, first {violations[0]}", violations[:10])
    return layout
