"""Tilted stacks between two parallel lines, and the naive row filler."""
import logging
import math
from typing import List, Tuple

import numpy as np
from scipy.optimize import bisect

from sqpack.domain.errors import ConstructionError, InfeasibleError
from sqpack.domain.geometry import GridBlock, Point, Region
from sqpack.domain.models import Layout, StripSpec, TiltSolution
from sqpack.domain.verifier import ensure_verified

# --- STRIP CONSTANTS ---
TILT_RESIDUAL = 1e-12
# Bounds of unit-square lattices are snapped by this much before flooring
COUNT_TOLERANCE = 1e-10
SIDE_TOLERANCE = 1e-9


def _extent(alpha: float, stack_size: int) -> float:
    return stack_size * math.cos(alpha) + math.sin(alpha)


def solve_tilt(stack_size: int, span: float) -> TiltSolution:
    """Smallest tilt alpha in [0, pi/4) with stack_size * cos(alpha) + sin(alpha) = span."""
    if span == stack_size:
        return TiltSolution(0.0, 1.0)
    peak = math.atan(1.0 / stack_size)
    if span > stack_size:
        if span > math.hypot(stack_size, 1.0):
            reach = math.hypot(stack_size, 1.0)
            raise InfeasibleError(f"span {span} exceeds the reach {reach} of {stack_size} squares")
        lo, hi = 0.0, peak
    else:
        if span <= _extent(math.pi / 4, stack_size):
            raise InfeasibleError(f"span {span} too small for a stack of {stack_size} tilted below pi/4")
        lo, hi = peak, math.pi / 4

    alpha = bisect(lambda a: _extent(a, stack_size) - span, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    residual = abs(_extent(alpha, stack_size) - span)
    if residual > TILT_RESIDUAL * max(1.0, span):
        raise InfeasibleError(f"tilt bisection stalled with residual {residual}")
    return TiltSolution(alpha, stack_size * math.sin(alpha) + math.cos(alpha))


def _lattice_bounds(region: Region, corner_offsets: np.ndarray, y: float) -> Tuple[float, float]:
    """Range of x such that every offset corner, shifted to (x, y), lies inside the region."""
    normals, offsets = region.half_planes
    lo, hi = -math.inf, math.inf
    scale = max(1.0, float(np.abs(region.array).max()))
    for n, o in zip(normals, offsets):
        for dx, dy in corner_offsets:
            rhs = o - n[0] * dx - n[1] * (y + dy)
            if n[0] > 1e-15:
                hi = min(hi, rhs / n[0])
            elif n[0] < -1e-15:
                lo = max(lo, rhs / n[0])
            elif rhs < -SIDE_TOLERANCE * scale:
                return math.inf, -math.inf
    return lo, hi


def tilted_strip_region(span: float, alpha: float, stacks: int, x0: float = 0.0) -> Region:
    """Parallelogram holding exactly `stacks` flush stacks tilted by alpha, bottom-left corner at (x0, 0)."""
    lean = span * math.tan(alpha)
    x1 = x0 + stacks / math.cos(alpha)
    return Region.from_xy([(x0, 0.0), (x1, 0.0), (x1 - lean, span), (x0 - lean, span)])


def pack_parallel_strip(spec: StripSpec, region: Region, tag: str = "tilted-stack") -> Layout:
    """Fill the band between the region's horizontal bottom and top edges with flush tilted stacks.

    Each stack is a 1 x stack_size block rotated by the tilt, its lower-left corner on the
    bottom line and its upper-right corner on the top line.
    """
    x0, y0, x1, y1 = region.bounds
    if abs((y1 - y0) - spec.span) > SIDE_TOLERANCE * max(1.0, spec.span):
        raise InfeasibleError(f"region height {y1 - y0} does not match strip span {spec.span}")
    tilt = solve_tilt(spec.stack_size, spec.span)
    c, s = math.cos(tilt.alpha), math.sin(tilt.alpha)
    n = spec.stack_size
    corners = np.array([(0.0, 0.0), (c, s), (c - n * s, s + n * c), (-n * s, n * c)])
    lo, hi = _lattice_bounds(region, corners, y0)

    blocks: List[GridBlock] = []
    if hi >= lo - COUNT_TOLERANCE:
        stacks = int(math.floor((hi - lo) / tilt.pitch + COUNT_TOLERANCE)) + 1
        blocks = [GridBlock(Point(lo + k * tilt.pitch, y0), 1, n, tilt.alpha) for k in range(stacks)]
    layout = Layout(
        region,
        grid_blocks=tuple(blocks),
        tags=(tag,) * len(blocks),
        meta={"alpha": tilt.alpha, "stacks": len(blocks), "stack_size": n, "span": spec.span},
    )
    logging.debug(f"pack_parallel_strip: {len(blocks)} stacks of {n} at alpha={tilt.alpha:.6g}")
    return ensure_verified(layout, "pack_parallel_strip")


def pack_naive_region(region: Region, tag: str = "naive") -> Layout:
    """Greedy axis-aligned rows at integer offsets below the top edge, each packed from the left."""
    x0, y0, x1, y1 = region.bounds
    unit = np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    blocks: List[GridBlock] = []
    k = 0
    while y1 - k - 1 >= y0 - COUNT_TOLERANCE:
        bottom = y1 - k - 1
        lo, hi = _lattice_bounds(region, unit, bottom)
        if hi >= lo - COUNT_TOLERANCE:
            cols = int(math.floor(hi - lo + COUNT_TOLERANCE)) + 1
            blocks.append(GridBlock(Point(lo, bottom), cols, 1))
        k += 1
    layout = ensure_verified(Layout(region, grid_blocks=tuple(blocks), tags=(tag,) * len(blocks)), "pack_naive_region")

    waste = region.area - layout.total_count
    bound = 4 * (region.perimeter + 1)
    if waste > bound:
        raise ConstructionError(f"pack_naive_region: waste {waste:.3f} above 4*(perimeter+1) = {bound:.3f}")
    return layout
