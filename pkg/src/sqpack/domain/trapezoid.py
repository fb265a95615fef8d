"""Right trapezoid packing: a vertical run of tight quadrilaterals separated by integral gaps.

The canonical trapezoid has its vertical side on x = 0, its short base on top and a
right edge leaning `slope` radians to the right going down. Quadrilateral i is
anchored at a point E_i of the left side chosen so that the segment E_i G_i to the
right edge is tan(theta_i) longer than an integer; its bottom edge sets the tilt
theta_{i+1} of the next one. Gaps between consecutive quadrilaterals extend the
vertical columns above them, or take naive rows when those hold more; the top and
bottom leftovers are packed naively.
"""
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

from sqpack.domain.errors import DegenerateParamsError, ExhaustedError, InfeasibleError
from sqpack.domain.geometry import GridBlock, Line, Point, Region
from sqpack.domain.models import Layout, PackingStats, QuadPacking, ThetaSchedule, TrapezoidSpec, merge_layouts
from sqpack.domain.quad_primitive import COLUMN_TAG, build_quad_packing, derive_params
from sqpack.domain.strip import pack_naive_region
from sqpack.domain.verifier import ensure_verified, measure_waste

# --- SCHEDULE CONSTANTS ---
LOWER_FACTOR = 0.9
UPPER_FACTOR = 1.1
D_FACTOR = 0.12
THETA_CEILING = 0.125

# --- CONSTRUCTION CONSTANTS ---
ANCHOR_TOLERANCE = 1e-9
STACK_TOLERANCE = 1e-10
# Trim strips narrower than this are not given their own zone
TRIM_MIN_WIDTH = 1e-9
BOTTOM_MARGIN = 1e-6
GAP_TAG = "gap"


def _one_minus_cos(theta: float) -> float:
    half = math.sin(0.5 * theta)
    return 2.0 * half * half


def tilt_step(theta: float, sigma1: float) -> float:
    """tan(theta_next) - tan(theta) = (1 - cos theta)(sec theta - 1) / (sec(theta + sigma1) sin sigma1)."""
    one_minus = _one_minus_cos(theta)
    return one_minus * (one_minus / math.cos(theta)) * math.cos(theta + sigma1) / math.sin(sigma1)


def quadrilateral_budget(schedule: ThetaSchedule) -> int:
    """Number of quadrilaterals the tilt growth bound is guaranteed for."""
    return math.ceil(schedule.l / (4.0 * schedule.d**3) * schedule.x**schedule.omega)


def select_theta_schedule(spec: TrapezoidSpec) -> ThetaSchedule:
    x, gamma = spec.height, spec.gamma
    sin_slope = math.sin(spec.slope)
    l = LOWER_FACTOR * sin_slope * x**gamma  # noqa: E741
    u = UPPER_FACTOR * sin_slope * x**gamma
    d = D_FACTOR * l * l / u
    omega = gamma / 2.0
    if u * x**-gamma + 2.0 * d * x**-omega >= THETA_CEILING:
        raise InfeasibleError(f"tilt schedule hypothesis fails at height {x} with slope {spec.slope}")

    draft = ThetaSchedule(l, u, d, omega, (), x, spec.slope)
    # No more quadrilaterals than unit rows fit in the trapezoid
    count = min(quadrilateral_budget(draft), math.ceil(x)) + 1
    tan = d * x**-omega
    thetas = [math.atan(tan)]
    for _ in range(count - 1):
        tan += tilt_step(thetas[-1], spec.slope)
        thetas.append(math.atan(tan))
    if thetas[-1] >= THETA_CEILING:
        raise InfeasibleError(f"tilt schedule reaches {thetas[-1]:.4f} >= {THETA_CEILING}")
    logging.debug(f"Theta schedule: {len(thetas)} tilts from {thetas[0]:.6g} to {thetas[-1]:.6g}")
    return ThetaSchedule(l, u, d, omega, tuple(thetas), x, spec.slope)


def theta_conditions(theta: float, sigma1: float, schedule: Optional[ThetaSchedule] = None) -> Dict[str, bool]:
    """Scalar inequalities behind the tilt growth bound, plus the bound itself for a schedule."""
    one_minus = _one_minus_cos(theta)
    tan = math.tan(theta)
    sec_tilt = 1.0 / math.cos(theta + sigma1)
    checks = {
        "secant": theta + sigma1 >= THETA_CEILING or 1.0 < sec_tilt < 1.01,
        "quartic": one_minus * (one_minus / math.cos(theta)) < tan**4 / 4.0,
        "quadratic": one_minus > 0.49 * tan**2,
    }
    if schedule is not None:
        step = 4.0 * schedule.d**4 / schedule.l * schedule.x ** (-2.0 * schedule.omega)
        horizon = math.floor(schedule.l / (4.0 * schedule.d**3) * schedule.x**schedule.omega) + 1
        last = min(len(schedule.theta) - 1, horizon)
        base = math.tan(schedule.theta[0])
        checks["theta_growth"] = all(
            math.tan(schedule.theta[i]) <= (base + step * i) * (1.0 + 1e-12) for i in range(last + 1)
        )
    return checks


def _ray_length(start: Point, theta: float, line_right: Line) -> float:
    ray = Line(start, (math.cos(theta), -math.sin(theta)))
    hit = ray.intersect(line_right)
    return (hit.x - start.x) * ray.direction[0] + (hit.y - start.y) * ray.direction[1]


def _downward(line_left: Line) -> Tuple[float, float]:
    dx, dy = line_left.direction
    return (dx, dy) if dy < 0 else (-dx, -dy)


def anchor_spacing(line_left: Line, line_right: Line, theta_i: float) -> float:
    """Distance along the left line between consecutive anchor solutions."""
    dx, dy = _downward(line_left)
    p = line_left.point
    rate = _ray_length(Point(p.x + dx, p.y + dy), theta_i, line_right) - _ray_length(p, theta_i, line_right)
    return math.inf if abs(rate) < 1e-15 else 1.0 / abs(rate)


def find_anchor(
    line_left: Line,
    line_right: Line,
    theta_i: float,
    start: Point,
    min_gap: float,
    stop_y: Optional[float] = None,
) -> Point:
    """Highest E on line_left, at least min_gap below start, whose ray at -theta_i to
    line_right is tan(theta_i) longer than an integer."""
    if min_gap < 1:
        raise InfeasibleError(f"anchor gap must be at least 1, got {min_gap}")
    dx, dy = _downward(line_left)

    def _at(s: float) -> Point:
        return Point(start.x + s * dx, start.y + s * dy)

    # Ray length is affine in the distance travelled down the left line
    first = _ray_length(_at(min_gap), theta_i, line_right)
    rate = _ray_length(_at(min_gap + 1.0), theta_i, line_right) - first
    excess = first - math.tan(theta_i)
    if abs(rate) < 1e-15:
        if abs(excess - round(excess)) > ANCHOR_TOLERANCE:
            raise ExhaustedError("lines are parallel and the ray length never matches")
        s = min_gap
    elif rate > 0:
        s = min_gap + (math.ceil(excess - ANCHOR_TOLERANCE) - excess) / rate
    else:
        s = min_gap + (math.floor(excess + ANCHOR_TOLERANCE) - excess) / rate
    anchor = _at(s)
    if stop_y is not None and anchor.y < stop_y:
        raise ExhaustedError(f"no anchor above y={stop_y}; next solution at y={anchor.y:.4f}")
    return anchor


def _gap_blocks(gap: Region, columns_above: Sequence[GridBlock]) -> List[GridBlock]:
    blocks = []
    right_end = None
    for column in columns_above:
        x0, bottom = column.origin.x, column.origin.y
        lo, _ = gap.column_span(x0, x0 + 1.0)
        depth = math.floor(bottom - lo + STACK_TOLERANCE)
        if depth >= 1:
            blocks.append(GridBlock(Point(x0, bottom - depth), 1, depth))
        right_end = x0 + 1.0 if right_end is None else max(right_end, x0 + 1.0)

    # Sloped right end: shortened stacks, each as tall as its unit-wide column allows
    gx0, _, gx1, _ = gap.bounds
    x0 = gx0 if right_end is None else right_end
    while x0 + 1.0 <= gx1 + STACK_TOLERANCE:
        lo, hi = gap.column_span(x0, x0 + 1.0)
        rows = math.floor(hi - lo + STACK_TOLERANCE)
        if rows >= 1:
            blocks.append(GridBlock(Point(x0, lo), 1, rows))
        x0 += 1.0
    return blocks


def _gap_fill(gap: Region, columns_above: Sequence[GridBlock], tag: str) -> Layout:
    """Extended columns with a stacked right end, or naive rows when those hold more."""
    blocks = _gap_blocks(gap, columns_above)
    extended = Layout(gap, grid_blocks=tuple(blocks), tags=(tag,) * len(blocks))
    rows = pack_naive_region(gap, tag=tag)
    if rows.total_count > extended.total_count:
        logging.debug(f"Gap packed in naive rows: {rows.total_count} squares against {extended.total_count}")
        return rows
    return extended


def fill_gap(
    gap: Optional[Region],
    columns_above: Sequence[GridBlock],
    layout: Layout,
    tag: str = GAP_TAG,
    verify: bool = True,
) -> Layout:
    """Pack `gap` into `layout`, extending the vertical columns above it down through the gap.

    A zoned layout gains a zone for the gap even when nothing fits in it.
    """
    if gap is None:
        return layout
    part = _gap_fill(gap, columns_above, tag)
    if part.item_count == 0 and not layout.zones:
        return layout
    merged = merge_layouts(
        layout.region, [layout, part], labels=["packed", tag], keep_zones=bool(layout.zones), meta=layout.meta
    )
    return ensure_verified(merged, "fill_gap") if verify else merged


def _columns(packing: QuadPacking) -> List[GridBlock]:
    layout = packing.layout
    return [b for b, t in zip(layout.grid_blocks, layout.block_tags) if t == COLUMN_TAG]


def _edge_at_left(packing: QuadPacking, theta_next: float) -> float:
    """Height where the quadrilateral's bottom edge, extended, meets x = 0."""
    d = packing.vertices["D"]
    return d.y + math.tan(theta_next) * d.x


def _fallback(spec: TrapezoidSpec, region: Region, flags: Tuple[str, ...], reason: str) -> Tuple[Layout, PackingStats]:
    naive = pack_naive_region(region, tag="fallback")
    layout = merge_layouts(region, [naive], labels=["fallback"], meta={"flags": list(flags), "reason": reason})
    stats = measure_waste(layout)
    logging.info(f"Trapezoid h={spec.height:g} packed naively ({reason}): waste {stats.waste:.3f}")
    return layout, stats


def _stack_quadrilaterals(
    spec: TrapezoidSpec, schedule: ThetaSchedule, left: Line, right: Line
) -> Tuple[Point, List[QuadPacking], List[Point], List[float]]:
    """Build quadrilaterals downwards; returns E_0, the packings, their anchors and tilts."""
    h = spec.height
    first = find_anchor(left, right, schedule.theta[0], Point(0.0, h), 1.0, stop_y=0.0)
    packings: List[QuadPacking] = []
    anchors: List[Point] = []
    thetas: List[float] = []
    anchor, theta = first, schedule.theta[0]
    while True:
        length = _ray_length(anchor, theta, right)
        m = math.floor(length - math.tan(theta) + ANCHOR_TOLERANCE)
        shift = max(0.0, length - m - math.tan(theta))
        a = Point(anchor.x + shift * math.cos(theta), anchor.y - shift * math.sin(theta))
        try:
            packing = build_quad_packing(derive_params(m, theta, spec.slope), a)
        except (InfeasibleError, DegenerateParamsError):
            if not packings:
                raise
            logging.debug(f"Quadrilateral {len(packings)} not constructible at theta={theta:.6g}; stopping")
            break
        if min(packing.vertices["C"].y, packing.vertices["D"].y) < BOTTOM_MARGIN:
            if not packings:
                raise ExhaustedError("first quadrilateral does not fit above the bottom edge")
            break
        packings.append(packing)
        anchors.append(anchor)
        thetas.append(theta)

        theta = packing.params.theta + packing.params.sigma2
        if len(packings) >= len(schedule.theta):
            logging.warning(f"Tilt schedule exhausted after {len(packings)} quadrilaterals")
            break
        top = _edge_at_left(packing, theta)
        try:
            found = find_anchor(left, right, theta, Point(0.0, top), 1.0, stop_y=0.0)
        except ExhaustedError:
            break
        gap = math.ceil(top - found.y - ANCHOR_TOLERANCE)
        anchor = Point(0.0, top - gap)
        if anchor.y <= 0.0:
            break
    return first, packings, anchors, thetas


def pack_right_trapezoid(spec: TrapezoidSpec) -> Tuple[Layout, PackingStats]:
    region = spec.region()
    if not spec.asymptotic_conditions_met:
        logging.warning(f"Trapezoid h={spec.height:g}: exponents outside the supported range, packing naively")
        return _fallback(spec, region, ("asymptotic-conditions-unmet",), "asymptotic conditions unmet")

    h, w, big = spec.height, spec.small_base, spec.large_base
    left = Line.vertical(0.0)
    right = Line.through(Point(w, h), Point(big, 0.0))
    try:
        schedule = select_theta_schedule(spec)
        first, packings, anchors, thetas = _stack_quadrilaterals(spec, schedule, left, right)
    except (InfeasibleError, DegenerateParamsError, ExhaustedError) as e:
        logging.warning(f"Trapezoid h={spec.height:g}: quadrilateral stack unavailable ({e}), packing naively")
        return _fallback(spec, region, ("fallback",), str(e))

    def _hit(p: Point, theta: float) -> Point:
        return Line(p, (math.cos(theta), -math.sin(theta))).intersect(right)

    parts: List[Layout] = []
    labels: List[str] = []
    gaps: List[Tuple[Region, List[GridBlock]]] = []

    top_region = Region.from_xy([(0.0, h), first.as_tuple(), _hit(first, thetas[0]).as_tuple(), (w, h)])
    parts.append(pack_naive_region(top_region, tag="top"))
    labels.append("top")

    for i, packing in enumerate(packings):
        next_theta = packing.params.theta + packing.params.sigma2
        if i > 0:
            above = packings[i - 1]
            above_theta = above.params.theta + above.params.sigma2
            gap_region = Region.from_xy([
                (0.0, _edge_at_left(above, above_theta)),
                anchors[i].as_tuple(),
                _hit(anchors[i], thetas[i]).as_tuple(),
                above.vertices["C"].as_tuple(),
            ])
            gaps.append((gap_region, _columns(above)))
        a, d = packing.vertices["A"], packing.vertices["D"]
        if a.x > TRIM_MIN_WIDTH:
            trim = Region.from_xy([
                anchors[i].as_tuple(), (0.0, _edge_at_left(packing, next_theta)), d.as_tuple(), a.as_tuple(),
            ])
            parts.append(Layout(trim))
            labels.append("trim")
        parts.append(packing.layout)
        labels.append("quadrilateral")

    last = packings[-1]
    bottom_region = Region.from_xy([
        (0.0, _edge_at_left(last, last.params.theta + last.params.sigma2)),
        (0.0, 0.0),
        (big, 0.0),
        last.vertices["C"].as_tuple(),
    ])
    parts.append(pack_naive_region(bottom_region, tag="bottom"))
    labels.append("bottom")

    meta = {
        "flags": [],
        "quadrilaterals": len(packings),
        "thetas": list(thetas),
        "schedule_length": len(schedule.theta),
        "budget": quadrilateral_budget(schedule),
    }
    layout = merge_layouts(region, parts, labels=labels, meta=meta)
    for gap_region, columns in gaps:
        layout = fill_gap(gap_region, columns, layout, verify=False)
    ensure_verified(layout, "pack_right_trapezoid")
    stats = measure_waste(layout)
    logging.info(
        f"Trapezoid h={h:g} w={w:g}: {len(packings)} quadrilaterals, {stats.square_count} squares, "
        f"waste {stats.waste:.3f}"
    )
    return layout, stats
