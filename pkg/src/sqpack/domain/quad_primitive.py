"""Tightly packed quadrilateral ABCD.

Rows S_{i, .} of unit squares are tilted by theta below the top edge AB, each row
shifted by (delta2, -delta3) from the one above so that the right ends slide along
BC, which leans sigma1 off vertical. Where the left end of a row has drifted a full
unit to the right, the tilted squares of a column are swapped for an axis-aligned
column T_{., j}. The bottom edge CD falls at slope tan(theta + sigma2) under the
column bottoms.

Coordinates below are relative to A, with x to the right and y up.
"""
import logging
import math
from bisect import bisect_right
from typing import Dict, List, Tuple

import numpy as np
import shapely
from shapely import STRtree

from sqpack.domain.errors import ConstructionError, DegenerateParamsError, InfeasibleError, UnverifiedLayoutError
from sqpack.domain.geometry import GridBlock, Line, Point, Region, polygon_area
from sqpack.domain.models import Layout, PackingStats, QuadPacking, QuadParams
from sqpack.domain.verifier import ensure_verified, verify_layout

# --- QUADRILATERAL CONSTANTS ---
MAX_THETA = 0.3
MAX_SIGMA1 = 0.1
# i_j ceilings ignore this much excess over an integer
CEIL_TOLERANCE = 1e-9
ANGLE_MARGIN = 0.01
ROW_TAG = "S-row"
COLUMN_TAG = "T-column"
WASTE_GROUPS = ("W1", "W2", "W3", "W4", "W5", "W6", "W7")


def delta_terms(theta: float, sigma1: float) -> Tuple[float, float, float, float]:
    """(delta1, delta2, delta3, sigma2) for a row tilt theta and right-edge lean sigma1."""
    half = math.sin(0.5 * theta)
    one_minus_cos = 2.0 * half * half
    sec_minus_one = one_minus_cos / math.cos(theta)
    sec_tilt = 1.0 / math.cos(theta + sigma1)
    delta2 = sec_tilt * math.sin(sigma1)
    delta3 = sec_tilt * math.cos(sigma1)
    # tan(theta + sigma2) - tan(theta), subtracted inside the arctan to keep tiny sigma2 accurate
    rise = one_minus_cos / delta2 * sec_minus_one
    tan_theta = math.tan(theta)
    sigma2 = math.atan(rise / (1.0 + (tan_theta + rise) * tan_theta))
    return math.cos(theta), delta2, delta3, sigma2


def _drift(theta: float, delta2: float) -> float:
    half = math.sin(0.5 * theta)
    return 2.0 * half * half / delta2


def derive_params(m: int, theta: float, sigma1: float) -> QuadParams:
    if m < 3:
        raise InfeasibleError(f"quadrilateral needs m >= 3 columns, got {m}")
    if not 0 < theta <= MAX_THETA:
        raise InfeasibleError(f"theta must lie in (0, {MAX_THETA}], got {theta}")
    if not 0 < sigma1 <= MAX_SIGMA1:
        raise InfeasibleError(f"sigma1 must lie in (0, {MAX_SIGMA1}], got {sigma1}")
    if theta + sigma1 >= math.pi / 4:
        raise InfeasibleError(f"theta + sigma1 = {theta + sigma1} must stay below pi/4")

    delta1, delta2, delta3, sigma2 = delta_terms(theta, sigma1)
    if sigma2 < 0 or theta + sigma2 >= math.pi / 4:
        raise InfeasibleError(f"derived sigma2 = {sigma2} out of range for theta = {theta}")

    drift = _drift(theta, delta2)
    i_of_j = tuple(math.ceil((j - 1) * drift - CEIL_TOLERANCE) + 1 for j in range(1, m + 1))
    i_m = i_of_j[-1]
    if i_m < 2:
        raise DegenerateParamsError(f"quadrilateral would have {i_m} row(s); need at least 2")
    if i_of_j[1] < 2:
        raise DegenerateParamsError("first vertical column would start at the top row")

    sec_minus_one = 1.0 / math.cos(theta) - 1.0
    tan_theta = math.tan(theta)
    gamma_j = tuple((i_of_j[j - 1] - i_of_j[j - 2]) * sec_minus_one + tan_theta for j in range(3, m + 1))
    return QuadParams(m, theta, sigma1, delta1, delta2, delta3, sigma2, i_of_j, i_m, gamma_j)


class _QuadFrame:
    """Closed-form positions of every square, column and vertex, relative to A."""

    def __init__(self, params: QuadParams):
        self.p = params
        th = params.theta
        self.cos, self.sin, self.tan = math.cos(th), math.sin(th), math.tan(th)
        self.sec = 1.0 / self.cos
        self.e1 = np.array([self.cos, -self.sin])
        self.e2 = np.array([self.sin, self.cos])
        self.step = np.array([params.delta2, -params.delta3])
        self.slope = math.tan(th + params.sigma2)

        m, i_m = params.m, params.i_m
        # first j < m with i < i_{j+1}, else m; i_of_j is non-decreasing
        self.row_starts = tuple(bisect_right(params.i_of_j, i, 1, m) for i in range(1, i_m + 1))

        self.column_tops = tuple(self.row_bottom(params.i(k + 1) - 1, k) for k in range(1, m))
        self.column_lengths = tuple(i_m - params.i(k + 1) + 1 for k in range(1, m))
        self.column_bottoms = tuple(t - n for t, n in zip(self.column_tops, self.column_lengths))

        self.A = np.zeros(2)
        self.B = (m + self.tan) * self.e1
        self.D = np.array([0.0, self.column_bottoms[0] - (self.sec - 1.0)])
        bottom = Line(Point(*self.D), (1.0, -self.slope))
        right = Line(Point(*self.B), (math.sin(params.sigma1), -math.cos(params.sigma1)))
        self.C = np.array(bottom.intersect(right).as_tuple())

    def top_left(self, i: int, j: int) -> np.ndarray:
        return (self.tan + j - 1) * self.e1 + (i - 1) * self.step

    def bottom_left(self, i: int, j: int) -> np.ndarray:
        return self.top_left(i, j) - self.e2

    def row_bottom(self, i: int, x: float) -> float:
        return -self.sec - (i - 1) * self.p.delta3 - self.tan * (x - (i - 1) * self.p.delta2)

    def row_top(self, i: int, x: float) -> float:
        return self.row_bottom(i, x) + self.sec

    def bottom_edge(self, x: float) -> float:
        return self.D[1] - self.slope * x

    def row_blocks(self, shift: np.ndarray) -> List[GridBlock]:
        blocks = []
        for i in range(1, self.p.i_m):
            j0 = self.row_starts[i - 1]
            q = self.bottom_left(i, j0) + shift
            blocks.append(GridBlock(Point(float(q[0]), float(q[1])), self.p.m - j0 + 1, 1, -self.p.theta))
        return blocks

    def column_blocks(self, shift: np.ndarray) -> List[GridBlock]:
        return [
            GridBlock(Point(float(k - 1 + shift[0]), float(bottom + shift[1])), 1, n)
            for k, (bottom, n) in enumerate(zip(self.column_bottoms, self.column_lengths), start=1)
        ]

    def waste_zones(self) -> Dict[str, List[np.ndarray]]:
        """Polygons around each wasted sliver, grouped W1..W6; whatever they miss is W7."""
        p = self.p
        zones: Dict[str, List[np.ndarray]] = {g: [] for g in WASTE_GROUPS[:-1]}
        lean = np.array([math.sin(p.sigma1), -math.cos(p.sigma1)])
        for i in range(1, p.i_m + 1):
            j0 = self.row_starts[i - 1]
            top, q = self.top_left(i, j0), self.bottom_left(i, j0)
            r = np.array([q[0], self.row_top(i, q[0])])
            zones["W1"].append(np.array([top, q, r]))
            x_left = float(j0 - 1)
            if q[0] - x_left > 1e-15:
                zones["W2"].append(np.array([
                    (x_left, self.row_top(i, x_left)), r, q, (x_left, self.row_bottom(i, x_left)),
                ]))
            corner = self.top_left(i, p.m) + self.e1
            low = corner - self.e2
            # walk down BC from the row's top-right corner to the row's bottom line
            t = (corner[1] - self.row_bottom(i, corner[0])) / (math.cos(p.sigma1) - self.tan * math.sin(p.sigma1))
            zones["W4"].append(np.array([corner, low, corner + t * lean]))
        for k in range(1, p.m):
            y_top, y_bot = self.column_tops[k - 1], self.column_bottoms[k - 1]
            zones["W3"].append(np.array([(k - 1, y_top), (k, y_top), (k - 1, y_top + self.tan)]))
            left, right = self.bottom_edge(k - 1), self.bottom_edge(k)
            if y_bot - left > 1e-15:
                zones["W6"].append(np.array([(k - 1, left), (k, left), (k, y_bot), (k - 1, y_bot)]))
            zones["W5"].append(np.array([(k - 1, left), (k, left), (k, right)]))
        return zones


def _interior_angles(vertices: np.ndarray) -> np.ndarray:
    prev = np.roll(vertices, 1, axis=0) - vertices
    nxt = np.roll(vertices, -1, axis=0) - vertices
    cos = np.einsum("ij,ij->i", prev, nxt) / (np.linalg.norm(prev, axis=1) * np.linalg.norm(nxt, axis=1))
    return np.arccos(np.clip(cos, -1.0, 1.0))


def _breakdown(frame: _QuadFrame, origin: np.ndarray, region: Region, layout: Layout) -> Dict[str, float]:
    """Empty area inside each group's zones, earlier groups claiming first.

    Packed items are pairwise disjoint, so their share of a zone is summed item by item
    instead of being cut out of one union.
    """
    container = shapely.Polygon(region.array)
    items = shapely.polygons(np.array([b.corners() for b in layout.grid_blocks]))
    tree = STRtree(items)
    total = polygon_area(region) - layout.total_count
    breakdown: Dict[str, float] = {}
    claimed = shapely.Polygon()
    for group, polys in frame.waste_zones().items():
        if not polys:
            breakdown[group] = 0.0
            continue
        zone = shapely.union_all(shapely.polygons(np.array(polys) + origin))
        fresh = shapely.intersection(shapely.difference(zone, claimed), container)
        claimed = shapely.union(claimed, zone)
        parts = shapely.get_parts(fresh)
        hit, item = tree.query(parts, predicate="intersects")
        covered = float(shapely.area(shapely.intersection(parts[hit], items[item])).sum()) if len(hit) else 0.0
        breakdown[group] = float(shapely.area(fresh)) - covered
    breakdown["W7"] = total - sum(breakdown.values())
    return breakdown


def build_quad_packing(params: QuadParams, origin: Point = Point(0.0, 0.0)) -> QuadPacking:
    """Lay out the rows and columns for `params` with vertex A at `origin`."""
    frame = _QuadFrame(params)
    shift = np.array(origin.as_tuple())

    # Each column bottom-left corner must sit on or above CD
    for k, bottom in enumerate(frame.column_bottoms, start=1):
        gap = bottom - frame.bottom_edge(k - 1)
        if gap < -1e-12:
            raise ConstructionError(f"column {k} crosses CD by {-gap}")

    corners = np.array([frame.A, frame.D, frame.C, frame.B]) + shift
    region = Region.from_xy(corners)
    limit = params.theta + params.sigma1 + params.sigma2 + ANGLE_MARGIN
    deviation = np.abs(_interior_angles(corners) - math.pi / 2)
    if deviation.max() > limit:
        worst = deviation.max()
        raise ConstructionError(f"quadrilateral corner deviates {worst:.4f} rad from square, limit {limit:.4f}")

    rows, columns = frame.row_blocks(shift), frame.column_blocks(shift)
    layout = Layout(
        region,
        grid_blocks=tuple(rows + columns),
        tags=(ROW_TAG,) * len(rows) + (COLUMN_TAG,) * len(columns),
        meta={"m": params.m, "i_m": params.i_m, "theta": params.theta, "sigma1": params.sigma1},
    )
    ensure_verified(layout, "build_quad_packing")

    expected = params.m * params.i_m - 1
    if layout.total_count != expected:
        raise ConstructionError(f"quadrilateral holds {layout.total_count} squares, expected {expected}")

    breakdown = _breakdown(frame, shift, region, layout)
    area = polygon_area(region)
    stats = PackingStats(area, layout.total_count, area - layout.total_count, breakdown, verified=True)
    names = {"A": frame.A, "B": frame.B, "C": frame.C, "D": frame.D}
    logging.info(
        f"Quadrilateral m={params.m} i_m={params.i_m}: {stats.square_count} squares, waste {stats.waste:.4f}"
    )
    return QuadPacking(
        params=params,
        region=region,
        layout=layout,
        stats=stats,
        vertices={k: Point(float(v[0] + shift[0]), float(v[1] + shift[1])) for k, v in names.items()},
        row_starts=frame.row_starts[:-1],
        column_tops=tuple(t + shift[1] for t in frame.column_tops),
        column_bottoms=tuple(b + shift[1] for b in frame.column_bottoms),
    )


def waste_breakdown(packing: QuadPacking) -> Dict[str, float]:
    """Area of each waste group W1..W7; the groups sum to the total waste."""
    if not packing.stats.verified or verify_layout(packing.layout):
        raise UnverifiedLayoutError("waste breakdown needs a verified quadrilateral packing")
    a = packing.vertices["A"]
    frame = _QuadFrame(packing.params)
    return _breakdown(frame, np.array(a.as_tuple()), packing.region, packing.layout)


def corner_metrics(packing: QuadPacking) -> Dict[str, float]:
    """Side lengths measured on the built quadrilateral next to their closed forms.

    E is the top-right corner of the last column's bottom square, G the top-right
    corner of the deleted square S_{i_m, m}, and F the point of CD below E.
    """
    p = packing.params
    v = {k: np.array(pt.as_tuple()) for k, pt in packing.vertices.items()}
    frame = _QuadFrame(p)
    tan, sec = frame.tan, frame.sec
    ab = m_tan = p.m + tan
    ad = p.i_m + tan + (sec - 1.0) * p.i(2)
    bh, ah = m_tan * frame.cos, m_tan * frame.sin
    tan_s1 = math.tan(p.sigma1)
    ck = (bh + tan_s1 * (ad - ah)) / (1.0 - frame.slope * tan_s1)

    e = np.array([p.m - 1.0, frame.column_bottoms[-1] + 1.0])
    f = np.array([e[0], frame.bottom_edge(e[0])])
    g = frame.top_left(p.i_m, p.m) + frame.e1
    return {
        "AB": float(np.linalg.norm(v["B"] - v["A"])),
        "AB_formula": ab,
        "AD": float(np.linalg.norm(v["D"] - v["A"])),
        "AD_formula": ad,
        "CK": float(v["C"][0] - v["A"][0]),
        "CK_formula": ck,
        "EF": float(e[1] - f[1]),
        "EF_bound": 1.0 + 2.0 * (sec - 1.0) + frame.slope,
        "EG": float(np.linalg.norm(g - e)),
    }


def approximations(params: QuadParams) -> Dict[str, Tuple[float, float]]:
    """First-order forms next to exact values, as (exact, approximate) pairs."""
    th, s1 = params.theta, params.sigma1
    sigma2_approx = th**4 / (4.0 * s1)
    pairs = {
        "delta3": (params.delta3, 1.0 + th * (th + 2.0 * s1) / 2.0),
        "sigma2": (params.sigma2, sigma2_approx),
        "i_m": (float(params.i_m), math.sqrt(params.sigma2 / s1) * params.m),
    }
    if params.gamma_j:
        pairs["gamma"] = (float(np.mean(params.gamma_j)), sigma2_approx + th)
    return pairs
