import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Tuple

import numpy as np

from sqpack.domain.errors import InfeasibleError, InvalidRegionError, SqpackError

# --- GEOMETRY CONSTANTS ---
QUARTER_TURN = math.pi / 2
EIGHTH_TURN = math.pi / 4
# Minimum sine of the turning angle at a vertex for it to count as a corner
COLLINEAR_TOLERANCE = 1e-12
SQUARE_HALF = 0.5


def canonical_angle(angle):
    """Map an angle (scalar or array) into [-pi/4, pi/4) using the square's 4-fold symmetry."""
    return np.mod(np.asarray(angle, dtype=float) + EIGHTH_TURN, QUARTER_TURN) - EIGHTH_TURN


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise SqpackError(f"Point coordinates must be finite, got ({self.x}, {self.y})")

    def translated(self, dx: float, dy: float) -> "Point":
        return Point(self.x + dx, self.y + dy)

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class PlacedSquare:
    center: Point
    angle: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "angle", float(canonical_angle(self.angle)))

    def corners(self) -> np.ndarray:
        return square_corners(np.array([self.center.as_tuple()]), np.array([self.angle]))[0]


@dataclass(frozen=True)
class Line:
    """Infinite line through `point` along the unit vector `direction`."""
    point: Point
    direction: Tuple[float, float]

    def __post_init__(self):
        dx, dy = self.direction
        norm = math.hypot(dx, dy)
        if norm == 0.0:
            raise SqpackError("Line direction must be non-zero")
        object.__setattr__(self, "direction", (dx / norm, dy / norm))

    @classmethod
    def through(cls, p: Point, q: Point) -> "Line":
        return cls(p, (q.x - p.x, q.y - p.y))

    @classmethod
    def vertical(cls, x: float) -> "Line":
        return cls(Point(x, 0.0), (0.0, 1.0))

    def at(self, t: float) -> Point:
        return Point(self.point.x + t * self.direction[0], self.point.y + t * self.direction[1])

    def x_at(self, y: float) -> float:
        dx, dy = self.direction
        if dy == 0.0:
            raise InfeasibleError("horizontal line has no unique x for a given y")
        return self.point.x + (y - self.point.y) * dx / dy

    def y_at(self, x: float) -> float:
        dx, dy = self.direction
        if dx == 0.0:
            raise InfeasibleError("vertical line has no unique y for a given x")
        return self.point.y + (x - self.point.x) * dy / dx

    def intersect(self, other: "Line") -> Point:
        (ax, ay), (bx, by) = self.direction, other.direction
        denom = ax * by - ay * bx
        if abs(denom) < 1e-15:
            raise InfeasibleError("lines are parallel")
        wx, wy = other.point.x - self.point.x, other.point.y - self.point.y
        t = (wx * by - wy * bx) / denom
        return self.at(t)


def _signed_area(xy: np.ndarray) -> float:
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@dataclass(frozen=True)
class Region:
    """Strictly convex polygon with counter-clockwise vertices."""
    vertices: Tuple[Point, ...]

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        if len(self.vertices) < 3:
            raise InvalidRegionError(f"Region needs at least 3 vertices, got {len(self.vertices)}")
        xy = self.array
        if _signed_area(xy) <= 0.0:
            raise InvalidRegionError("Region must be counter-clockwise with positive area")
        edges = np.roll(xy, -1, axis=0) - xy
        lengths = np.hypot(edges[:, 0], edges[:, 1])
        if np.any(lengths == 0.0):
            raise InvalidRegionError("Region has repeated vertices")
        nxt = np.roll(edges, -1, axis=0)
        cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
        if np.any(cross <= COLLINEAR_TOLERANCE * lengths * np.roll(lengths, -1)):
            raise InvalidRegionError("Region must be strictly convex")

    @classmethod
    def from_xy(cls, coords: Iterable[Sequence[float]]) -> "Region":
        return cls(tuple(Point(float(x), float(y)) for x, y in coords))

    @classmethod
    def rectangle(cls, x0: float, y0: float, x1: float, y1: float) -> "Region":
        return cls.from_xy([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])

    @cached_property
    def array(self) -> np.ndarray:
        return np.array([p.as_tuple() for p in self.vertices], dtype=float)

    @cached_property
    def half_planes(self) -> Tuple[np.ndarray, np.ndarray]:
        """Outward unit normals and offsets: a point p is inside iff normals @ p <= offsets."""
        xy = self.array
        edges = np.roll(xy, -1, axis=0) - xy
        normals = np.column_stack([edges[:, 1], -edges[:, 0]])
        normals /= np.hypot(normals[:, 0], normals[:, 1])[:, None]
        offsets = np.einsum("ij,ij->i", normals, xy)
        return normals, offsets

    @property
    def area(self) -> float:
        return polygon_area(self)

    @property
    def perimeter(self) -> float:
        xy = self.array
        edges = np.roll(xy, -1, axis=0) - xy
        return float(np.hypot(edges[:, 0], edges[:, 1]).sum())

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        xy = self.array
        return float(xy[:, 0].min()), float(xy[:, 1].min()), float(xy[:, 0].max()), float(xy[:, 1].max())

    def excess(self, points: np.ndarray) -> np.ndarray:
        """Largest half-plane violation of each point (<= 0 means inside)."""
        normals, offsets = self.half_planes
        pts = np.asarray(points, dtype=float)
        return (pts @ normals.T - offsets).max(axis=-1)

    def column_span(self, x0: float, x1: float) -> Tuple[float, float]:
        """(lo, hi) such that the rectangle [x0, x1] x [y0, y1] fits iff lo <= y0 and y1 <= hi."""
        normals, offsets = self.half_planes
        lo, hi = -math.inf, math.inf
        for (nx, ny), o in zip(normals, offsets):
            for x in (x0, x1):
                rhs = o - nx * x
                if ny > 1e-15:
                    hi = min(hi, rhs / ny)
                elif ny < -1e-15:
                    lo = max(lo, rhs / ny)
                elif rhs < -1e-9 * max(1.0, abs(o)):
                    return math.inf, -math.inf
        return lo, hi

    def transformed(self, matrix: np.ndarray, shift: Sequence[float]) -> "Region":
        xy = self.array @ np.asarray(matrix, dtype=float).T + np.asarray(shift, dtype=float)
        return convex_region(xy)


def convex_region(points: Iterable[Sequence[float]], tolerance: float = 1e-9) -> Region:
    """Build a Region from a convex point cycle, dropping repeated and collinear points."""
    xy = np.array([tuple(p.as_tuple()) if isinstance(p, Point) else tuple(p) for p in points], dtype=float)
    if len(xy) >= 3 and _signed_area(xy) < 0.0:
        xy = xy[::-1]
    scale = max(1.0, float(np.abs(xy).max())) if len(xy) else 1.0
    kept = []
    for p in xy:
        if not kept or np.hypot(*(p - kept[-1])) > tolerance * scale:
            kept.append(p)
    if len(kept) > 1 and np.hypot(*(kept[0] - kept[-1])) <= tolerance * scale:
        kept.pop()
    changed = True
    while changed and len(kept) >= 3:
        changed = False
        for i in range(len(kept)):
            a, b, c = kept[i - 1], kept[i], kept[(i + 1) % len(kept)]
            e1, e2 = b - a, c - b
            cross = e1[0] * e2[1] - e1[1] * e2[0]
            if cross <= tolerance * np.hypot(*e1) * np.hypot(*e2):
                kept.pop(i)
                changed = True
                break
    return Region.from_xy(kept)


@dataclass(frozen=True)
class GridBlock:
    """cols x rows lattice of unit squares sharing one orientation, counted analytically.

    `origin` is the lower-left corner in the block's own frame; the block is rotated
    by `angle` about it.
    """
    origin: Point
    cols: int
    rows: int
    angle: float = 0.0

    def __post_init__(self):
        if int(self.cols) < 1 or int(self.rows) < 1:
            raise SqpackError(f"GridBlock needs cols >= 1 and rows >= 1, got {self.cols}x{self.rows}")
        object.__setattr__(self, "cols", int(self.cols))
        object.__setattr__(self, "rows", int(self.rows))
        object.__setattr__(self, "angle", float(self.angle))

    @property
    def count(self) -> int:
        return self.cols * self.rows

    @property
    def axes(self) -> Tuple[np.ndarray, np.ndarray]:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([c, s]), np.array([-s, c])

    @property
    def center(self) -> Point:
        e1, e2 = self.axes
        cx, cy = np.array(self.origin.as_tuple()) + 0.5 * self.cols * e1 + 0.5 * self.rows * e2
        return Point(float(cx), float(cy))

    def corners(self) -> np.ndarray:
        e1, e2 = self.axes
        o = np.array(self.origin.as_tuple())
        return np.array([o, o + self.cols * e1, o + self.cols * e1 + self.rows * e2, o + self.rows * e2])

    def rectangle(self) -> Region:
        return Region.from_xy(self.corners())

    def square_centers(self) -> np.ndarray:
        e1, e2 = self.axes
        i, j = np.meshgrid(np.arange(self.cols) + 0.5, np.arange(self.rows) + 0.5, indexing="ij")
        o = np.array(self.origin.as_tuple())
        return o + i.reshape(-1, 1) * e1 + j.reshape(-1, 1) * e2

    @classmethod
    def from_center(cls, center: Sequence[float], cols: int, rows: int, angle: float) -> "GridBlock":
        c, s = math.cos(angle), math.sin(angle)
        ox = center[0] - 0.5 * cols * c + 0.5 * rows * s
        oy = center[1] - 0.5 * cols * s - 0.5 * rows * c
        return cls(Point(float(ox), float(oy)), cols, rows, angle)


def polygon_area(region: Region) -> float:
    """Shoelace area of a region; raises on degenerate polygons."""
    area = _signed_area(region.array)
    if area <= 0.0:
        raise InvalidRegionError(f"Degenerate polygon with area {area}")
    return area


def square_corners(centers: np.ndarray, angles: np.ndarray, half: float = SQUARE_HALF) -> np.ndarray:
    """Corners (N, 4, 2) of squares with half side `half`, counter-clockwise from lower-left."""
    c, s = np.cos(angles), np.sin(angles)
    local = np.array([[-half, -half], [half, -half], [half, half], [-half, half]])
    x = centers[:, None, 0] + local[None, :, 0] * c[:, None] - local[None, :, 1] * s[:, None]
    y = centers[:, None, 1] + local[None, :, 0] * s[:, None] + local[None, :, 1] * c[:, None]
    return np.stack([x, y], axis=-1)


def obb_overlap_depth(c1, h1, a1, c2, h2, a2) -> np.ndarray:
    """Separating-axis penetration depth of oriented rectangles; > 0 iff interiors intersect.

    Centers are (..., 2), half extents (..., 2), angles (...); arrays broadcast.
    """
    c1, h1, c2, h2 = (np.asarray(v, dtype=float) for v in (c1, h1, c2, h2))
    a1, a2 = np.asarray(a1, dtype=float), np.asarray(a2, dtype=float)
    d = c2 - c1
    cos1, sin1, cos2, sin2 = np.cos(a1), np.sin(a1), np.cos(a2), np.sin(a2)
    depth = None
    for ux, uy in ((cos1, sin1), (-sin1, cos1), (cos2, sin2), (-sin2, cos2)):
        r1 = h1[..., 0] * np.abs(ux * cos1 + uy * sin1) + h1[..., 1] * np.abs(uy * cos1 - ux * sin1)
        r2 = h2[..., 0] * np.abs(ux * cos2 + uy * sin2) + h2[..., 1] * np.abs(uy * cos2 - ux * sin2)
        gap = r1 + r2 - np.abs(d[..., 0] * ux + d[..., 1] * uy)
        depth = gap if depth is None else np.minimum(depth, gap)
    return depth


def overlap_depth(a: PlacedSquare, b: PlacedSquare, shrink: float = 0.0) -> float:
    half = SQUARE_HALF - shrink
    return float(obb_overlap_depth(
        np.array(a.center.as_tuple()), np.array([half, half]), a.angle,
        np.array(b.center.as_tuple()), np.array([half, half]), b.angle,
    ))


def squares_overlap(a: PlacedSquare, b: PlacedSquare, shrink: float = 0.0) -> bool:
    """True iff the squares, each shrunk by `shrink` per side, have intersecting interiors."""
    return overlap_depth(a, b, shrink) > 0.0


def square_in_region(s: PlacedSquare, region: Region, slack: float = 0.0) -> bool:
    return bool(region.excess(s.corners()).max() <= slack)
