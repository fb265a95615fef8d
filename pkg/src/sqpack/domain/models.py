import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from sqpack.domain.errors import InfeasibleError, SqpackError
from sqpack.domain.geometry import GridBlock, PlacedSquare, Point, Region, canonical_angle

DEFAULT_SHRINK = 1e-9
DEFAULT_SLACK = 1e-9


@dataclass(frozen=True)
class Zone:
    """Labelled piece of a layout's container; zones of one layout partition it."""
    label: str
    region: Region


@dataclass(eq=False)
class Layout:
    """Packed unit squares inside a convex container.

    Materialized squares live in numpy arrays; `grid_blocks` are counted without
    being expanded. `tags` holds one provenance label per item, squares first,
    then blocks.
    """
    region: Region
    centers: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    angles: np.ndarray = field(default_factory=lambda: np.zeros(0))
    grid_blocks: Tuple[GridBlock, ...] = ()
    tags: Tuple[str, ...] = ()
    zones: Tuple[Zone, ...] = ()
    zone_index: Optional[np.ndarray] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float).reshape(-1, 2)
        self.angles = canonical_angle(np.asarray(self.angles, dtype=float).reshape(-1))
        self.grid_blocks = tuple(self.grid_blocks)
        self.tags = tuple(self.tags)
        self.zones = tuple(self.zones)
        if len(self.angles) != len(self.centers):
            raise SqpackError(f"{len(self.centers)} centers but {len(self.angles)} angles")
        if len(self.tags) != self.item_count:
            raise SqpackError(f"{self.item_count} items but {len(self.tags)} tags")
        if self.zones:
            if self.zone_index is None:
                raise SqpackError("zoned layout needs a zone index per item")
            self.zone_index = np.asarray(self.zone_index, dtype=np.int64).reshape(-1)
            if len(self.zone_index) != self.item_count:
                raise SqpackError(f"{self.item_count} items but {len(self.zone_index)} zone indices")
        else:
            self.zone_index = None

    @classmethod
    def from_squares(
        cls,
        region: Region,
        squares: Sequence[PlacedSquare] = (),
        grid_blocks: Sequence[GridBlock] = (),
        tags: Optional[Sequence[str]] = None,
        label: str = "untagged",
    ) -> "Layout":
        centers = np.array([s.center.as_tuple() for s in squares], dtype=float).reshape(-1, 2)
        angles = np.array([s.angle for s in squares], dtype=float)
        if tags is None:
            tags = [label] * (len(squares) + len(grid_blocks))
        return cls(region, centers, angles, tuple(grid_blocks), tuple(tags))

    @property
    def square_count(self) -> int:
        return len(self.centers)

    @property
    def item_count(self) -> int:
        return len(self.centers) + len(self.grid_blocks)

    @property
    def total_count(self) -> int:
        return len(self.centers) + sum(b.count for b in self.grid_blocks)

    @property
    def squares(self) -> List[PlacedSquare]:
        return [PlacedSquare(Point(float(x), float(y)), float(a)) for (x, y), a in zip(self.centers, self.angles)]

    @property
    def square_tags(self) -> Tuple[str, ...]:
        return self.tags[: self.square_count]

    @property
    def block_tags(self) -> Tuple[str, ...]:
        return self.tags[self.square_count:]

    def tag_census(self) -> Dict[str, int]:
        """Unit squares per tag, analytic blocks included."""
        census: Dict[str, int] = {}
        for tag in self.square_tags:
            census[tag] = census.get(tag, 0) + 1
        for tag, block in zip(self.block_tags, self.grid_blocks):
            census[tag] = census.get(tag, 0) + block.count
        return census

    def with_squares(self, squares: Sequence[PlacedSquare], tag: str) -> "Layout":
        extra = Layout.from_squares(self.region, squares, label=tag)
        return merge_layouts(self.region, [self, extra], keep_zones=False)

    def transformed(self, matrix: Sequence[Sequence[float]], shift: Sequence[float]) -> "Layout":
        """Apply an orthogonal map (rotation or reflection) followed by a translation."""
        mat = np.asarray(matrix, dtype=float)
        off = np.asarray(shift, dtype=float)
        det = float(np.linalg.det(mat))
        if abs(abs(det) - 1.0) > 1e-12:
            raise SqpackError("layout transforms must be orthogonal")
        phi = math.atan2(mat[1, 0], mat[0, 0])

        def _angle(a):
            return phi + a if det > 0 else phi - a

        blocks = []
        for block in self.grid_blocks:
            c = np.array(block.center.as_tuple()) @ mat.T + off
            blocks.append(GridBlock.from_center(c, block.cols, block.rows, _angle(block.angle)))
        zones = tuple(Zone(z.label, z.region.transformed(mat, off)) for z in self.zones)
        return Layout(
            region=self.region.transformed(mat, off),
            centers=self.centers @ mat.T + off,
            angles=_angle(self.angles),
            grid_blocks=tuple(blocks),
            tags=self.tags,
            zones=zones,
            zone_index=self.zone_index,
            meta=dict(self.meta),
        )


def merge_layouts(
    region: Region,
    parts: Sequence[Layout],
    labels: Optional[Sequence[str]] = None,
    keep_zones: bool = True,
    meta: Optional[Dict[str, Any]] = None,
) -> Layout:
    """Concatenate parts into one layout over `region`.

    With `keep_zones`, every part contributes its own zones, or one zone labelled
    from `labels` covering its region when it has none.
    """
    centers, angles, blocks, tags, zones, zone_index = [], [], [], [], [], []
    square_zone, block_zone = [], []
    for k, part in enumerate(parts):
        centers.append(part.centers)
        angles.append(part.angles)
        blocks.extend(part.grid_blocks)
        if not keep_zones:
            continue
        if part.zones:
            index = part.zone_index + len(zones)
            zones.extend(part.zones)
        else:
            label = labels[k] if labels is not None else (part.tags[0] if part.tags else "part")
            index = np.full(part.item_count, len(zones), dtype=np.int64)
            zones.append(Zone(label, part.region))
        square_zone.append(index[: part.square_count])
        block_zone.append(index[part.square_count:])
    for part in parts:
        tags.extend(part.square_tags)
    for part in parts:
        tags.extend(part.block_tags)
    if keep_zones:
        zone_index = np.concatenate(square_zone + block_zone) if parts else np.zeros(0, dtype=np.int64)
    return Layout(
        region=region,
        centers=np.concatenate(centers) if parts else np.zeros((0, 2)),
        angles=np.concatenate(angles) if parts else np.zeros(0),
        grid_blocks=tuple(blocks),
        tags=tuple(tags),
        zones=tuple(zones) if keep_zones else (),
        zone_index=zone_index if keep_zones else None,
        meta=dict(meta or {}),
    )


@dataclass(frozen=True)
class Violation:
    kind: str  # "overlap" or "containment"
    indices: Tuple[int, ...]
    magnitude: float


@dataclass
class PackingStats:
    region_area: float
    square_count: int
    waste: float
    per_tag_waste: Dict[str, float] = field(default_factory=dict)
    verified: bool = False
    flags: Tuple[str, ...] = ()


# --- STRIP ---

@dataclass(frozen=True)
class StripSpec:
    span: float
    length: float
    stack_size: int

    def __post_init__(self):
        if self.span < 2:
            raise InfeasibleError(f"strip span must be >= 2, got {self.span}")
        if not 0 <= self.stack_size - self.span <= 2:
            raise InfeasibleError(f"stack size {self.stack_size} must exceed span {self.span} by at most 2")
        if self.length <= 0:
            raise InfeasibleError(f"strip length must be positive, got {self.length}")


@dataclass(frozen=True)
class TiltSolution:
    alpha: float
    stack_footprint_width: float

    @property
    def pitch(self) -> float:
        """Horizontal distance between neighbouring flush stacks."""
        return 1.0 / math.cos(self.alpha)


# --- QUADRILATERAL ---

@dataclass(frozen=True)
class QuadParams:
    m: int
    theta: float
    sigma1: float
    delta1: float
    delta2: float
    delta3: float
    sigma2: float
    i_of_j: Tuple[int, ...]  # i_of_j[j - 1] is i_j
    i_m: int
    gamma_j: Tuple[float, ...]  # gamma_j[j - 3] is Gamma_j

    def i(self, j: int) -> int:
        return self.i_of_j[j - 1]

    def gamma(self, j: int) -> float:
        return self.gamma_j[j - 3]


@dataclass
class QuadPacking:
    params: QuadParams
    region: Region
    layout: Layout
    stats: PackingStats
    vertices: Dict[str, Point] = field(default_factory=dict)
    # row_starts[i - 1]: first kept tilted column of row i; layout.grid_blocks[i - 1] is that row
    row_starts: Tuple[int, ...] = ()
    # column_tops[k - 1], column_bottoms[k - 1]: vertical column k, spanning x in [k - 1, k] from A
    column_tops: Tuple[float, ...] = ()
    column_bottoms: Tuple[float, ...] = ()


# --- TRAPEZOID ---

@dataclass(frozen=True)
class TrapezoidSpec:
    """Right trapezoid: vertical left side, short top base, right edge `slope` radians off vertical."""
    height: float
    small_base: float
    slope: float
    beta: float = 0.75
    gamma: float = 0.5

    def __post_init__(self):
        if self.height <= 0 or self.small_base <= 0:
            raise InfeasibleError(f"trapezoid needs positive height and base, got {self.height}, {self.small_base}")
        if not 0 < self.slope < math.pi / 4:
            raise InfeasibleError(f"trapezoid slope must lie in (0, pi/4), got {self.slope}")

    @property
    def large_base(self) -> float:
        return self.small_base + self.height * math.tan(self.slope)

    def region(self) -> Region:
        return Region.from_xy([
            (0.0, 0.0), (self.large_base, 0.0), (self.small_base, self.height), (0.0, self.height),
        ])

    @property
    def asymptotic_conditions_met(self) -> bool:
        b, g = self.beta, self.gamma
        return self.height >= 32 and b >= 1 - g and 1 - max(b, g) <= g / 2 and g <= 0.5


@dataclass(frozen=True)
class ThetaSchedule:
    """Row tilts for successive quadrilaterals down a trapezoid of height x."""
    l: float  # noqa: E741
    u: float
    d: float
    omega: float
    theta: Tuple[float, ...]
    x: float = 0.0
    sigma1: float = 0.0


# --- SQUARE ---

@dataclass(frozen=True)
class SquarePlan:
    x: float
    beta: float
    epsilon: float
    nu: float
    m: int
    decomposition: Tuple[Tuple[Region, str], ...]
    grid_side: int = 0
    slab_height: float = 0.0
    tilt: float = 0.0
    end_base: float = 0.0


# --- ANALYSIS ---

@dataclass(frozen=True)
class SweepRecord:
    x: float
    method: str
    waste: float
    squares: int
    seconds: float
    verified: bool


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r2: float
    n: int
