import math

import numpy as np
import pytest

from sqpack.domain.errors import InvalidRegionError
from sqpack.domain.geometry import (
    GridBlock,
    Line,
    PlacedSquare,
    Point,
    Region,
    canonical_angle,
    convex_region,
    overlap_depth,
    polygon_area,
    square_in_region,
    squares_overlap,
)

RASTER_STEP = 1e-3


def _raster_overlap(a: PlacedSquare, b: PlacedSquare, step: float = RASTER_STEP) -> bool:
    """Sample a's square on a grid and test each sample against b."""
    ticks = np.arange(-0.5 + step / 2, 0.5, step)
    u, v = np.meshgrid(ticks, ticks)
    ca, sa = math.cos(a.angle), math.sin(a.angle)
    x = a.center.x + u * ca - v * sa
    y = a.center.y + u * sa + v * ca
    cb, sb = math.cos(b.angle), math.sin(b.angle)
    dx, dy = x - b.center.x, y - b.center.y
    lu, lv = dx * cb + dy * sb, -dx * sb + dy * cb
    return bool(np.any((np.abs(lu) < 0.5) & (np.abs(lv) < 0.5)))


def test_polygon_area_unit_square_and_triangle():
    assert polygon_area(Region.from_xy([(0, 0), (1, 0), (1, 1), (0, 1)])) == 1.0
    assert polygon_area(Region.from_xy([(0, 0), (1, 0), (0, 1)])) == 0.5


def test_region_rejects_clockwise_and_collinear():
    with pytest.raises(InvalidRegionError):
        Region.from_xy([(0, 0), (0, 1), (1, 1), (1, 0)])
    with pytest.raises(InvalidRegionError):
        Region.from_xy([(0, 0), (1, 0), (2, 0), (2, 2)])
    with pytest.raises(InvalidRegionError):
        Region.from_xy([(0, 0), (1, 0)])


def test_convex_region_drops_collinear_and_repeated_points():
    region = convex_region([(0, 0), (1, 0), (2, 0), (2, 0), (2, 2), (0, 2)])
    assert len(region.vertices) == 4
    assert region.area == pytest.approx(4.0)


def test_canonical_angle_range():
    angles = np.array([0.0, math.pi / 4, -math.pi / 4, math.pi / 2, 3.0, -7.0])
    out = canonical_angle(angles)
    assert np.all(out >= -math.pi / 4) and np.all(out < math.pi / 4)
    assert out[1] == pytest.approx(-math.pi / 4)
    assert out[3] == pytest.approx(0.0)


def test_squares_overlap_basic_cases():
    origin = PlacedSquare(Point(0, 0))
    assert not squares_overlap(origin, PlacedSquare(Point(2, 0)))
    assert squares_overlap(origin, PlacedSquare(Point(0.5, 0)))
    # touching edges do not overlap
    assert not squares_overlap(origin, PlacedSquare(Point(1, 0)))


def test_rotated_pair_matches_raster():
    a, b = PlacedSquare(Point(0, 0)), PlacedSquare(Point(1.2, 0), math.pi / 4)
    assert squares_overlap(a, b) == _raster_overlap(a, b)
    assert squares_overlap(a, b)


def test_overlap_symmetric_and_translation_invariant():
    rng = np.random.default_rng(7)
    for _ in range(200):
        c = rng.uniform(-1.5, 1.5, 2)
        a = PlacedSquare(Point(0.0, 0.0), rng.uniform(-1, 1))
        b = PlacedSquare(Point(*c), rng.uniform(-1, 1))
        shift = rng.uniform(-100, 100, 2)
        a2 = PlacedSquare(a.center.translated(*shift), a.angle)
        b2 = PlacedSquare(b.center.translated(*shift), b.angle)
        assert squares_overlap(a, b) == squares_overlap(b, a)
        assert squares_overlap(a, b, 1e-9) == squares_overlap(a2, b2, 1e-9)


def _agree_with_raster(seed: int, pairs: int, step: float, margin: float) -> int:
    rng = np.random.default_rng(seed)
    checked = 0
    for _ in range(pairs):
        gap = rng.uniform(0.8, 1.6)
        phi = rng.uniform(0, 2 * math.pi)
        a = PlacedSquare(Point(0.0, 0.0), rng.uniform(-math.pi / 4, math.pi / 4))
        b = PlacedSquare(Point(gap * math.cos(phi), gap * math.sin(phi)), rng.uniform(-math.pi / 4, math.pi / 4))
        if abs(overlap_depth(a, b)) < margin:
            continue
        assert squares_overlap(a, b) == _raster_overlap(a, b, step=step)
        checked += 1
    return checked


def test_overlap_agrees_with_raster_on_random_pairs():
    assert _agree_with_raster(11, pairs=150, step=2e-3, margin=2e-2) > 80


@pytest.mark.slow
def test_overlap_agrees_with_fine_raster_on_thousand_pairs():
    # a corner poke of depth 2e-3 holds a disk wider than the 1e-3 sampling grid
    assert _agree_with_raster(12, pairs=1000, step=RASTER_STEP, margin=2e-3) > 900


def test_square_in_region_with_slack():
    unit = Region.rectangle(0, 0, 1, 1)
    assert square_in_region(PlacedSquare(Point(0.5, 0.5)), unit, 0.0)
    assert not square_in_region(PlacedSquare(Point(0.6, 0.5)), unit, 0.0)
    assert square_in_region(PlacedSquare(Point(0.6, 0.5)), unit, 0.2)


def test_grid_block_rectangle_area_is_count():
    assert polygon_area(GridBlock(Point(3, 4), 7, 5).rectangle()) == 35.0
    tilted = GridBlock(Point(0.3, 0.7), 1, 12, -0.2)
    assert polygon_area(tilted.rectangle()) == pytest.approx(12.0, rel=1e-12)


def test_grid_block_from_center_round_trip():
    block = GridBlock(Point(1.5, -2.0), 3, 4, 0.3)
    again = GridBlock.from_center(block.center.as_tuple(), 3, 4, 0.3)
    assert again.origin.x == pytest.approx(1.5)
    assert again.origin.y == pytest.approx(-2.0)
    assert len(block.square_centers()) == 12


def test_line_intersection_and_column_span():
    hit = Line.vertical(2.0).intersect(Line(Point(0, 1), (1.0, 1.0)))
    assert (hit.x, hit.y) == pytest.approx((2.0, 3.0))

    trapezoid = Region.from_xy([(0, 0), (12, 0), (10, 8), (0, 8)])
    lo, hi = trapezoid.column_span(10.0, 11.0)
    assert lo == pytest.approx(0.0)
    assert hi == pytest.approx(4.0)
    lo, hi = trapezoid.column_span(12.5, 13.0)
    assert lo > hi
