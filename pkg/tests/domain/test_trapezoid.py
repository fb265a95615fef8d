import math

import numpy as np
import pytest

from sqpack.domain.errors import ExhaustedError, InfeasibleError
from sqpack.domain.geometry import GridBlock, Line, Point, Region
from sqpack.domain.models import Layout, TrapezoidSpec, merge_layouts
from sqpack.domain.strip import pack_naive_region
from sqpack.domain.trapezoid import (
    THETA_CEILING,
    anchor_spacing,
    fill_gap,
    find_anchor,
    theta_conditions,
    pack_right_trapezoid,
    select_theta_schedule,
    tilt_step,
)
from sqpack.domain.verifier import measure_waste, verify_layout

X = 1e4
WIDE = TrapezoidSpec(X, X**0.75, math.asin(X**-0.5))


def _lines(spec: TrapezoidSpec):
    top_right = Point(spec.small_base, spec.height)
    return Line.vertical(0.0), Line.through(top_right, Point(spec.large_base, 0.0))


def _ray_length(start: Point, theta: float, right: Line) -> float:
    hit = Line(start, (math.cos(theta), -math.sin(theta))).intersect(right)
    return math.hypot(hit.x - start.x, hit.y - start.y)


def test_schedule_constants():
    schedule = select_theta_schedule(WIDE)
    assert schedule.l == pytest.approx(0.9)
    assert schedule.u == pytest.approx(1.1)
    assert schedule.d == pytest.approx(0.12 * 0.81 / 1.1)
    assert schedule.d == pytest.approx(0.0883, abs=1e-4)
    assert schedule.omega == 0.25
    assert schedule.theta[0] == pytest.approx(math.atan(schedule.d * 0.1))
    assert all(t < THETA_CEILING for t in schedule.theta)
    assert list(schedule.theta) == sorted(schedule.theta)
    assert len(schedule.theta) >= math.floor(schedule.l / (4 * schedule.d**3) * X**0.25) + 1


def test_schedule_infeasible_for_steep_small_trapezoid():
    spec = TrapezoidSpec(100, 100**0.75, math.atan(100**-0.1), gamma=0.1)
    with pytest.raises(InfeasibleError):
        select_theta_schedule(spec)


def test_tilt_step_closed_form_and_bound():
    theta, sigma1 = 0.012, 0.001
    direct = (1 - math.cos(theta)) * (1 / math.cos(theta) - 1) / (math.sin(sigma1) / math.cos(theta + sigma1))
    assert tilt_step(theta, sigma1) == pytest.approx(direct, rel=1e-9)
    assert tilt_step(theta, sigma1) < math.tan(theta) ** 4 / (4 * math.sin(sigma1))


@pytest.mark.parametrize("sigma1", [1e-4, 1e-3, 0.01])
def test_theta_inequalities_on_grid(sigma1):
    for theta in np.arange(1, 1251) * 1e-4:
        checks = theta_conditions(float(theta), sigma1)
        assert all(checks.values()), (theta, checks)


def test_schedule_obeys_growth_bound():
    assert theta_conditions(0.01, WIDE.slope, select_theta_schedule(WIDE))["theta_growth"]


def test_anchor_spacing_scales_with_root_height():
    left, right = _lines(WIDE)
    spacing = anchor_spacing(left, right, 0.012)
    assert 0.5 * X**0.5 <= spacing <= 2 * X**0.5


@pytest.mark.parametrize("min_gap", [1.0, 5.0, 50.0])
def test_find_anchor_first_solution(min_gap):
    left, right = _lines(WIDE)
    theta = 0.012
    start = Point(0.0, WIDE.height)
    spacing = anchor_spacing(left, right, theta)
    anchor = find_anchor(left, right, theta, start, min_gap)
    drop = start.y - anchor.y
    assert anchor.x == 0.0
    assert min_gap - 1e-6 <= drop <= min_gap + spacing + 1e-6
    excess = _ray_length(anchor, theta, right) - math.tan(theta)
    assert excess == pytest.approx(round(excess), abs=1e-6)


def test_find_anchor_errors():
    left, right = _lines(WIDE)
    start = Point(0.0, WIDE.height)
    with pytest.raises(InfeasibleError):
        find_anchor(left, right, 0.012, start, 0.5)
    with pytest.raises(ExhaustedError):
        find_anchor(left, right, 0.012, start, 1.0, stop_y=WIDE.height)


def test_fill_gap_rectangle_is_exact():
    gap = Region.rectangle(0, 0, 7, 4)
    filled = fill_gap(gap, [], Layout(gap))
    stats = measure_waste(filled)
    assert stats.square_count == 28
    assert stats.waste == 0.0


def test_fill_gap_extends_columns_and_stacks_right_end():
    outer = Region.from_xy([(0, 0), (103, 0), (102.89, 11), (0, 11)])
    columns = [GridBlock(Point(k, 10), 1, 1) for k in range(100)]
    above = Layout(outer, grid_blocks=tuple(columns), tags=("column",) * 100)
    gap = Region.from_xy([(0, 0), (103, 0), (102.9, 10), (0, 10)])
    filled = fill_gap(gap, columns, above)
    assert verify_layout(filled) == []
    added = filled.total_count - above.total_count
    assert added == 100 * 10 + 2 * 10
    assert gap.area - added <= 2 * (10 + 100 * 0.01 * 10)


def test_fill_gap_sloped_under_columns():
    outer = Region.from_xy([(0, 0), (100.11, 0), (100, 11), (0, 11)])
    columns = [GridBlock(Point(k, 10), 1, 1) for k in range(100)]
    above = Layout(outer, grid_blocks=tuple(columns), tags=("column",) * 100)
    gap = Region.from_xy([(0, 0), (100.1, 0), (100, 10), (0, 10)])
    filled = fill_gap(gap, columns, above)
    added = filled.total_count - above.total_count
    assert added == 1000
    assert gap.area - added <= 40


def test_fill_gap_without_gap_is_identity():
    layout = Layout(Region.rectangle(0, 0, 2, 2))
    assert fill_gap(None, [], layout) is layout


def test_fill_gap_prefers_rows_under_offset_columns():
    gap = Region.rectangle(0, 0, 10.2, 5)
    columns = [GridBlock(Point(k + 0.5, 5), 1, 1) for k in range(9)]
    above = Layout(Region.rectangle(0, 0, 10.2, 6), grid_blocks=tuple(columns), tags=("column",) * 9)
    filled = fill_gap(gap, columns, above)
    assert verify_layout(filled) == []
    assert filled.total_count - above.total_count == 50


@pytest.mark.parametrize("columns", [0, 40, 100])
def test_fill_gap_never_loses_to_naive_rows(columns):
    gap = Region.from_xy([(0, 0), (103, 0), (100.4, 7.3), (0, 7.3)])
    above = [GridBlock(Point(k, 7.3), 1, 1) for k in range(columns)]
    filled = fill_gap(gap, above, Layout(gap))
    assert filled.total_count >= pack_naive_region(gap).total_count


def test_fill_gap_adds_zone_to_zoned_layout():
    band = Region.rectangle(0, 5, 10, 6)
    columns = [GridBlock(Point(k, 5), 1, 1) for k in range(10)]
    part = Layout(band, grid_blocks=tuple(columns), tags=("column",) * 10)
    above = merge_layouts(Region.rectangle(0, 0, 10, 6), [part], labels=["columns"])
    filled = fill_gap(Region.rectangle(0, 0, 10, 5), columns, above)
    assert [z.label for z in filled.zones] == ["columns", "gap"]
    assert measure_waste(filled).per_tag_waste["gap"] == pytest.approx(0.0, abs=1e-9)


@pytest.fixture(scope="module")
def thousand():
    return pack_right_trapezoid(TrapezoidSpec(1000, 1000**0.75, math.atan(1000**-0.5)))


def test_trapezoid_thousand_verifies(thousand):
    layout, stats = thousand
    assert stats.verified
    assert verify_layout(layout) == []
    assert layout.meta["quadrilaterals"] >= 1
    assert stats.waste <= 30 * 1000**0.75


def test_trapezoid_zone_waste_sums_to_total(thousand):
    layout, stats = thousand
    assert sum(stats.per_tag_waste.values()) == pytest.approx(stats.waste, rel=1e-6)
    assert {"top", "quadrilateral", "bottom"} <= set(stats.per_tag_waste)
    if layout.meta["quadrilaterals"] >= 2:
        assert "gap" in stats.per_tag_waste


def test_unsupported_exponents_fall_back():
    spec = TrapezoidSpec(1000, 1000**0.2, math.atan(1000**-0.5), beta=0.2, gamma=0.5)
    layout, stats = pack_right_trapezoid(spec)
    assert "asymptotic-conditions-unmet" in stats.flags
    assert verify_layout(layout) == []


def test_near_rectangle_wastes_almost_nothing():
    layout, stats = pack_right_trapezoid(TrapezoidSpec(100, 50, 1e-12))
    assert stats.verified
    assert stats.square_count == 5000
    assert stats.waste <= 1.0


@pytest.mark.slow
def test_trapezoid_waste_grows_sublinearly():
    xs = [500.0, 1000.0, 2000.0, 4000.0, 8000.0]
    wastes = []
    for x in xs:
        layout, stats = pack_right_trapezoid(TrapezoidSpec(x, x**0.75, math.atan(x**-0.5)))
        assert stats.verified
        assert stats.waste <= 30 * x**0.75
        wastes.append(stats.waste)
    slope = np.polyfit(np.log(xs), np.log(wastes), 1)[0]
    assert 0.6 <= slope <= 0.9
