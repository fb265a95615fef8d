import math
from itertools import combinations

import numpy as np
import pytest
import shapely

from sqpack.domain.errors import InfeasibleError
from sqpack.domain.square import NAIVE_END_TAG, choose_m, pack_square, pack_trivial, plan_decomposition
from sqpack.domain.strip import pack_naive_region
from sqpack.domain.verifier import verify_layout

DESK_SIDES = [256.5, 512.5, 1024.5, 2048.5]


def test_choose_m_examples():
    assert choose_m(1e5, 0.75) == 10_000
    assert choose_m(1e5, 0.75, 1.0) == round((1e5 / math.log(1e5)) ** 0.8)
    assert choose_m(40, 0.75) <= 10
    with pytest.raises(InfeasibleError):
        choose_m(1e5, 1.0)


def test_plan_tiles_the_square():
    plan = plan_decomposition(100.5, 10, 0.75)
    assert plan.grid_side == 90
    assert plan.slab_height == pytest.approx(10.5)
    assert len(plan.decomposition) == 7
    assert [tag for _, tag in plan.decomposition].count("trapezoid") == 4

    polygons = [shapely.Polygon(region.array) for region, _ in plan.decomposition]
    assert sum(region.area for region, _ in plan.decomposition) == pytest.approx(100.5**2, rel=1e-9)
    for a, b in combinations(polygons, 2):
        assert a.intersection(b).area < 1e-9
    assert shapely.union_all(polygons).area == pytest.approx(100.5**2, rel=1e-9)


def test_end_trapezoids_differ_by_the_slab_lean():
    plan = plan_decomposition(100.5, 10, 0.75)
    lean = plan.slab_height * math.tan(plan.tilt)
    first = next(region for region, tag in plan.decomposition if tag == "trapezoid")
    assert first.area == pytest.approx(plan.slab_height * (plan.end_base + lean / 2), rel=1e-9)


def test_integer_side_plan_is_one_grid():
    plan = plan_decomposition(100, 10, 0.75)
    assert [tag for _, tag in plan.decomposition] == ["grid"]
    assert plan.grid_side == 100


def test_small_square_uses_trivial_grid():
    layout, stats = pack_square(20.5)
    assert stats.verified
    assert stats.square_count == 400
    assert stats.waste == pytest.approx(20.25)
    assert "trivial-grid" in stats.flags


def test_integer_square_has_no_waste():
    layout, stats = pack_square(100)
    assert stats.waste == 0.0
    assert stats.square_count == 10_000
    assert stats.flags == ()


def test_fractional_square_verifies():
    layout, stats = pack_square(100.5, workers=2)
    assert stats.verified
    assert verify_layout(layout) == []
    assert sum(stats.per_tag_waste.values()) == pytest.approx(stats.waste, rel=1e-6)
    assert stats.square_count >= 75**2


def test_pack_trivial():
    _, stats = pack_trivial(10.5)
    assert stats.square_count == 100
    assert stats.waste == pytest.approx(10.25)
    with pytest.raises(InfeasibleError):
        pack_trivial(0.0)


@pytest.fixture(scope="module")
def desk_squares():
    return {x: pack_square(x, workers=4) for x in DESK_SIDES}


@pytest.mark.slow
@pytest.mark.parametrize("x", DESK_SIDES)
def test_large_square_beats_trivial(desk_squares, x):
    layout, stats = desk_squares[x]
    assert stats.verified
    assert stats.waste < x * x - math.floor(x) ** 2


@pytest.mark.slow
def test_large_square_waste_trend(desk_squares):
    wastes = [desk_squares[x][1].waste for x in DESK_SIDES]
    ratios = [w / x for w, x in zip(wastes, DESK_SIDES)]
    assert ratios == sorted(ratios, reverse=True)
    assert wastes[-1] < 0.5 * DESK_SIDES[-1]
    slope = np.polyfit(np.log(DESK_SIDES), np.log(wastes), 1)[0]
    assert slope <= 0.8




@pytest.mark.slow
def test_end_trapezoids_never_lose_to_naive_rows(desk_squares):
    layout, stats = desk_squares[1024.5]
    counts = np.concatenate([np.ones(layout.square_count), [b.count for b in layout.grid_blocks]])
    packed = np.bincount(layout.zone_index, weights=counts, minlength=len(layout.zones))
    ends = [k for k, zone in enumerate(layout.zones) if zone.label in ("trapezoid", NAIVE_END_TAG, "fallback")]
    assert len(ends) == 4
    for k in ends:
        assert packed[k] >= pack_naive_region(layout.zones[k].region).total_count
