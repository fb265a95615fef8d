import math

import numpy as np
import pytest

from sqpack.application.analysis import PRIOR_EXPONENTS, fit_exponent, reference_curve, sweep
from sqpack.domain.errors import InfeasibleError, InsufficientDataError
from sqpack.domain.models import SweepRecord


def _records(xs, wastes, verified=True):
    return [SweepRecord(x, "test", w, 0, 0.0, verified) for x, w in zip(xs, wastes)]


def test_trivial_sweep_values():
    records = sweep("trivial", [10.5, 20.5, 40.5])
    assert [r.x for r in records] == [10.5, 20.5, 40.5]
    assert [r.waste for r in records] == pytest.approx([10.25, 20.25, 40.25])
    assert [r.squares for r in records] == [100, 400, 1600]
    assert all(r.verified and r.method == "trivial" for r in records)


def test_untimed_sweep_is_reproducible():
    xs = [8.5, 16.5, 32.5, 64.5]
    first = sweep("trivial", xs, workers=4, timed=False)
    assert first == sweep("trivial", xs, workers=1, timed=False)
    assert all(r.seconds == 0.0 for r in first)


def test_sweep_rejects_bad_input():
    with pytest.raises(InfeasibleError):
        sweep("trivial", [4.5, 4.5])
    with pytest.raises(InfeasibleError):
        sweep("trivial", [8.5, 4.5])
    with pytest.raises(InfeasibleError):
        sweep("hexagon", [4.5])
    assert sweep("trivial", []) == []


def test_failed_point_is_recorded_not_raised():
    (record,) = sweep("quad", [2.0], timed=False)
    assert math.isnan(record.waste)
    assert record.squares == 0
    assert not record.verified


def test_strip_and_quad_sweeps():
    strips = sweep("strip", [10.5, 20.5, 40.5], timed=False)
    assert all(r.verified and r.waste >= 0 for r in strips)
    (quad,) = sweep("quad", [100], timed=False)
    assert quad.squares == 5099


def test_fit_exact_power_law():
    xs = [4.0, 16.0, 64.0, 256.0]
    fit = fit_exponent(_records(xs, [3 * x**0.5 for x in xs]))
    assert fit.slope == pytest.approx(0.5)
    assert fit.intercept == pytest.approx(math.log(3))
    assert fit.r2 == pytest.approx(1.0)
    assert fit.n == 4


def test_trivial_waste_grows_linearly():
    xs = [k + 0.5 for k in (32, 64, 128, 256, 512, 1024)]
    fit = fit_exponent(sweep("trivial", xs))
    assert fit.slope == pytest.approx(1.0, abs=0.01)
    assert fit.r2 > 0.999


def test_fit_is_scale_equivariant():
    xs = [10.0, 20.0, 40.0, 80.0]
    wastes = [x**0.7 * (1 + 0.05 * (-1) ** k) for k, x in enumerate(xs)]
    base = fit_exponent(_records(xs, wastes))
    scaled = fit_exponent(_records(xs, [7 * w for w in wastes]))
    assert scaled.slope == pytest.approx(base.slope)
    assert scaled.intercept == pytest.approx(base.intercept + math.log(7))
    assert scaled.r2 == pytest.approx(base.r2)


def test_fit_skips_unusable_records():
    records = _records([10.0, 20.0], [1.0, 2.0])
    records += _records([30.0], [math.nan])
    records += _records([40.0], [0.0])
    records += _records([50.0], [5.0], verified=False)
    with pytest.raises(InsufficientDataError):
        fit_exponent(records)


def test_reference_curve_and_prior_exponents():
    xs = [10.0, 100.0, 1000.0]
    assert reference_curve(0.75, 0.0, xs) == pytest.approx(np.array(xs) ** 0.6)
    assert reference_curve(0.75, 1.0, xs) == pytest.approx(np.array(xs) ** 0.6 * np.log(xs) ** 0.4)
    assert sorted(PRIOR_EXPONENTS.values(), reverse=True)[0] == pytest.approx(7 / 11)
    assert min(PRIOR_EXPONENTS.values()) == 0.6


@pytest.mark.slow
def test_square_sweep_is_sublinear():
    records = sweep("square", [256.5, 512.5, 1024.5, 2048.5], workers=4)
    assert all(r.verified for r in records)
    ratios = [r.waste / r.x for r in records]
    assert ratios == sorted(ratios, reverse=True)
    assert fit_exponent(records).slope <= 0.8
