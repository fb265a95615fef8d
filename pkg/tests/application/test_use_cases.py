import math
from pathlib import Path
from typing import Dict, List, Sequence

import pytest

from sqpack.application.services import LayoutRenderer, SweepStore
from sqpack.application.use_cases import (
    FitSweep,
    LayoutStats,
    PackQuadrilateral,
    PackSquare,
    PackTrapezoid,
    RenderLayout,
    RunSweep,
    VerifyLayout,
)
from sqpack.domain.geometry import PlacedSquare, Point, Region
from sqpack.domain.models import Layout, SweepRecord, TrapezoidSpec
from sqpack.domain.repository import LayoutRepository


class InMemoryLayoutRepository(LayoutRepository):
    def __init__(self):
        self.layouts: Dict[Path, Layout] = {}

    def save(self, layout: Layout, path: Path) -> None:
        self.layouts[Path(path)] = layout

    def load(self, path: Path) -> Layout:
        return self.layouts[Path(path)]

    def dumps(self, layout: Layout) -> str:
        return f"{layout.total_count} squares"


class InMemorySweepStore(SweepStore):
    def __init__(self):
        self.files: Dict[Path, List[SweepRecord]] = {}

    def write(self, records: Sequence[SweepRecord], path: Path) -> None:
        self.files[Path(path)] = list(records)

    def read(self, path: Path) -> List[SweepRecord]:
        return self.files[Path(path)]


class CountingRenderer(LayoutRenderer):
    def __init__(self):
        self.calls = []

    def render(self, layout: Layout, stroke_width: float = 0.05, scale: float = 10.0) -> str:
        self.calls.append((layout.item_count, stroke_width, scale))
        return "<svg/>"


@pytest.fixture
def repo():
    return InMemoryLayoutRepository()


def test_pack_quadrilateral_saves_layout(repo):
    stats = PackQuadrilateral(repo).execute(100, 0.1, 0.01, Path("q.json"))
    assert stats.square_count == 5099
    assert repo.load(Path("q.json")).total_count == 5099


def test_pack_trapezoid_and_square(repo):
    spec = TrapezoidSpec(1000, 1000**0.2, math.atan(1000**-0.5), beta=0.2)
    stats = PackTrapezoid(repo).execute(spec, Path("t.json"))
    assert "asymptotic-conditions-unmet" in stats.flags
    stats = PackSquare(repo, workers=2).execute(20.5, 0.75, 0.0, 0.75, Path("s.json"))
    assert stats.waste == pytest.approx(20.25)
    assert repo.load(Path("s.json")).total_count == 400


def test_verify_layout_reports_overlaps(repo):
    PackQuadrilateral(repo).execute(10, 0.25, 0.05, Path("good.json"))
    assert VerifyLayout(repo).execute(Path("good.json")) == []

    square = PlacedSquare(Point(1.0, 1.0))
    repo.save(Layout.from_squares(Region.rectangle(0, 0, 3, 3), [square, square]), Path("bad.json"))
    violations = VerifyLayout(repo, workers=2).execute(Path("bad.json"))
    assert [(v.kind, v.indices) for v in violations] == [("overlap", (0, 1))]


def test_layout_stats_report(repo):
    PackSquare(repo).execute(20.5, 0.75, 0.0, 0.75, Path("s.json"))
    report = LayoutStats(repo).execute(Path("s.json"))
    assert report["square_count"] == 400
    assert report["waste"] == pytest.approx(20.25)
    assert report["flags"] == ["trivial-grid"]
    assert report["tags"] == {"grid": 400}
    assert report["verified"] is True


def test_render_layout_passes_options(repo, tmp_path):
    PackSquare(repo).execute(20.5, 0.75, 0.0, 0.75, Path("s.json"))
    renderer = CountingRenderer()
    RenderLayout(repo, renderer).execute(Path("s.json"), tmp_path / "s.svg", stroke_width=0.2, scale=4.0)
    assert renderer.calls == [(1, 0.2, 4.0)]
    assert (tmp_path / "s.svg").read_text(encoding="utf-8") == "<svg/>"


def test_sweep_then_fit():
    store = InMemorySweepStore()
    xs = [k + 0.5 for k in (16, 32, 64, 128)]
    records = RunSweep(store, workers=2, timed=False).execute("trivial", xs, Path("sweep.csv"))
    assert store.read(Path("sweep.csv")) == records
    fit = FitSweep(store).execute(Path("sweep.csv"))
    assert fit.n == 4
    assert fit.slope == pytest.approx(1.0, abs=0.02)
