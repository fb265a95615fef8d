import logging
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

from sqpack.application.analysis import fit_exponent, sweep
from sqpack.application.services import LayoutRenderer, SweepStore
from sqpack.domain.models import (
    DEFAULT_SHRINK,
    DEFAULT_SLACK,
    FitResult,
    PackingStats,
    SweepRecord,
    TrapezoidSpec,
    Violation,
)
from sqpack.domain.quad_primitive import build_quad_packing, derive_params
from sqpack.domain.repository import LayoutRepository
from sqpack.domain.square import pack_square
from sqpack.domain.trapezoid import pack_right_trapezoid
from sqpack.domain.verifier import measure_waste, verify_layout


class PackQuadrilateral:
    def __init__(self, repo: LayoutRepository):
        self.repo = repo

    def execute(self, m: int, theta: float, sigma1: float, out: Path) -> PackingStats:
        packing = build_quad_packing(derive_params(m, theta, sigma1))
        self.repo.save(packing.layout, out)
        logging.info(f"Quadrilateral layout written to {out}")
        return packing.stats


class PackTrapezoid:
    def __init__(self, repo: LayoutRepository):
        self.repo = repo

    def execute(self, spec: TrapezoidSpec, out: Path) -> PackingStats:
        layout, stats = pack_right_trapezoid(spec)
        self.repo.save(layout, out)
        logging.info(f"Trapezoid layout written to {out} (flags: {list(stats.flags)})")
        return stats


class PackSquare:
    def __init__(self, repo: LayoutRepository, workers: int = 1):
        self.repo = repo
        self.workers = workers

    def execute(self, x: float, beta: float, epsilon: float, nu: float, out: Path) -> PackingStats:
        layout, stats = pack_square(x, beta, epsilon, nu, workers=self.workers)
        self.repo.save(layout, out)
        logging.info(f"Square layout written to {out}")
        return stats


class VerifyLayout:
    def __init__(self, repo: LayoutRepository, workers: int = 1):
        self.repo = repo
        self.workers = workers

    def execute(self, path: Path, shrink: float = DEFAULT_SHRINK, slack: float = DEFAULT_SLACK) -> List[Violation]:
        layout = self.repo.load(path)
        violations = verify_layout(layout, shrink, slack, workers=self.workers)
        logging.info(f"{path}: {layout.total_count} squares, {len(violations)} violations")
        return violations


class LayoutStats:
    def __init__(self, repo: LayoutRepository, workers: int = 1):
        self.repo = repo
        self.workers = workers

    def execute(self, path: Path) -> Dict[str, Any]:
        layout = self.repo.load(path)
        stats = measure_waste(layout, workers=self.workers)
        report = asdict(stats)
        report["flags"] = list(stats.flags)
        report["tags"] = layout.tag_census()
        return report


class RenderLayout:
    def __init__(self, repo: LayoutRepository, renderer: LayoutRenderer):
        self.repo = repo
        self.renderer = renderer

    def execute(self, layout_path: Path, svg_path: Path, stroke_width: float = 0.05, scale: float = 10.0) -> None:
        layout = self.repo.load(layout_path)
        self.renderer.write(layout, svg_path, stroke_width, scale)
        logging.info(f"Rendered {layout.item_count} items to {svg_path}")


class RunSweep:
    def __init__(self, store: SweepStore, workers: int = 1, timed: bool = True):
        self.store = store
        self.workers = workers
        self.timed = timed

    def execute(
        self,
        method: str,
        xs: Sequence[float],
        out: Path,
        params: Optional[Mapping[str, Any]] = None,
    ) -> List[SweepRecord]:
        records = sweep(method, xs, params, workers=self.workers, timed=self.timed)
        self.store.write(records, out)
        logging.info(f"Sweep of {len(records)} points written to {out}")
        return records


class FitSweep:
    def __init__(self, store: SweepStore):
        self.store = store

    def execute(self, path: Path) -> FitResult:
        result = fit_exponent(self.store.read(path))
        logging.info(f"Fit over {result.n} points: slope {result.slope:.4f}, r2 {result.r2:.4f}")
        return result
