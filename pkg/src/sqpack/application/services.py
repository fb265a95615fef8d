from abc import ABC, abstractmethod
from pathlib import Path
from typing import List, Sequence

from sqpack.domain.models import Layout, SweepRecord


class LayoutRenderer(ABC):
    @abstractmethod
    def render(self, layout: Layout, stroke_width: float = 0.05, scale: float = 10.0) -> str: pass

    def write(self, layout: Layout, path: Path, stroke_width: float = 0.05, scale: float = 10.0) -> None:
        Path(path).write_text(self.render(layout, stroke_width, scale), encoding="utf-8")


class SweepStore(ABC):
    @abstractmethod
    def write(self, records: Sequence[SweepRecord], path: Path) -> None: pass

    @abstractmethod
    def read(self, path: Path) -> List[SweepRecord]:
        """Records in file order; malformed rows raise LayoutFormatError naming the column."""
        pass
