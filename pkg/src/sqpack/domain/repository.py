from abc import ABC, abstractmethod
from pathlib import Path

from .models import Layout


class LayoutRepository(ABC):
    @abstractmethod
    def save(self, layout: Layout, path: Path) -> None: pass

    @abstractmethod
    def load(self, path: Path) -> Layout: pass

    @abstractmethod
    def dumps(self, layout: Layout) -> str:
        """Canonical text form; identical layouts give identical bytes."""
        pass
