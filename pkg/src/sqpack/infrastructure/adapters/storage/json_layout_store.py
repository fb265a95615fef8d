import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

from sqpack.domain.errors import LayoutFormatError, SqpackError
from sqpack.domain.geometry import GridBlock, Point, Region
from sqpack.domain.models import Layout, Zone
from sqpack.domain.repository import LayoutRepository

FORMAT_VERSION = 1
# Top-level lists written one element per line
ROW_LISTS = ("squares", "grid_blocks", "zones")


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def _float(value: float) -> str:
    """17 significant digits; integral values keep a trailing .0 so they load back as floats."""
    if not math.isfinite(value):
        raise LayoutFormatError("number", f"cannot write non-finite {value!r}")
    text = f"{value:.17g}"
    return text if "." in text or "e" in text else text + ".0"


def _encode(value: Any) -> str:
    """Compact JSON for one value, floats through _float."""
    if isinstance(value, (np.generic, np.ndarray, tuple)):
        value = _plain(value)
    if value is None or isinstance(value, (bool, str)):
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _float(value)
    if isinstance(value, list):
        return "[" + ", ".join(_encode(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in value.items()) + "}"
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def _vertices(region: Region) -> List[List[float]]:
    return [[float(p.x), float(p.y)] for p in region.vertices]


def _number(value: Any, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise LayoutFormatError(field, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise LayoutFormatError(field, "must be finite")
    return float(value)


def _integer(value: Any, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise LayoutFormatError(field, f"expected an integer, got {value!r}")
    return value


def _list(doc: Dict[str, Any], key: str) -> List[Any]:
    value = doc.get(key, [])
    if not isinstance(value, list):
        raise LayoutFormatError(key, "expected a list")
    return value


def _region(raw: Any, field: str) -> Region:
    if not isinstance(raw, list):
        raise LayoutFormatError(field, "expected a list of [x, y] vertices")
    coords = []
    for k, v in enumerate(raw):
        if not isinstance(v, list) or len(v) != 2:
            raise LayoutFormatError(f"{field}[{k}]", "expected [x, y]")
        coords.append((_number(v[0], f"{field}[{k}]"), _number(v[1], f"{field}[{k}]")))
    try:
        return Region.from_xy(coords)
    except SqpackError as e:
        raise LayoutFormatError(field, str(e)) from e


class JsonLayoutRepository(LayoutRepository):
    """Layouts as versioned JSON; floats are written with 17 significant digits."""

    def dumps(self, layout: Layout) -> str:
        doc: Dict[str, Any] = {
            "version": FORMAT_VERSION,
            "region": _vertices(layout.region),
            "squares": [
                {"cx": float(c[0]), "cy": float(c[1]), "angle": float(a)}
                for c, a in zip(layout.centers, layout.angles)
            ],
            "grid_blocks": [
                {"x0": float(b.origin.x), "y0": float(b.origin.y), "cols": b.cols, "rows": b.rows,
                 "angle": float(b.angle)}
                for b in layout.grid_blocks
            ],
            "tags": list(layout.tags),
            "meta": layout.meta,
        }
        if layout.zones:
            doc["zones"] = [{"label": z.label, "region": _vertices(z.region)} for z in layout.zones]
            doc["zone_index"] = [int(k) for k in layout.zone_index]
        lines = []
        for key, value in doc.items():
            if key in ROW_LISTS and value:
                rows = ",\n".join(f"  {_encode(v)}" for v in value)
                lines.append(f' "{key}": [\n{rows}\n ]')
            else:
                lines.append(f' "{key}": {_encode(value)}')
        return "{\n" + ",\n".join(lines) + "\n}\n"

    def save(self, layout: Layout, path: Path) -> None:
        logging.debug(f"Saving layout: {layout.item_count} items to {path}")
        Path(path).write_text(self.dumps(layout), encoding="utf-8")

    def loads(self, text: str) -> Layout:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise LayoutFormatError("document", f"invalid JSON at line {e.lineno}: {e.msg}") from e
        if not isinstance(doc, dict):
            raise LayoutFormatError("document", "expected a JSON object")
        if doc.get("version") != FORMAT_VERSION:
            raise LayoutFormatError("version", f"unsupported version {doc.get('version')!r}")
        if "region" not in doc:
            raise LayoutFormatError("region", "missing")
        region = _region(doc["region"], "region")

        centers, angles = [], []
        for k, s in enumerate(_list(doc, "squares")):
            field = f"squares[{k}]"
            if not isinstance(s, dict):
                raise LayoutFormatError(field, "expected an object")
            centers.append((_number(s.get("cx"), f"{field}.cx"), _number(s.get("cy"), f"{field}.cy")))
            angles.append(_number(s.get("angle"), f"{field}.angle"))

        blocks = []
        for k, b in enumerate(_list(doc, "grid_blocks")):
            field = f"grid_blocks[{k}]"
            if not isinstance(b, dict):
                raise LayoutFormatError(field, "expected an object")
            origin = Point(_number(b.get("x0"), f"{field}.x0"), _number(b.get("y0"), f"{field}.y0"))
            cols, rows = _integer(b.get("cols"), f"{field}.cols"), _integer(b.get("rows"), f"{field}.rows")
            if cols < 1 or rows < 1:
                raise LayoutFormatError(field, f"needs cols, rows >= 1, got {cols}x{rows}")
            blocks.append(GridBlock(origin, cols, rows, _number(b.get("angle", 0.0), f"{field}.angle")))

        tags = _list(doc, "tags") if "tags" in doc else ["untagged"] * (len(centers) + len(blocks))
        if len(tags) != len(centers) + len(blocks) or not all(isinstance(t, str) for t in tags):
            raise LayoutFormatError("tags", f"expected {len(centers) + len(blocks)} string labels")
        meta = doc.get("meta", {})
        if not isinstance(meta, dict):
            raise LayoutFormatError("meta", "expected an object")

        zones, zone_index = [], None
        if "zones" in doc:
            for k, z in enumerate(_list(doc, "zones")):
                if not isinstance(z, dict) or not isinstance(z.get("label"), str):
                    raise LayoutFormatError(f"zones[{k}]", "expected an object with a label")
                zones.append(Zone(z["label"], _region(z.get("region"), f"zones[{k}].region")))
            zone_index = [_integer(v, "zone_index") for v in _list(doc, "zone_index")]
            if len(zone_index) != len(tags) or any(not 0 <= v < len(zones) for v in zone_index):
                raise LayoutFormatError("zone_index", "expected one valid zone number per item")

        return Layout(
            region,
            np.array(centers, dtype=float).reshape(-1, 2),
            np.array(angles, dtype=float),
            tuple(blocks),
            tuple(tags),
            tuple(zones),
            zone_index,
            meta,
        )

    def load(self, path: Path) -> Layout:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            logging.error(f"Cannot read layout {path}: {e}")
            raise LayoutFormatError("path", f"cannot read {path}") from e
        return self.loads(text)
