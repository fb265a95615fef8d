import csv
import logging
import math
from pathlib import Path
from typing import List, Sequence

from sqpack.application.services import SweepStore
from sqpack.domain.errors import LayoutFormatError
from sqpack.domain.models import SweepRecord

HEADER = ["x", "method", "waste", "squares", "seconds", "verified"]


def _float(value: float) -> str:
    return f"{value:.17g}"


def _parse_float(row: dict, key: str, line: int) -> float:
    try:
        return float(row[key])
    except (TypeError, ValueError) as e:
        raise LayoutFormatError(f"line {line}: {key}", f"not a number: {row[key]!r}") from e


class CsvSweepStore(SweepStore):
    def write(self, records: Sequence[SweepRecord], path: Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(HEADER)
            for r in records:
                writer.writerow([
                    _float(r.x), r.method, _float(r.waste), r.squares, _float(r.seconds), str(r.verified).lower(),
                ])
        logging.debug(f"Wrote {len(records)} sweep records to {path}")

    def read(self, path: Path) -> List[SweepRecord]:
        try:
            f = open(path, newline="", encoding="utf-8")
        except OSError as e:
            logging.error(f"Cannot read sweep CSV {path}: {e}")
            raise LayoutFormatError("path", f"cannot read {path}") from e
        with f:
            reader = csv.DictReader(f)
            if reader.fieldnames != HEADER:
                raise LayoutFormatError("header", f"expected {','.join(HEADER)}, got {reader.fieldnames}")
            records = []
            for line, row in enumerate(reader, start=2):
                if row["verified"] not in ("true", "false"):
                    got = row["verified"]
                    raise LayoutFormatError(f"line {line}: verified", f"expected true or false, got {got!r}")
                squares = _parse_float(row, "squares", line)
                if not math.isfinite(squares) or squares != int(squares):
                    raise LayoutFormatError(f"line {line}: squares", f"not an integer: {row['squares']!r}")
                records.append(SweepRecord(
                    x=_parse_float(row, "x", line),
                    method=row["method"],
                    waste=_parse_float(row, "waste", line),
                    squares=int(squares),
                    seconds=_parse_float(row, "seconds", line),
                    verified=row["verified"] == "true",
                ))
        return records
