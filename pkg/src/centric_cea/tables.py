"""CSV emission with lossless float formatting."""

from __future__ import annotations

import csv
from pathlib import Path

UNDEFINED = "undefined"


def format_value(value) -> str:
    if value is None:
        return UNDEFINED
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(float(value))
    if hasattr(value, "dtype"):
        return format_value(value.item())
    return str(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
