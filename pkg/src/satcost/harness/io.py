"""CSV helpers with a canonical float format (shortest round-trip repr)."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def opt_float(text: str) -> float | None:
    return None if text == "" else float(text)


def render_table(header: Sequence[str], rows: Iterable[Sequence], title: str = "") -> str:
    """Fixed-width plain-text table."""
    cells = [[str(h) for h in header]] + [[_cell(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = [title] if title else []
    sep = "+".join("-" * (w + 2) for w in widths)
    lines.append(sep)
    for n, row in enumerate(cells):
        lines.append("|".join(f" {c:>{w}} " for c, w in zip(row, widths)))
        if n == 0:
            lines.append(sep)
    lines.append(sep)
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.1f}"
    return "" if v is None else str(v)
