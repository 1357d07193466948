"""Shared text output helpers: 12-significant-digit numbers and CSV writing.

CSV files carry optional '# key=value' metadata comment lines before the
header row, use '.' as the decimal separator and '\\n' line endings.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from typing import TextIO


def fmt(value) -> str:
    """Render a scalar for text output; floats get 12 significant digits."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def write_csv(
    out: TextIO,
    header: Iterable[str],
    rows: Iterable[Iterable],
    meta: Mapping | None = None,
) -> None:
    """Write comment metadata, a header line, then formatted data rows."""
    if meta:
        for key, value in meta.items():
            out.write(f"# {key}={fmt(value)}\n")
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt(v) for v in row) + "\n")
