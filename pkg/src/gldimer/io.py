"""Deterministic CSV and JSON writers for exported datasets.

Floats are rendered with repr (shortest round-trip form), so identical
inputs produce byte-identical file bodies.
"""

from __future__ import annotations

import json
from pathlib import Path


def format_value(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int,)):
        return str(v)
    if v is None:
        return "nan"
    x = float(v)
    return repr(x)


def write_csv(path, header, rows) -> None:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
