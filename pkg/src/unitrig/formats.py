"""File formats: point-set text files, JSON artifacts, TSV tables.

Point-set files are UTF-8 text with one ``x<TAB>y`` pair per line.  Lines
starting with ``#`` are comments, except the two header keys written by
:func:`write_pointset`::

    # mode: exact
    # unit_sq: 25

Exact coordinates are written as integers or ``p/q``; float coordinates with
``repr`` so they round-trip bit for bit.
"""

from __future__ import annotations

import json
import os
from fractions import Fraction
from pathlib import Path
from typing import Any

from .geometry import EXACT, FLOAT, format_scalar, parse_scalar
from .unit_graph import PointSet


class FormatError(ValueError):
    pass


def _jsonable(obj: Any):
    if isinstance(obj, Fraction):
        return format_scalar(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalars
        return obj.item()
    if isinstance(obj, float) and obj != obj:
        return None
    return obj


def dumps(obj: Any) -> str:
    """Deterministic JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"


def write_text(path: str | os.PathLike, text: str) -> Path:
    """Write atomically (temp file + rename) so artifacts are never half-written."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
    return path


def write_json(path, obj) -> Path:
    return write_text(path, dumps(obj))


def read_json(path) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def format_pointset(P: PointSet) -> str:
    lines = [f"# mode: {P.mode}", f"# unit_sq: {format_scalar(P.unit_sq)}"]
    lines += [f"{format_scalar(x)}\t{format_scalar(y)}" for x, y in P.points]
    return "\n".join(lines) + "\n"


def write_pointset(path, P: PointSet) -> Path:
    return write_text(path, format_pointset(P))


def parse_pointset(text: str, mode: str | None = None, unit_sq=None) -> PointSet:
    header: dict[str, str] = {}
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, val = body.split(":", 1)
                if key.strip() in ("mode", "unit_sq"):
                    header[key.strip()] = val.strip()
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected 'x y', got {raw!r}")
        rows.append((lineno, parts))
    mode = mode or header.get("mode")
    if mode is None:
        # guess: any float-looking token selects float mode
        mode = FLOAT if any(("." in t or "e" in t.lower()) for _, r in rows for t in r) else EXACT
    if mode not in (EXACT, FLOAT):
        raise FormatError(f"unknown mode {mode!r}")
    pts = []
    for lineno, (a, b) in rows:
        try:
            pts.append((parse_scalar(a, mode), parse_scalar(b, mode)))
        except (ValueError, ZeroDivisionError) as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
    if unit_sq is None:
        unit_sq = parse_scalar(header["unit_sq"], mode) if "unit_sq" in header else 1
    return PointSet.from_coords(pts, mode=mode, unit_sq=unit_sq)


def read_pointset(path, mode: str | None = None, unit_sq=None) -> PointSet:
    with open(path, encoding="utf-8") as fh:
        return parse_pointset(fh.read(), mode, unit_sq)


def edges_tsv(edges) -> str:
    return "i\tj\n" + "".join(f"{i}\t{j}\n" for i, j in edges)


def rows_tsv(header: list[str], rows) -> str:
    out = ["\t".join(header)]
    for r in rows:
        out.append("\t".join(_cell(v) for v in r))
    return "\n".join(out) + "\n"


def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)
