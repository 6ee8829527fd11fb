"""CSV and JSON writers with round-trip float formatting."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from . import __version__


def fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return "%.17g" % x
    return str(x)


def csv_text(columns, rows, meta: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# tool: fnls {__version__}\n")
    for k in sorted(meta or {}):
        buf.write(f"# {k}: {meta[k]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def write_csv(path, columns, rows, meta: dict | None = None, overwrite: bool = True) -> Path:
    path = Path(path)
    if path.exists() and not overwrite:
        raise FileExistsError(f"{path} exists; pass --overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(columns, rows, meta))
    return path


def read_csv(path):
    """Header-comment dict, column names and rows (as strings)."""
    meta, lines = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            meta[k] = v
        else:
            lines.append(line)
    rows = list(csv.reader(lines))
    return meta, rows[0], rows[1:]


def json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def write_json(path, obj, overwrite: bool = True) -> Path:
    path = Path(path)
    if path.exists() and not overwrite:
        raise FileExistsError(f"{path} exists; pass --overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json_text(obj))
    return path
