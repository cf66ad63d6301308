"""CSV and JSON writers shared by the command-line pipelines."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

FLOAT_FORMAT = ".9g"


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, FLOAT_FORMAT)
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Mapping]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(row[h]) for h in header])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(_plain(obj), indent=2) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def check_writable(paths: Iterable[Path], force: bool) -> None:
    """Refuse to clobber existing files unless ``force`` is set."""
    existing = [str(p) for p in paths if Path(p).exists()]
    if existing and not force:
        raise FileExistsError(f"refusing to overwrite {', '.join(existing)} (use --force)")


def write_text(path, text: str, force: bool = False) -> Path:
    path = Path(path)
    check_writable([path], force)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
    return path


def emit_artifacts(result, format: str, path, header: Sequence[str] | None = None, force: bool = False) -> Path:
    """Write ``result`` as CSV (a list of row mappings plus ``header``) or JSON."""
    if format == "csv":
        if header is None:
            raise ValueError("CSV output needs a header")
        return write_text(path, csv_text(header, result), force)
    if format == "json":
        return write_text(path, json_text(result), force)
    raise ValueError(f"unknown format {format!r}")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
