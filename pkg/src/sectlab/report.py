"""Report emission: deterministic JSON/CSV with 17 significant digits, written atomically."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__

__all__ = ["canonical", "dumps", "emit_report", "emit_csv", "load_report", "envelope", "format_float"]

TOOL = "sectlab"


def format_float(v: float) -> str:
    """17 significant digits; non-finite values become the strings inf, -inf, nan."""
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    text = format(v, ".17g")
    # keep floats distinguishable from integers after a round trip
    return text if any(c in text for c in ".en") else text + ".0"


def canonical(obj: Any) -> Any:
    """Plain JSON-ready structure: numpy scalars and arrays unwrapped, complex as [re, im]."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return canonical(obj.to_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _encode(obj: Any, indent: int, level: int, out: list[str]) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(f"{pad}{json.dumps(k)}: ")
            _encode(v, indent, level + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list)) for v in obj):
            out.append("[")
            for i, v in enumerate(obj):
                _encode(v, indent, level + 1, out)
                if i < len(obj) - 1:
                    out.append(", ")
            out.append("]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _encode(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "]")
    elif isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        text = format_float(obj)
        out.append(text if math.isfinite(obj) else json.dumps(text))
    else:
        out.append(json.dumps(obj))


def dumps(report: Any, indent: int = 2) -> str:
    """Deterministic JSON text; key order is the order in which fields were built."""
    out: list[str] = []
    _encode(canonical(report), indent, 0, out)
    out.append("\n")
    return "".join(out)


def _atomic_write(path: str | os.PathLike, text: str) -> None:
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=folder)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def envelope(command: str, seed: int | None, config: dict, result: Any) -> dict:
    """Top-level report: tool, version, command, seed, resolved config, result."""
    return {
        "tool": TOOL,
        "version": __version__,
        "command": command,
        "seed": seed,
        "config": config,
        "result": result,
    }


def _csv_cell(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return str(format_float(float(v)))
    if v is None:
        return ""
    return str(v)


def emit_csv(rows: Iterable[Sequence[Any]], path: str | os.PathLike, header: Sequence[str]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_csv_cell(v) for v in row])
    _atomic_write(path, buf.getvalue())


def emit_report(report: Any, path: str | os.PathLike, fmt: str = "json") -> None:
    """Write a report atomically (temp file in the target folder, then rename).

    csv expects {"header": [...], "rows": [[...], ...]}.
    """
    if fmt == "json":
        _atomic_write(path, dumps(report))
    elif fmt == "csv":
        emit_csv(report["rows"], path, report["header"])
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def load_report(path: str | os.PathLike) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
