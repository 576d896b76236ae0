"""Serialize run results as JSON or CSV.

JSON layout (one object per run; a sweep writes a list of them)::

    {"config_digest": str, "version": str, "kind": str,
     "payload": {...}, "errors": [...], "duration_s": float}

Floats are written with 17 significant digits so they round-trip bit-exactly;
NaN and infinities become ``null``. Decay curves can also be written as CSV
with header ``tau,measured,analytic,mc_error``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .errors import ConfigError, SMIError


class ReportIOError(SMIError, OSError):
    """Writing a report failed."""


def _float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    text = format(x, ".17g")
    # keep floats distinguishable from ints when read back
    return text if any(c in text for c in ".en") else text + ".0"


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if hasattr(obj, "tolist"):
        return to_json(obj.tolist(), indent, _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, bool, str)) or v is None for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def payload_bytes(result) -> bytes:
    """Canonical bytes of a result's metric payload."""
    return to_json(result.payload).encode()


def curve_csv(payload: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau", "measured", "analytic", "mc_error"])
    analytic = payload["analytic"] or [None] * len(payload["taus"])
    for tau, m, a, e in zip(payload["taus"], payload["measured"], analytic, payload["mc_error"]):
        w.writerow([_float(tau), _float(m), "" if a is None else _float(a), _float(e)])
    return buf.getvalue()


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {path}: {exc}") from exc


def emit_report(results, path, fmt: str = "json") -> list[Path]:
    """Write one result or a list of results; returns the files written."""
    path = Path(path)
    many = isinstance(results, (list, tuple))
    items = list(results) if many else [results]
    if fmt == "json":
        body = [r.to_dict() for r in items]
        _write(path, to_json(body if many else body[0]) + "\n")
        return [path]
    if fmt == "csv":
        written = []
        for i, r in enumerate(items):
            if r.kind != "decay-curve":
                raise ConfigError(f"CSV output is only defined for decay curves, not {r.kind}")
            target = path.with_name(f"{path.stem}_{i}{path.suffix}") if many else path
            _write(target, curve_csv(r.payload))
            written.append(target)
        return written
    raise ConfigError(f"unknown report format {fmt!r}")
