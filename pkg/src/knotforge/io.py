"""Polygon files, canonical JSON reports and run manifests.

Polygons are read from JSON ``{"vertices": [[x, y, z], ...]}`` or from
plain text with one ``x y z`` triple per line and ``#`` comments. Reports
are canonical JSON: sorted keys, floats with 17 significant digits, and a
``manifest`` entry whose ``timing`` field is the only non-deterministic part.
"""
import csv
import hashlib
import io
import json
import math
import numbers
import platform
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import ParseError, ValidationError
from .geometry import PolygonalKnot

CSV_COLUMNS = ("n", "energy", "reference", "error")


def _version():
    from . import __version__

    return __version__


# ---------------------------------------------------------------------------
# polygons
# ---------------------------------------------------------------------------

def parse_polygon_text(text):
    """Vertex array from either file format (JSON when the first non-blank character is ``{``)."""
    if text.lstrip().startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON: {exc.msg}", line=exc.lineno) from exc
        if not isinstance(obj, dict) or "vertices" not in obj:
            raise ParseError('JSON polygon must be an object with a "vertices" list')
        rows = obj["vertices"]
        if not isinstance(rows, list):
            raise ParseError('"vertices" must be a list of [x, y, z] triples')
        for k, row in enumerate(rows):
            if not (isinstance(row, list) and len(row) == 3
                    and all(isinstance(c, numbers.Real) and not isinstance(c, bool) for c in row)):
                raise ParseError(f"vertex {k} is not a triple of numbers: {row!r}")
        return np.array(rows, dtype=float).reshape(-1, 3)
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.replace(",", " ").split()
        if len(parts) != 3:
            raise ParseError(f"line {lineno}: expected 'x y z', got {body!r}", line=lineno)
        try:
            rows.append([float(c) for c in parts])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}", line=lineno) from exc
    return np.array(rows, dtype=float).reshape(-1, 3)


def load_polygon(path):
    """Read and validate a polygon file.

    Raises :class:`ParseError` for malformed files and
    :class:`ValidationError` (with the offending vertex index) for polygons
    violating the invariants.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    v = parse_polygon_text(text)
    try:
        return PolygonalKnot(v)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}", index=exc.index) from exc


def _fmt(x):
    return format(float(x), ".17g")


def polygon_json(p):
    return canonical_json({"vertices": p.vertices})


def polygon_text(p):
    lines = ["# x y z"]
    lines += [" ".join(_fmt(c) for c in row) for row in p.vertices]
    return "\n".join(lines) + "\n"


def save_polygon(p, path, fmt="json"):
    """Write ``p`` as JSON or text with 17 significant digits; ``path`` ``-`` is stdout."""
    text = polygon_json(p) if fmt == "json" else polygon_text(p)
    _write(path, text)


# ---------------------------------------------------------------------------
# canonical JSON
# ---------------------------------------------------------------------------

def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, numbers.Integral):
        return str(int(obj))
    if isinstance(obj, numbers.Real):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        s = _fmt(x)
        return s if any(c in s for c in ".en") else s + ".0"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if hasattr(obj, "to_dict"):
        return _encode(obj.to_dict(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(x, numbers.Number) for x in obj):
            return "[" + ", ".join(_encode(x, indent, level + 1) for x in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(x, indent, level + 1) for x in obj) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__} as JSON")


def canonical_json(obj, indent=2):
    """Deterministic JSON text: sorted keys, 17 significant digits, ``Infinity`` for infinite values."""
    return _encode(obj, indent, 0) + "\n"


# ---------------------------------------------------------------------------
# manifests and reports
# ---------------------------------------------------------------------------

def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Provenance of an output file; ``timing`` is the one field allowed to differ between reruns."""

    argv: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    version: str = field(default_factory=_version)
    seed: int = None
    timing: dict = field(default_factory=dict)

    @classmethod
    def create(cls, argv=None, config=None, inputs=(), seed=None):
        return cls(
            argv=list(sys.argv if argv is None else argv),
            config=dict(config or {}),
            inputs={str(p): file_digest(p) for p in inputs},
            seed=seed,
            timing={"started": datetime.now(timezone.utc).isoformat(), "_t0": time.perf_counter()},
        )

    def finish(self):
        t0 = self.timing.pop("_t0", None)
        if t0 is not None:
            self.timing["wall_seconds"] = time.perf_counter() - t0
        self.timing["python"] = platform.python_version()
        return self

    def to_dict(self):
        return {
            "argv": list(self.argv),
            "config": self.config,
            "inputs": dict(self.inputs),
            "version": self.version,
            "seed": self.seed,
            "timing": {k: v for k, v in self.timing.items() if not k.startswith("_")},
        }


def strip_timing(obj):
    """Copy of a loaded report without ``manifest.timing``, for reproducibility comparisons."""
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            if k == "manifest" and isinstance(v, dict):
                v = {kk: vv for kk, vv in v.items() if kk != "timing"}
            out[k] = strip_timing(v)
        return out
    if isinstance(obj, list):
        return [strip_timing(x) for x in obj]
    return obj


def report_payload(report, manifest=None):
    payload = report.to_dict() if hasattr(report, "to_dict") else dict(report)
    if manifest is not None:
        payload = {**payload, "manifest": manifest.to_dict()}
    return payload


def csv_text(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow(["" if x is None else (str(x) if isinstance(x, numbers.Integral) else _fmt(x)) for x in row])
    return buf.getvalue()


def save_report(report, path, manifest=None, fmt="json"):
    """Write a report as canonical JSON with the manifest embedded, or as CSV.

    CSV needs a report with ``csv_rows()`` and always has the columns
    ``n,energy,reference,error``. ``path`` ``-`` writes to stdout.
    """
    if fmt == "csv":
        if not hasattr(report, "csv_rows"):
            raise ValidationError(f"{type(report).__name__} has no tabular form; use --format json")
        text = csv_text(report.csv_rows())
    else:
        text = canonical_json(report_payload(report, manifest))
    _write(path, text)


def load_report(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
