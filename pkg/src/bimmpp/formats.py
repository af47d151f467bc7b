"""File formats: traces and draws as CSV, everything else as JSON."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .model import ModelParams
from .simulate import BivariateTrace


def _plain(obj):
    # numpy scalars/arrays -> builtins so json can handle them
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps(obj) -> str:
    """Key-sorted JSON. Floats use the shortest repr that round-trips exactly."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def read_params(path) -> ModelParams:
    data = read_json(path)
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a parameter object")
    # fit outputs nest the parameters; accept those directly
    if "params" in data and isinstance(data["params"], dict):
        data = data["params"]
    return ModelParams.from_dict(data)


def _fmt(x: float) -> str:
    return repr(float(x))


def trace_csv(trace: BivariateTrace) -> str:
    buf = io.StringIO()
    buf.write("t,k\n")
    for t, k in zip(trace.t, trace.k):
        buf.write(f"{_fmt(t)},{_fmt(k)}\n")
    return buf.getvalue()


def write_trace(path, trace: BivariateTrace) -> None:
    Path(path).write_text(trace_csv(trace))


def read_trace(path) -> BivariateTrace:
    """Two numeric columns (time, distance); a non-numeric first row is a header."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if lineno == 1:
                    continue
                raise ValidationError(f"{path}:{lineno}: non-numeric value") from None
    if not rows:
        return BivariateTrace(np.empty(0), np.empty(0))
    return BivariateTrace.from_pairs(rows)


def write_draws(path, draws: np.ndarray) -> None:
    lines = ["lambda3,omega3,distance"]
    lines += [",".join(_fmt(v) for v in row) for row in draws]
    Path(path).write_text("\n".join(lines) + "\n")


def report_csv(report: dict) -> str:
    """Long format: one row per reported cell, blanks where a field does not apply."""
    cols = ["query", "kind", "t", "k", "n", "dt", "dk", "estimate", "standard_error", "error"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for qi, res in enumerate(report["results"]):
        for cell in res["cells"]:
            row = {"query": qi, "kind": res["kind"], **cell}
            writer.writerow(["" if row.get(c) is None else _cell_str(row[c]) for c in cols])
    return buf.getvalue()


def _cell_str(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else _fmt(v)
    return str(v)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
