"""File formats: sample CSV with JSON sidecar, K-hat CSV, JSON documents."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .analytics import CLParams
from .core import LiebscherSpec
from .errors import InvalidParameter
from .sampler import Sample


def fmt(x) -> str:
    return format(float(x), ".17g")


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_sample_csv(sample: Sample, path, meta: dict | None = None) -> Path:
    """Header ``x1,...,xd``, one row per point, 17 significant digits.

    Provenance goes to a JSON file next to the CSV (same stem).
    """
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j + 1}" for j in range(sample.d)])
        for row in sample.data:
            w.writerow([fmt(v) for v in row])
    side = sidecar_path(path)
    info = dict(sample.meta) if meta is None else dict(meta)
    info.setdefault("n", sample.n)
    info.setdefault("d", sample.d)
    write_json(info, side)
    return side


def read_sample_csv(path) -> Sample:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise InvalidParameter(f"{path}: empty file")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise InvalidParameter(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise InvalidParameter(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise InvalidParameter(f"{path}: no data rows")
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
    return Sample(np.array(rows), meta)


def write_kendall_csv(kfun, path):
    """Two columns ``t,K`` evaluated at the jump points of the step function."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "K"])
        for t, k in kfun.rows():
            w.writerow([fmt(t), fmt(k)])


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def load_json(path) -> dict:
    """Read a JSON document, turning syntax errors into line diagnostics."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidParameter(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidParameter(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def load_model_spec(path) -> LiebscherSpec | CLParams:
    """A LiebscherSpec document, or a bivariate ``{"p": [...], "q": [...]}`` document."""
    obj = load_json(path)
    if not isinstance(obj, dict):
        raise InvalidParameter(f"{path}: expected a JSON object")
    try:
        if "p" in obj and "q" in obj and "A" not in obj:
            return CLParams(obj["p"], obj["q"])
        return LiebscherSpec.from_json(obj)
    except KeyError as exc:
        raise InvalidParameter(f"{path}: missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise InvalidParameter(f"{path}: {exc}") from None
