"""CSV ingestion, deterministic JSON, and the fitted-model file format."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .estimator import Standardizer, WeightedDensity
from .kernels import KernelSpec

MODEL_FORMAT = "fbkde-model/1"


class DataError(ValueError):
    """Malformed input data; the message names the offending row."""


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a header row plus numeric rows into an (n, d) array.

    Row numbers in error messages count the header as row 1.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if not header or all(h == "" for h in header):
            raise DataError(f"{path}: row 1: missing header")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {lineno}: expected {len(header)} columns, found {len(row)}")
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                bad = next(c for c in row if not _is_float(c))
                raise DataError(f"{path}: row {lineno}: non-numeric value {bad!r}") from None
            if not all(math.isfinite(v) for v in values):
                raise DataError(f"{path}: row {lineno}: non-finite value")
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return header, np.array(rows, dtype=float)


def _is_float(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def write_csv(target, header, rows) -> None:
    """Write rows with '.' decimals and '\\n' line endings whatever the locale.

    ``target`` is a path or an open text stream.
    """
    if hasattr(target, "write"):
        _write_rows(target, header, rows)
        return
    with Path(target).open("w", newline="", encoding="utf-8") as fh:
        _write_rows(fh, header, rows)


def _write_rows(fh, header, rows) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def to_jsonable(obj):
    """Recursively convert numpy types; NaN becomes None."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if not math.isfinite(v) else v
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dump_json(obj, path=None) -> str:
    text = json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def model_to_dict(est: WeightedDensity, standardizer: Standardizer | None = None,
                  radius: float | None = None, meta: dict | None = None) -> dict:
    return {
        "format": MODEL_FORMAT,
        "kernel": {"family": est.kernel.family.value, "sigma": est.kernel.sigma, "dim": est.kernel.dim},
        "centers": est.centers,
        "weights": est.weights,
        "per_center_sigma": est.per_center_sigma,
        "radius": est.l1_norm if radius is None else radius,
        "standardizer": None if standardizer is None else {
            "mean": standardizer.mean, "scale": standardizer.scale},
        "meta": meta or {},
    }


def model_from_dict(doc: dict) -> tuple[WeightedDensity, Standardizer | None, dict]:
    if doc.get("format") != MODEL_FORMAT:
        raise DataError(f"not a model file (format={doc.get('format')!r})")
    k = doc["kernel"]
    kernel = KernelSpec(k["family"], k["sigma"], k["dim"])
    centers = np.array(doc["centers"], dtype=float).reshape(-1, kernel.dim)
    est = WeightedDensity(kernel, centers, np.array(doc["weights"], dtype=float),
                          None if doc.get("per_center_sigma") is None
                          else np.array(doc["per_center_sigma"], dtype=float))
    std = doc.get("standardizer")
    standardizer = None if std is None else Standardizer(
        np.array(std["mean"], dtype=float), np.array(std["scale"], dtype=float))
    return est, standardizer, doc


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
