"""CSV schemas, ingestion and deterministic output writers."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaError

# schema id -> (exact header, column that must be strictly increasing)
SCHEMAS = {
    "reflectivity": (("energy_meV", "reflectivity"), "energy_meV"),
    "spectrum": (("energy_meV", "intensity"), "energy_meV"),
    "stark": (("bias_V", "peak_meV"), None),
    "iv": (("bias_V", "current_mA"), "bias_V"),
    "li": (("current_mA", "power_uW"), None),
    "flux": (("J_kA_cm2", "flux_norm"), "J_kA_cm2"),
    "farfield_map": (("x_mm", "y_mm", "intensity"), None),
    "li_curve": (("J_kA_cm2", "S_cm3", "P_W"), "J_kA_cm2"),
}


@dataclass(frozen=True)
class MeasurementTable:
    columns: dict
    source: str
    schema: str

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values())))

    def __getitem__(self, name):
        return self.columns[name]


def _data_lines(fh):
    for line in fh:
        if line.startswith("#"):
            continue
        yield line


def ingest_csv(path, schema: str) -> MeasurementTable:
    """Read a CSV whose first non-comment row is exactly the schema header.

    Lines starting with ``#`` are metadata and skipped.
    """
    if schema not in SCHEMAS:
        raise SchemaError(f"unknown schema {schema!r}")
    header, monotone = SCHEMAS[schema]
    path = Path(path)
    try:
        fh = path.open(encoding="utf-8", newline="")
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(_data_lines(fh))
        found = next(reader, None)
        if found is None or tuple(c.strip() for c in found) != header:
            raise SchemaError(
                f"{path}: header mismatch, expected {','.join(header)!r} found {','.join(found or [])!r}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}")
            values = []
            for col, cell in zip(header, row):
                try:
                    value = float(cell)
                except ValueError:
                    raise SchemaError(f"{path}: row {lineno}, column {col}: cannot parse {cell!r}") from None
                if not math.isfinite(value):
                    raise SchemaError(f"{path}: row {lineno}, column {col}: non-finite value")
                values.append(value)
            rows.append(values)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.array(rows, dtype=float)
    columns = {name: data[:, i] for i, name in enumerate(header)}
    if monotone is not None and np.any(np.diff(columns[monotone]) <= 0):
        raise SchemaError(f"{path}: column {monotone} must be strictly increasing")
    return MeasurementTable(columns, str(path), schema)


def fmt(x) -> str:
    """Shortest round-trip decimal form of a float."""
    return repr(float(x))


def write_csv(path, schema: str, columns, meta: dict | None = None) -> Path:
    """Write columns under the exact schema header, preceded by ``# key: value`` lines."""
    header, _ = SCHEMAS[schema]
    path = Path(path)
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    with path.open("w", encoding="utf-8", newline="") as fh:
        for key, value in (meta or {}).items():
            fh.write(f"# {key}: {json.dumps(value, separators=(',', ':'))}\n")
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def read_csv_meta(path) -> dict:
    """Metadata written by :func:`write_csv`."""
    meta = {}
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("# "):
                break
            key, _, value = line[2:].partition(": ")
            meta[key] = json.loads(value)
    return meta


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), indent=2) + "\n", encoding="utf-8")
    return path
