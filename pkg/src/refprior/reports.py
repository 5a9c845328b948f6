"""Machine-readable run artifacts: versioned JSON reports and CSV tables.

Every CLI command emits a report.json following the shipped report-v1 schema;
configs are validated against config-v1 before any work starts. Reports are
deterministic: no timestamps, no environment capture beyond the kernels
backend name, keys sorted on write.
"""

from __future__ import annotations

import csv
import json
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

from .errors import ConfigError

REPORT_SCHEMA_ID = "refprior-report-v1"

__all__ = ["jsonable", "read_config", "validate_config", "write_report",
           "validate_report", "write_table", "read_table", "grid_table"]


def jsonable(obj):
    """Recursively coerce report payloads to JSON-safe values.

    numpy scalars and arrays become Python numbers and lists; non-finite
    floats become the strings "inf" / "-inf" / "nan" (strict JSON has no
    spelling for them); objects exposing as_dict() are expanded.
    """
    if hasattr(obj, "as_dict"):
        return jsonable(obj.as_dict())
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer, int)) and not isinstance(obj, bool):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if v != v:
            return "nan"
        if v == float("inf"):
            return "inf"
        if v == float("-inf"):
            return "-inf"
        return v
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    raise ConfigError(f"cannot serialize {type(obj).__name__} into a report")


@lru_cache(maxsize=None)
def _schema(name: str) -> dict:
    path = resources.files("refprior").joinpath("schemas").joinpath(name)
    with path.open(encoding="utf-8") as fh:
        return json.load(fh)


def _validate(doc: dict, schema_name: str, what: str) -> None:
    try:
        jsonschema.validate(doc, _schema(schema_name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "(top level)"
        raise ConfigError(f"{what} fails {schema_name} at {where}: "
                          f"{exc.message}") from exc


def validate_config(doc: dict) -> None:
    _validate(doc, "config-v1.schema.json", "config")


def validate_report(doc: dict) -> None:
    _validate(doc, "report-v1.schema.json", "report")


def read_config(path) -> dict:
    """Parse and schema-validate a JSON run config."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config parse error in {path} at line {exc.lineno} "
                          f"column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    validate_config(doc)
    return doc


def write_report(path, command: str, config: dict, results: dict,
                 outputs, backend: str) -> dict:
    """Assemble, validate and write the report envelope; returns it."""
    doc = {
        "schema": REPORT_SCHEMA_ID,
        "command": command,
        "config": jsonable(config),
        "results": jsonable(results),
        "outputs": [str(p) for p in outputs],
        "backend": backend,
    }
    validate_report(doc)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return doc


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_table(path, header, rows) -> None:
    """RFC-4180 CSV: header row, CRLF line ends, '.' decimals, UTF-8."""
    header = list(header)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            row = list(row)
            if len(row) != len(header):
                raise ConfigError("csv row width does not match the header")
            writer.writerow([_cell(v) for v in row])


def read_table(path) -> tuple[list[str], list[list[str]]]:
    """Read a CSV written by write_table back as (header, string rows)."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"empty csv: {path}")
    return rows[0], rows[1:]


def grid_table(path, grid, values: np.ndarray, axis_names=None,
               value_name: str = "value") -> None:
    """Flatten a tensor-grid field into axis columns plus one value column."""
    grid = [np.asarray(g, dtype=float) for g in grid]
    if axis_names is None:
        axis_names = [f"axis{k}" for k in range(len(grid))]
    mesh = np.meshgrid(*grid, indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.asarray(values, dtype=float).ravel()
    if vals.size != flat.shape[0]:
        raise ConfigError("value tensor does not match the grid shape")
    write_table(path, list(axis_names) + [value_name],
                (list(row) + [v] for row, v in zip(flat, vals)))
