"""Shared file formats: schema-tagged CSV, JSON summaries, TOML plans.

Every CSV written by this package starts with a single ``#schema=...``
line naming the payload layout, optionally followed by one ``#meta``
line holding a JSON dictionary, then a normal header row and the data.
Floats are serialized with ``repr`` so a re-run with the same seed
produces byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python < 3.11
    import tomli as _toml

__all__ = [
    "SchemaCsv",
    "float_cell",
    "csv_text",
    "write_csv",
    "read_csv",
    "write_json",
    "read_json",
    "load_toml",
]


def float_cell(value) -> str:
    """Canonical cell text for a float (repr round-trips exactly)."""
    return repr(float(value))


@dataclass(frozen=True)
class SchemaCsv:
    """Parsed schema-tagged CSV: schema line, meta dict, columns, data."""

    schema: str
    meta: dict
    columns: tuple
    rows: np.ndarray  # object array, shape (n_rows, n_cols)

    def column(self, name: str) -> np.ndarray:
        """One column as floats (raises KeyError for unknown names)."""
        try:
            j = self.columns.index(name)
        except ValueError:
            raise KeyError(f"no column {name!r}; have {self.columns}")
        return np.array([float(v) for v in self.rows[:, j]])


def csv_text(schema: str, columns: Sequence[str], rows,
             meta: Mapping | None = None) -> str:
    """Render a schema-tagged CSV; every cell is formatted via repr/str."""
    lines = [f"#schema={schema}"]
    if meta is not None:
        lines.append("#meta " + json.dumps(dict(meta), sort_keys=True))
    lines.append(",".join(columns))
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                cells.append(float_cell(v))
            else:
                cells.append(str(v))
        if len(cells) != len(columns):
            raise ValueError(
                f"row width {len(cells)} != header width {len(columns)}")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_csv(path, schema: str, columns: Sequence[str], rows,
              meta: Mapping | None = None) -> None:
    Path(path).write_text(csv_text(schema, columns, rows, meta),
                          encoding="utf-8")


def read_csv(path) -> SchemaCsv:
    """Parse a schema-tagged CSV produced by this package."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#schema="):
        raise ValueError(f"{path}: missing #schema= header line")
    schema = lines[0].split("=", 1)[1]
    meta: dict = {}
    body = lines[1:]
    if body and body[0].startswith("#meta "):
        meta = json.loads(body[0][len("#meta "):])
        body = body[1:]
    if not body:
        raise ValueError(f"{path}: no header row after schema line")
    columns = tuple(body[0].split(","))
    data = [ln.split(",") for ln in body[1:]]
    if any(len(r) != len(columns) for r in data):
        raise ValueError(f"{path}: ragged rows")
    rows = np.array(data, dtype=object).reshape(len(data), len(columns))
    return SchemaCsv(schema=schema, meta=meta, columns=columns, rows=rows)


def write_json(path, payload: Mapping) -> None:
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n",
        encoding="utf-8")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def load_toml(path) -> dict:
    with open(path, "rb") as handle:
        return _toml.load(handle)
